import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codim2flow.curvature import (
    ShapeTensor,
    SpecialFrameState,
    f_sigma,
    frame_dump,
    lift,
    pinch_q,
    scalars,
    simons_z_closed,
    simons_z_tensor,
    special_frame_fields,
    tensor_scalars,
    to_special_frame,
    z_lower_bound_ratio,
)
from codim2flow.errors import DegenerateMeanCurvature, UmbilicPoint

finite = st.floats(min_value=-10, max_value=10, allow_nan=False)
pos_h = st.floats(min_value=1e-3, max_value=10, allow_nan=False)


def frame_states():
    return st.builds(SpecialFrameState, h=pos_h, a=finite, b=finite, c=finite)


def random_shape_tensor(rng, min_h=1e-2):
    while True:
        comp = rng.standard_normal((2, 2, 2))
        comp = 0.5 * (comp + comp.transpose(1, 0, 2))
        t = ShapeTensor(comp)
        if math.hypot(*t.mean_curvature) > min_h:
            return t


def rot2(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


# ---------------------------------------------------------------------------
# special-frame reduction


def test_shape_tensor_validates_symmetry():
    comp = np.zeros((2, 2, 2))
    comp[0, 1, 0] = 1.0  # symmetric partner left at zero
    with pytest.raises(ValueError):
        ShapeTensor(comp)


def test_shape_tensor_validates_trace_consistency():
    comp = np.zeros((2, 2, 2))
    comp[:, :, 0] = np.eye(2)
    ShapeTensor(comp, mean_curvature=[2.0, 0.0])
    with pytest.raises(ValueError):
        ShapeTensor(comp, mean_curvature=[1.0, 0.0])


def test_round_sphere_point_reduces_trivially():
    comp = np.zeros((2, 2, 2))
    comp[:, :, 0] = np.eye(2)
    s = to_special_frame(ShapeTensor(comp))
    assert (s.h, s.a, s.b, s.c) == (2.0, 0.0, 0.0, 0.0)


def test_already_special_frame_passthrough():
    comp = np.zeros((2, 2, 2))
    comp[:, :, 0] = np.diag([3.0, 1.0])
    comp[:, :, 1] = np.array([[0.0, 1.0], [1.0, 0.0]])
    s = to_special_frame(ShapeTensor(comp))
    assert s.h == pytest.approx(4.0, abs=1e-14)
    assert s.a == pytest.approx(1.0, abs=1e-14)
    assert s.b == pytest.approx(0.0, abs=1e-14)
    assert s.c == pytest.approx(1.0, abs=1e-14)


def test_degenerate_mean_curvature_raises():
    comp = np.zeros((2, 2, 2))
    comp[:, :, 0] = np.diag([1.0, -1.0])
    with pytest.raises(DegenerateMeanCurvature):
        to_special_frame(ShapeTensor(comp))


def test_sign_convention_and_umbilic_branch(rng):
    for _ in range(200):
        t = random_shape_tensor(rng)
        s = to_special_frame(t)
        assert s.a >= 0 and s.c >= 0
    # umbilic A1: c must be zeroed by the A2-diagonalizing convention
    comp = np.zeros((2, 2, 2))
    comp[:, :, 0] = 1.3 * np.eye(2)
    comp[:, :, 1] = np.array([[0.4, 0.7], [0.7, -0.4]])
    s = to_special_frame(ShapeTensor(comp))
    assert s.c == 0.0
    assert s.a >= 0.0
    assert abs(s.b) == pytest.approx(math.hypot(0.4, 0.7), rel=1e-12)


def conjugate(t: ShapeTensor, r_tan, r_nor) -> ShapeTensor:
    comp = np.einsum("pi,qj,ba,pqb->ija", r_tan, r_tan, r_nor, t.components)
    return ShapeTensor(comp)


@settings(max_examples=150, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi),
       st.booleans(), st.booleans(), st.integers(0, 2 ** 32 - 1))
def test_frame_invariance(theta, phi, flip_tan, flip_nor, seed):
    rng = np.random.default_rng(seed)
    t = random_shape_tensor(rng)
    r_tan, r_nor = rot2(theta), rot2(phi)
    if flip_tan:
        r_tan = r_tan @ np.diag([1.0, -1.0])
    if flip_nor:
        r_nor = r_nor @ np.diag([1.0, -1.0])
    sc0 = scalars(to_special_frame(t))
    sc1 = scalars(to_special_frame(conjugate(t, r_tan, r_nor)))
    for f in ("norm_a2", "norm_acirc2", "gauss_k", "norm_rm_perp2", "r1", "r2"):
        x0, x1 = getattr(sc0, f), getattr(sc1, f)
        assert abs(x0 - x1) <= 1e-10 * (1 + abs(x0))
    assert abs(abs(sc0.normal_kperp) - abs(sc1.normal_kperp)) <= 1e-10 * (1 + abs(sc0.normal_kperp))


def test_reduction_reproduces_invariant_scalars(rng):
    for _ in range(300):
        t = random_shape_tensor(rng)
        ts = tensor_scalars(t)
        ss = scalars(to_special_frame(t))
        assert ss.norm_a2 == pytest.approx(ts.norm_a2, rel=1e-12)
        assert ss.norm_acirc2 == pytest.approx(ts.norm_acirc2, rel=1e-12, abs=1e-12)
        assert ss.gauss_k == pytest.approx(ts.gauss_k, rel=1e-12, abs=1e-12)
        assert abs(ss.normal_kperp) == pytest.approx(abs(ts.normal_kperp), rel=1e-12, abs=1e-12)
        assert ss.norm_rm_perp2 == pytest.approx(ts.norm_rm_perp2, rel=1e-12, abs=1e-12)
        assert ss.r1 == pytest.approx(ts.r1, rel=1e-12)
        assert ss.r2 == pytest.approx(ts.r2, rel=1e-12, abs=1e-12)
        assert abs(ss.r3) == pytest.approx(abs(ts.r3), rel=1e-11, abs=1e-10)


def test_batched_frame_fields_match_scalar_path(rng):
    tensors = [random_shape_tensor(rng) for _ in range(100)]
    comp = np.stack([t.components for t in tensors])
    mc = np.stack([t.mean_curvature for t in tensors])
    h, a, b, c = special_frame_fields(comp, mc)
    for i, t in enumerate(tensors):
        s = to_special_frame(t)
        assert h[i] == pytest.approx(s.h, rel=1e-12)
        assert a[i] == pytest.approx(s.a, rel=1e-10, abs=1e-12)
        assert abs(b[i]) == pytest.approx(abs(s.b), rel=1e-10, abs=1e-12)
        assert c[i] == pytest.approx(s.c, rel=1e-10, abs=1e-12)


# ---------------------------------------------------------------------------
# scalars


def test_scalars_umbilic_point():
    sc = scalars(SpecialFrameState(2, 0, 0, 0))
    assert sc.norm_a2 == 2 and sc.gauss_k == 1 and sc.normal_kperp == 0
    assert sc.r1 == 4 and sc.r2 == 8 and sc.r3 == 0


def test_scalars_reference_point():
    sc = scalars(SpecialFrameState(4, 1, 0, 1))
    assert sc.norm_acirc2 == 4 and sc.gauss_k == 2
    assert sc.normal_kperp == 2 and sc.norm_rm_perp2 == 16


@settings(max_examples=100, deadline=None)
@given(pos_h, finite, finite)
def test_zero_a_kills_normal_curvature(h, b, c):
    sc = scalars(SpecialFrameState(h, 0.0, b, c))
    assert sc.normal_kperp == 0.0 and sc.r3 == 0.0


def test_scalars_against_tensor_sums(rng):
    # independent oracle: same quantities from raw sums on the lifted tensor
    for _ in range(300):
        h = abs(rng.standard_normal()) + 0.1
        s = SpecialFrameState(h, *rng.standard_normal(3))
        sc, ts = scalars(s), tensor_scalars(lift(s))
        for f in ("norm_a2", "norm_acirc2", "gauss_k", "normal_kperp",
                  "norm_rm_perp2", "r1", "r2", "r3"):
            assert getattr(sc, f) == pytest.approx(getattr(ts, f), rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(frame_states())
def test_gauss_identity_exact(s):
    sc = scalars(s)
    scale = s.h * s.h + sc.norm_a2
    assert abs(sc.norm_a2 + 2 * sc.gauss_k - s.h * s.h) <= 1e-14 * (1 + scale)


@settings(max_examples=200, deadline=None)
@given(frame_states())
def test_rm_perp_identity_exact(s):
    sc = scalars(s)
    # bit-exact with the product form (this platform's pow(x, 2) can differ
    # from x*x by one ulp)
    assert sc.norm_rm_perp2 == 4 * (sc.normal_kperp * sc.normal_kperp)


@settings(max_examples=200, deadline=None)
@given(frame_states())
def test_traceless_product_identity(s):
    # |Ac1|^2 |Ac2|^2 = 4 a^2 b^2 + (K-perp)^2
    lhs = (2 * s.a ** 2) * (2 * s.b ** 2 + 2 * s.c ** 2)
    rhs = 4 * s.a ** 2 * s.b ** 2 + 4 * s.a ** 2 * s.c ** 2
    assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(frame_states(), st.floats(min_value=0.1, max_value=3))
def test_homogeneity_degrees(s, lam):
    sc, scl = scalars(s), scalars(s.scaled(lam))
    for f, deg in (("norm_a2", 2), ("gauss_k", 2), ("normal_kperp", 2),
                   ("r1", 4), ("r2", 4), ("r3", 4)):
        assert getattr(scl, f) == pytest.approx(lam ** deg * getattr(sc, f), rel=1e-10, abs=1e-12)
    z0, zl = simons_z_closed(s), simons_z_closed(s.scaled(lam))
    assert zl == pytest.approx(lam ** 4 * z0, rel=1e-10, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(frame_states())
def test_r2_cauchy_schwarz(s):
    sc = scalars(s)
    assert sc.r2 <= sc.norm_a2 * s.h * s.h * (1 + 1e-13)


# ---------------------------------------------------------------------------
# Simons nonlinearity


def test_simons_z_tensor_reference_points():
    assert simons_z_tensor(lift(SpecialFrameState(2, 0, 0, 0))) == pytest.approx(0.0, abs=1e-12)
    assert simons_z_tensor(lift(SpecialFrameState(4, 1, 0, 1))) == pytest.approx(8.0, rel=1e-13)
    assert simons_z_tensor(lift(SpecialFrameState(2, 0, 0, 1))) == pytest.approx(0.0, abs=1e-12)


def test_simons_z_closed_reference_points():
    assert simons_z_closed(SpecialFrameState(4, 1, 0, 1)) == pytest.approx(8.0, rel=1e-13)
    assert simons_z_closed(SpecialFrameState(3, 0, 0, 0)) == 0.0


def test_simons_equivalence_sweep(rng):
    h = np.abs(rng.standard_normal(10 ** 5)) + 1e-3
    abc = rng.standard_normal((10 ** 5, 3))
    worst = 0.0
    for i in rng.choice(10 ** 5, size=2000, replace=False):
        s = SpecialFrameState(h[i], *abc[i])
        zt = simons_z_tensor(lift(s))
        zc = simons_z_closed(s)
        worst = max(worst, abs(zc - zt) / (1 + abs(zt)))
    assert worst <= 1e-12


# ---------------------------------------------------------------------------
# pinching quantities


def test_pinch_q_round_sphere():
    q = pinch_q(SpecialFrameState(2, 0, 0, 0), k=29 / 40, gamma=1 / 30, eps=0.0)
    assert q == pytest.approx(-0.9, rel=1e-13)


def test_pinch_q_clifford_point():
    # S^1(1/kappa) x S^1(1/kappa): |A|^2 = |H|^2 = 2 kappa^2, K-perp = 0
    kappa = 1.3
    s = SpecialFrameState(math.sqrt(2) * kappa, kappa / math.sqrt(2), 0.0, 0.0)
    sc = scalars(s)
    assert sc.norm_a2 == pytest.approx(s.h ** 2, rel=1e-13)
    assert sc.gauss_k == pytest.approx(0.0, abs=1e-13)
    for k in (0.6, 29 / 40, 0.99):
        assert pinch_q(s, k, gamma=1 - 4 * k / 3) == pytest.approx((1 - k) * s.h ** 2, rel=1e-12)
        assert pinch_q(s, k, gamma=1 - 4 * k / 3) > 0


@settings(max_examples=100, deadline=None)
@given(frame_states())
def test_pinch_q_reduces_to_norm_a2(s):
    assert pinch_q(s, k=0.0, gamma=0.0, eps=0.0) == pytest.approx(scalars(s).norm_a2, rel=1e-13)
    assert pinch_q(s, 0.0, 0.0, 0.0) >= 0


def test_f_sigma_values():
    assert f_sigma(SpecialFrameState(2, 0, 0, 0), sigma=0.3, gamma=0.5) == 0.0
    got = f_sigma(SpecialFrameState(4, 1, 0, 1), sigma=0.0, gamma=1 / 30)
    assert got == pytest.approx(31 / 120, rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(frame_states(), st.floats(min_value=0.1, max_value=5))
def test_f_sigma_scale_invariant_at_sigma_zero(s, lam):
    f0 = f_sigma(s, 0.0, gamma=1 / 30)
    fl = f_sigma(s.scaled(lam), 0.0, gamma=1 / 30)
    assert fl == pytest.approx(f0, rel=1e-10, abs=1e-13)


def test_f_sigma_degenerate_h():
    with pytest.raises(DegenerateMeanCurvature):
        f_sigma(SpecialFrameState(0.0, 1.0, 0.0, 0.0), 0.1, 0.5)
    with pytest.raises(ValueError):
        f_sigma(SpecialFrameState(1.0, 1.0, 0.0, 0.0), 1.0, 0.5)


def test_z_ratio_umbilic_raises():
    with pytest.raises(UmbilicPoint):
        z_lower_bound_ratio(SpecialFrameState(2, 0, 0, 0), gamma=1 / 30)


def test_z_ratio_boundary_case_reaches_zero():
    # |A|^2 = (5/6)|H|^2 with b = 0, a = c makes Z vanish exactly
    h = 1.0
    a = math.sqrt(1.0 / 12.0)  # |Ac|^2 = 4 a^2 = h^2 / 3
    s = SpecialFrameState(h, a, 0.0, a)
    sc = scalars(s)
    assert sc.norm_a2 == pytest.approx(5 / 6 * h * h, rel=1e-12)
    assert z_lower_bound_ratio(s, gamma=1 / 30) == pytest.approx(0.0, abs=1e-13)


def test_z_ratio_positive_inside_cone(rng):
    vals = []
    for _ in range(2000):
        d = np.abs(rng.standard_normal(3))
        x = rng.uniform(1e-4, 0.3)  # |Ac|^2 at h = 1, inside |A|^2 <= 0.8 |H|^2
        d *= math.sqrt(x / 2) / np.linalg.norm(d)
        vals.append(z_lower_bound_ratio(SpecialFrameState(1.0, *d), gamma=1 / 30))
    assert min(vals) > 0


# ---------------------------------------------------------------------------
# dump format


def test_frame_dump_round_trips_json():
    d = frame_dump(SpecialFrameState(4, 1, 0, 1))
    blob = json.loads(json.dumps(d))
    assert blob["h"] == 4 and blob["a"] == 1
    assert blob["normAcirc2"] == 4 and blob["gaussK"] == 2
    assert blob["normalKperp"] == 2 and blob["normRmPerp2"] == 16
    assert set(blob) == {"h", "a", "b", "c", "normA2", "normAcirc2", "gaussK",
                         "normalKperp", "normRmPerp2", "R1", "R2", "R3"}
