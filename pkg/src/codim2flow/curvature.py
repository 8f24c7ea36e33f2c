"""Pointwise curvature algebra for surfaces of codimension two in R^4.

A point on such a surface carries a second fundamental form with four
independent components once frames are adapted: rotate the normal frame so
the first normal direction is H/|H| and the tangent frame so the first
shape operator is diagonal.  In that special orthonormal frame the shape
operators are

    A1 = [[h/2 + a, 0], [0, h/2 - a]],    A2 = [[b, c], [c, -b]],

with h = |H|.  Every scalar invariant used by the flow and the pinching
certifier is a polynomial in (h, a, b, c); this module provides those
closed forms together with independent tensor-sum routes used as oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMeanCurvature, UmbilicPoint

TOL_H = 1e-12
TOL_FRAME_REL = 1e-9


@dataclass(frozen=True)
class SpecialFrameState:
    """Second fundamental form reduced to the special orthonormal frame.

    h is |H| (nonnegative); a, b, c are the traceless components. Canonical
    representatives have a >= 0 and c >= 0, with c = 0 whenever the first
    shape operator is umbilic to tolerance.
    """

    h: float
    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.h < 0:
            raise ValueError(f"h must be nonnegative, got {self.h}")

    def scaled(self, lam: float) -> "SpecialFrameState":
        return SpecialFrameState(self.h * lam, self.a * lam, self.b * lam, self.c * lam)


@dataclass(frozen=True, eq=False)
class ShapeTensor:
    """Frame-explicit second fundamental form h_{ij,alpha}.

    components has shape (2, 2, 2) indexed [i, j, alpha] and is symmetric
    in (i, j); mean_curvature is the 2-vector H_alpha = sum_i h_{ii,alpha}
    in the same normal frame.
    """

    components: np.ndarray
    mean_curvature: np.ndarray

    def __init__(self, components, mean_curvature=None):
        comp = np.asarray(components, dtype=float)
        if comp.shape != (2, 2, 2):
            raise ValueError(f"components must have shape (2,2,2), got {comp.shape}")
        if not np.allclose(comp, comp.transpose(1, 0, 2), rtol=0, atol=1e-12 * (1 + np.abs(comp).max())):
            raise ValueError("components must be symmetric in the first two indices")
        trace = comp[0, 0] + comp[1, 1]
        if mean_curvature is None:
            mc = trace
        else:
            mc = np.asarray(mean_curvature, dtype=float)
            if not np.allclose(mc, trace, rtol=0, atol=1e-9 * (1 + np.abs(trace).max())):
                raise ValueError("mean_curvature inconsistent with trace of components")
        object.__setattr__(self, "components", comp)
        object.__setattr__(self, "mean_curvature", mc)

    @property
    def traceless(self) -> np.ndarray:
        """Traceless part: h_{ij,alpha} - (H_alpha/2) delta_ij."""
        out = self.components.copy()
        out[0, 0] -= self.mean_curvature / 2
        out[1, 1] -= self.mean_curvature / 2
        return out


@dataclass(frozen=True)
class CurvatureScalars:
    norm_a2: float        # |A|^2
    norm_acirc2: float    # |A-circ|^2, the traceless part
    gauss_k: float        # intrinsic Gauss curvature K
    normal_kperp: float   # normal curvature K-perp
    norm_rm_perp2: float  # |Rm-perp|^2 = 4 (K-perp)^2
    r1: float             # reaction term of |A|^2
    r2: float             # reaction term of |H|^2
    r3: float             # reaction term of |K-perp|


def scalars(s: SpecialFrameState) -> CurvatureScalars:
    """All scalar invariants from the special-frame closed forms.

    This is the production path; tensor_scalars is the tensor-sum oracle.
    """
    h, a, b, c = s.h, s.a, s.b, s.c
    norm_a2 = h * h / 2 + 2 * a * a + 2 * b * b + 2 * c * c
    norm_acirc2 = 2 * a * a + 2 * b * b + 2 * c * c
    gauss_k = h * h / 4 - a * a - b * b - c * c
    kperp = 2 * a * c
    rm_perp2 = 4 * (kperp * kperp)
    c11 = h * h / 2 + 2 * a * a
    c12 = 2 * a * b
    c22 = 2 * b * b + 2 * c * c
    r1 = c11 * c11 + 2 * c12 * c12 + c22 * c22 + rm_perp2
    r2 = h * h * c11
    r3 = kperp * (norm_a2 + 2 * norm_acirc2)
    return CurvatureScalars(norm_a2, norm_acirc2, gauss_k, kperp, rm_perp2, r1, r2, r3)


def lift(s: SpecialFrameState) -> ShapeTensor:
    """Embed a special-frame state as an explicit ShapeTensor."""
    comp = np.empty((2, 2, 2))
    comp[:, :, 0] = [[s.h / 2 + s.a, 0.0], [0.0, s.h / 2 - s.a]]
    comp[:, :, 1] = [[s.b, s.c], [s.c, -s.b]]
    return ShapeTensor(comp)


def _rot2(theta: float) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    return np.array([[ct, -st], [st, ct]])


def to_special_frame(t: ShapeTensor, tol_h: float = TOL_H) -> SpecialFrameState:
    """Reduce a general-frame shape tensor to the special orthonormal frame.

    Rotates the normal frame so nu_1 = H/|H|, the tangent frame to
    diagonalize the first shape operator (larger eigenvalue first, so
    a >= 0), and flips the second tangent vector so c >= 0.  When the first
    shape operator is umbilic to tolerance the tangent frame is instead
    chosen to diagonalize the second shape operator (c = 0 convention).

    Raises DegenerateMeanCurvature when |H| <= tol_h: the two normal
    directions only split canonically when the mean curvature is nonzero.
    """
    comp = t.components
    H = t.mean_curvature
    nh = math.hypot(H[0], H[1])
    if nh <= tol_h:
        raise DegenerateMeanCurvature(f"|H| = {nh:.3e} <= {tol_h:.3e}")

    # Normal rotation: nu_1 along H, nu_2 its orthogonal complement.
    e1 = H / nh
    a1 = e1[0] * comp[:, :, 0] + e1[1] * comp[:, :, 1]
    a2 = -e1[1] * comp[:, :, 0] + e1[0] * comp[:, :, 1]

    # Tangent rotation diagonalizing A1 with descending eigenvalues.
    theta = 0.5 * math.atan2(2 * a1[0, 1], a1[0, 0] - a1[1, 1])
    r = _rot2(theta)
    a1d = r.T @ a1 @ r
    a2d = r.T @ a2 @ r
    a = 0.5 * (a1d[0, 0] - a1d[1, 1])
    b = 0.5 * (a2d[0, 0] - a2d[1, 1])
    c = 0.5 * (a2d[0, 1] + a2d[1, 0])

    norm_a = math.sqrt(np.sum(comp * comp))
    tol_frame = TOL_FRAME_REL * (norm_a + nh)
    if a < tol_frame:
        # A1 is umbilic to tolerance: resolve the tangent ambiguity by
        # diagonalizing A2 instead, which forces c = 0.
        theta2 = 0.5 * math.atan2(2 * c, 2 * b)
        r2m = _rot2(theta2)
        a1dd = r2m.T @ a1d @ r2m
        a = 0.5 * (a1dd[0, 0] - a1dd[1, 1])
        b = math.hypot(b, c)
        c = 0.0
        if a < 0:
            a, b = -a, -b
    elif c < 0:
        c = -c  # flip the second tangent vector

    return SpecialFrameState(nh, a, b, c)


def special_frame_fields(comp: np.ndarray, mean_curv: np.ndarray, tol_h: float = TOL_H):
    """Vectorized special-frame reduction for per-vertex mesh data.

    comp has shape (n, 2, 2, alpha) and mean_curv shape (n, 2).  Returns
    arrays (h, a, b, c).  Entries with |H| <= tol_h come back as NaN in
    (a, b, c) so callers can flag them rather than abort a whole mesh.
    """
    comp = np.asarray(comp, dtype=float)
    mean_curv = np.asarray(mean_curv, dtype=float)
    h = np.hypot(mean_curv[:, 0], mean_curv[:, 1])
    good = h > tol_h
    e1 = np.zeros_like(mean_curv)
    e1[good] = mean_curv[good] / h[good, None]

    a1 = e1[:, 0, None, None] * comp[:, :, :, 0] + e1[:, 1, None, None] * comp[:, :, :, 1]
    a2 = -e1[:, 1, None, None] * comp[:, :, :, 0] + e1[:, 0, None, None] * comp[:, :, :, 1]

    theta = 0.5 * np.arctan2(2 * a1[:, 0, 1], a1[:, 0, 0] - a1[:, 1, 1])
    ct, st = np.cos(theta), np.sin(theta)
    # a = rho, the eigenvalue half-spread of A1 (>= 0 by construction)
    a = np.hypot(0.5 * (a1[:, 0, 0] - a1[:, 1, 1]), a1[:, 0, 1])
    # rotate A2 by the same tangent rotation
    b = (0.5 * (a2[:, 0, 0] - a2[:, 1, 1])) * (ct * ct - st * st) + (a2[:, 0, 1]) * 2 * ct * st
    c = -(0.5 * (a2[:, 0, 0] - a2[:, 1, 1])) * 2 * ct * st + a2[:, 0, 1] * (ct * ct - st * st)
    c = np.abs(c)

    scale = np.sqrt(np.einsum("nija,nija->n", comp, comp)) + h
    deg = a < TOL_FRAME_REL * scale
    if np.any(deg):
        b = np.where(deg, np.hypot(b, c), b)
        c = np.where(deg, 0.0, c)

    a = np.where(good, a, np.nan)
    b = np.where(good, b, np.nan)
    c = np.where(good, c, np.nan)
    return h, a, b, c


def field_scalars(h, a, b, c) -> dict:
    """Vectorized closed-form scalars for per-vertex frame fields.

    Same formulas as scalars(); accepts equal-shaped arrays, returns a dict
    of arrays keyed like CurvatureScalars fields (kperp is canonical, >= 0).
    """
    norm_a2 = h * h / 2 + 2 * a * a + 2 * b * b + 2 * c * c
    norm_acirc2 = 2 * a * a + 2 * b * b + 2 * c * c
    gauss_k = h * h / 4 - a * a - b * b - c * c
    kperp = 2 * a * c
    return {
        "norm_a2": norm_a2,
        "norm_acirc2": norm_acirc2,
        "gauss_k": gauss_k,
        "normal_kperp": kperp,
        "simons_z": 2 * gauss_k * norm_acirc2 - 2 * kperp * kperp,
    }


def _gram(comp: np.ndarray) -> np.ndarray:
    return np.einsum("ija,ijb->ab", comp, comp)


def tensor_scalars(t: ShapeTensor) -> CurvatureScalars:
    """Scalar invariants from raw tensor sums in the given frame.

    Oracle route, independent of the special-frame reduction.  The sign of
    normal_kperp (and hence r3) depends on frame orientation; only the
    absolute values are frame invariant.
    """
    comp = t.components
    H = t.mean_curvature
    norm_a2 = float(np.sum(comp * comp))
    norm_h2 = float(H @ H)
    tr = t.traceless
    norm_acirc2 = float(np.sum(tr * tr))
    gauss_k = 0.5 * (norm_h2 - norm_a2)

    # R-perp_{ij,alpha,beta} = sum_p h_{ip,alpha} h_{jp,beta} - h_{jp,alpha} h_{ip,beta}
    rp = np.einsum("ipa,jpb->ijab", comp, comp)
    rperp = rp - rp.transpose(1, 0, 2, 3)
    kperp = float(rperp[0, 1, 0, 1])
    rm_perp2 = float(np.sum(rperp * rperp))

    gram = _gram(comp)
    r1 = float(np.sum(gram * gram)) + rm_perp2
    hw = np.einsum("a,ija->ij", H, comp)
    r2 = float(np.sum(hw * hw))
    r3 = _kperp_reaction(comp, H)
    return CurvatureScalars(norm_a2, norm_acirc2, gauss_k, kperp, rm_perp2, r1, r2, r3)


def _kperp_reaction(comp: np.ndarray, H: np.ndarray) -> float:
    """Zero-order reaction in the evolution of K-perp, by direct product rule.

    Applies the cubic reaction of the second fundamental form evolution to
    each factor of K-perp = sum_p (h_{1p1} h_{2p2} - h_{2p1} h_{1p2}).
    """
    a_mats = [comp[:, :, 0], comp[:, :, 1]]
    gram = _gram(comp)
    p = a_mats[0] @ a_mats[0] + a_mats[1] @ a_mats[1]
    n_mats = []
    for al in range(2):
        n = gram[al, 0] * a_mats[0] + gram[al, 1] * a_mats[1]
        n = n + p @ a_mats[al] + a_mats[al] @ p
        n = n - 2 * (a_mats[0] @ a_mats[al] @ a_mats[0] + a_mats[1] @ a_mats[al] @ a_mats[1])
        n_mats.append(n)
    m = n_mats[0] @ a_mats[1] + a_mats[0] @ n_mats[1]
    return float(m[0, 1] - m[1, 0])


def simons_z_tensor(t: ShapeTensor) -> float:
    """Nonlinearity of the contracted Simons identity, as raw tensor sums."""
    comp = t.components
    H = t.mean_curvature
    cubic = float(np.einsum("a,ipa,ijb,pjb->", H, comp, comp, comp))
    gram = _gram(comp)
    rp = np.einsum("ipa,jpb->ijab", comp, comp)
    rperp = rp - rp.transpose(1, 0, 2, 3)
    return cubic - float(np.sum(gram * gram)) - float(np.sum(rperp * rperp))


def simons_z_closed(s: SpecialFrameState) -> float:
    """Closed form of the Simons nonlinearity: 2 K |A-circ|^2 - 2 (K-perp)^2."""
    sc = scalars(s)
    return 2 * sc.gauss_k * sc.norm_acirc2 - 2 * sc.normal_kperp ** 2


def pinch_q(s: SpecialFrameState, k: float, gamma: float, eps: float = 0.0) -> float:
    """Pinching quantity Q = |A|^2 + 2 gamma |K-perp| - k |H|^2 + eps.

    Q < 0 is the curvature condition whose preservation the flow monitors.
    """
    sc = scalars(s)
    return sc.norm_a2 + 2 * gamma * abs(sc.normal_kperp) - k * s.h * s.h + eps


def f_sigma(s: SpecialFrameState, sigma: float, gamma: float, tol_h: float = TOL_H) -> float:
    """Scale-weighted pinching ratio (|A-circ|^2 + 2 gamma |K-perp|) / |H|^(2(1-sigma))."""
    if not 0.0 <= sigma < 1.0:
        raise ValueError(f"sigma must lie in [0, 1), got {sigma}")
    if s.h <= tol_h:
        raise DegenerateMeanCurvature(f"|H| = {s.h:.3e} <= {tol_h:.3e}")
    sc = scalars(s)
    num = sc.norm_acirc2 + 2 * gamma * abs(sc.normal_kperp)
    return num / s.h ** (2 * (1 - sigma))


def z_lower_bound_ratio(s: SpecialFrameState, gamma: float, tol_h: float = TOL_H) -> float:
    """Pointwise ratio Z / ((|A-circ|^2 + 2 gamma |K-perp|) |H|^2).

    Positive lower bounds of this ratio over a pinched region certify the
    Simons-nonlinearity floor used by the integral estimates.
    """
    if s.h <= tol_h:
        raise DegenerateMeanCurvature(f"|H| = {s.h:.3e} <= {tol_h:.3e}")
    sc = scalars(s)
    denom = (sc.norm_acirc2 + 2 * gamma * abs(sc.normal_kperp)) * s.h * s.h
    if denom <= TOL_FRAME_REL * (sc.norm_a2 + s.h * s.h) ** 2:
        raise UmbilicPoint("pinching numerator vanishes; ratio undefined")
    z = 2 * sc.gauss_k * sc.norm_acirc2 - 2 * sc.normal_kperp ** 2
    return z / denom


def frame_dump(s: SpecialFrameState) -> dict:
    """Debug dump: frame components plus all scalars, JSON-serializable."""
    sc = scalars(s)
    return {
        "h": s.h,
        "a": s.a,
        "b": s.b,
        "c": s.c,
        "normA2": sc.norm_a2,
        "normAcirc2": sc.norm_acirc2,
        "gaussK": sc.gauss_k,
        "normalKperp": sc.normal_kperp,
        "normRmPerp2": sc.norm_rm_perp2,
        "R1": sc.r1,
        "R2": sc.r2,
        "R3": sc.r3,
    }
