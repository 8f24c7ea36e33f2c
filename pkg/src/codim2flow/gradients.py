"""First covariant derivative of the second fundamental form, flat ambient.

With a flat ambient space the Codazzi equations make grad-A totally
symmetric in its three tangent indices, so each normal direction carries
four independent components.  We store them by the number of 2-indices in
the symmetric pattern:

    u = (D_1 h_111, D_2 h_111, D_1 h_221, D_2 h_221)   for alpha = 1
    v = (D_1 h_112, D_2 h_112, D_1 h_222, D_2 h_222)   for alpha = 2

This module evaluates the gradient norms, the trace orthogonal splitting,
the evolution cross term of the normal curvature, and the gradient
inequalities the pinching argument relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import SpecialFrameState

# multiplicity of each symmetric pattern (count of distinct index orders)
_WEIGHTS = np.array([1.0, 3.0, 3.0, 1.0])


@dataclass(frozen=True, eq=False)
class GradientState:
    """Independent components of the totally symmetric tensor D_i h_{jk,alpha}."""

    u: np.ndarray
    v: np.ndarray

    def __init__(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.shape != (4,) or v.shape != (4,):
            raise ValueError("u and v must each have 4 components")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def component(self, i: int, j: int, k: int, alpha: int) -> float:
        """Full tensor component D_i h_{jk,alpha} (indices in {0,1})."""
        n2 = (i == 1) + (j == 1) + (k == 1)
        return (self.u, self.v)[alpha][n2]

    def scaled(self, lam: float) -> "GradientState":
        return GradientState(self.u * lam, self.v * lam)


@dataclass(frozen=True)
class GradientSlacks:
    """LHS - RHS of the three gradient inequalities (n = 2)."""

    trace_bound: float       # |DA|^2 - (3/4) |DH|^2
    traceless_bound: float   # |DA|^2 - (1/2)|DH|^2 - (1/3)|DA|^2
    kperp_evol_bound: float  # |DA|^2 - 2 * evol cross term of K-perp


def norm_grad_a2(g: GradientState) -> float:
    """|DA|^2 with symmetric-pattern multiplicities (1, 3, 3, 1)."""
    return float(_WEIGHTS @ (g.u * g.u) + _WEIGHTS @ (g.v * g.v))


def norm_grad_h2(g: GradientState) -> float:
    """|DH|^2 from the Codazzi-tensor traces D_i H_alpha = sum_k D_i h_{kk,alpha}."""
    tot = 0.0
    for x in (g.u, g.v):
        tot += (x[0] + x[2]) ** 2 + (x[1] + x[3]) ** 2
    return float(tot)


def inner(g1: GradientState, g2: GradientState) -> float:
    return float(_WEIGHTS @ (g1.u * g2.u) + _WEIGHTS @ (g1.v * g2.v))


def decompose_ef(g: GradientState) -> tuple[GradientState, GradientState]:
    """Split DA into its trace part E and trace-free part F.

    E_{ijk} = (1/4)(g_ij D_k H + g_ik D_j H + g_jk D_i H) for surfaces; the
    split is orthogonal with |E|^2 = (3/4)|DH|^2, which is also the content
    of the first gradient inequality.
    """
    parts = []
    for x in (g.u, g.v):
        w1, w2 = x[0] + x[2], x[1] + x[3]
        parts.append(np.array([0.75 * w1, 0.25 * w2, 0.25 * w1, 0.75 * w2]))
    e = GradientState(parts[0], parts[1])
    f = GradientState(g.u - e.u, g.v - e.v)
    return e, f


def nabla_evol_kperp(g: GradientState) -> float:
    """Gradient cross term in the evolution of the normal curvature.

    Closed form of sum_{p,q} (D_q h_{1p,1} D_q h_{2p,2} - D_q h_{2p,1} D_q h_{1p,2})
    after total symmetry is applied.
    """
    u, v = g.u, g.v
    return float(u[0] * v[1] - u[1] * v[0] + 2 * (u[1] * v[2] - u[2] * v[1]) + u[2] * v[3] - u[3] * v[2])


def nabla_evol_kperp_raw(g: GradientState) -> float:
    """Same cross term from the literal double sum; oracle for the closed form."""
    tot = 0.0
    for p in range(2):
        for q in range(2):
            tot += g.component(q, 0, p, 0) * g.component(q, 1, p, 1)
            tot -= g.component(q, 1, p, 0) * g.component(q, 0, p, 1)
    return float(tot)


def check_gradient_inequalities(g: GradientState) -> GradientSlacks:
    """Slack (LHS - RHS) of the three gradient estimates; all should be >= 0."""
    na2 = norm_grad_a2(g)
    nh2 = norm_grad_h2(g)
    return GradientSlacks(
        trace_bound=na2 - 0.75 * nh2,
        traceless_bound=na2 - 0.5 * nh2 - na2 / 3.0,
        kperp_evol_bound=na2 - 2.0 * nabla_evol_kperp(g),
    )


def grad_kperp(s: SpecialFrameState, g: GradientState) -> np.ndarray:
    """Covariant gradient of K-perp by the product rule on its defining sum.

    Every term carries a traceless curvature factor, so the gradient
    vanishes at umbilic points regardless of g.
    """
    h, a, b, c = s.h, s.a, s.b, s.c
    comp = np.empty((2, 2, 2))
    comp[:, :, 0] = [[h / 2 + a, 0.0], [0.0, h / 2 - a]]
    comp[:, :, 1] = [[b, c], [c, -b]]
    out = np.zeros(2)
    for q in range(2):
        tot = 0.0
        for p in range(2):
            tot += g.component(q, 0, p, 0) * comp[1, p, 1] + comp[0, p, 0] * g.component(q, 1, p, 1)
            tot -= g.component(q, 1, p, 0) * comp[0, p, 1] + comp[1, p, 0] * g.component(q, 0, p, 1)
        out[q] = tot
    return out


def grad_kperp_bound(s: SpecialFrameState, g: GradientState) -> tuple[float, float]:
    """Returns (|grad K-perp|, 4 |A-circ| |DA|); the first never exceeds the second."""
    gk = grad_kperp(s, g)
    lhs = float(np.hypot(gk[0], gk[1]))
    acirc = np.sqrt(2 * s.a ** 2 + 2 * s.b ** 2 + 2 * s.c ** 2)
    rhs = 4.0 * float(acirc) * np.sqrt(norm_grad_a2(g))
    return lhs, float(rhs)


def random_states(rng: np.random.Generator, count: int) -> np.ndarray:
    """(count, 8) array of i.i.d. standard normal gradient components."""
    return rng.standard_normal((count, 8))


def sweep_inequalities(samples: np.ndarray) -> dict:
    """Vectorized slack minima of the three gradient inequalities.

    samples is (n, 8) with columns (u0..u3, v0..v3).  Returns the minimum
    slack per inequality, normalized by |DA|^2 so homogeneity cannot hide a
    violation, plus the argmin rows.
    """
    u = samples[:, :4]
    v = samples[:, 4:]
    w = _WEIGHTS
    na2 = (u * u) @ w + (v * v) @ w
    nh2 = (u[:, 0] + u[:, 2]) ** 2 + (u[:, 1] + u[:, 3]) ** 2
    nh2 = nh2 + (v[:, 0] + v[:, 2]) ** 2 + (v[:, 1] + v[:, 3]) ** 2
    cross = (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
             + 2 * (u[:, 1] * v[:, 2] - u[:, 2] * v[:, 1])
             + u[:, 2] * v[:, 3] - u[:, 3] * v[:, 2])
    scale = np.maximum(na2, 1e-300)
    slacks = {
        "grad_trace_bound": (na2 - 0.75 * nh2) / scale,
        "grad_traceless_bound": (na2 - 0.5 * nh2 - na2 / 3.0) / scale,
        "grad_kperp_evol_bound": (na2 - 2.0 * cross) / scale,
    }
    out = {}
    for name, sl in slacks.items():
        i = int(np.argmin(sl))
        out[name] = {"slack_min": float(sl[i]), "witness": samples[i].tolist()}
    return out


def min_slack_kperp_evol(rng: np.random.Generator, count: int = 10 ** 6,
                         refine_rounds: int = 8) -> float:
    """Sampled minimum slack of the third inequality on the |DA|^2 = 1 sphere.

    Random search plus shrinking Gaussian refinement around the incumbent;
    the exact minimum (an 8x8 eigenvalue problem) is zero, so this reports
    how tight sampling alone gets.
    """
    def slack(x):
        u, v = x[:, :4], x[:, 4:]
        na2 = (u * u) @ _WEIGHTS + (v * v) @ _WEIGHTS
        cross = (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
                 + 2 * (u[:, 1] * v[:, 2] - u[:, 2] * v[:, 1])
                 + u[:, 2] * v[:, 3] - u[:, 3] * v[:, 2])
        return (na2 - 2 * cross) / na2

    x = rng.standard_normal((count, 8))
    s = slack(x)
    best_i = int(np.argmin(s))
    best, best_x = float(s[best_i]), x[best_i]
    radius = 0.3
    for _ in range(refine_rounds):
        x = best_x + radius * rng.standard_normal((4096, 8))
        s = slack(x)
        i = int(np.argmin(s))
        if s[i] < best:
            best, best_x = float(s[i]), x[i]
        radius *= 0.5
    return best


def exact_min_slack_kperp_evol() -> float:
    """Exact minimum slack of the third inequality on the unit sphere.

    Solves the symmetric 8x8 eigenvalue problem for the cross-term quadratic
    form in the weighted metric; confirmation for the sampled minimum.
    """
    w = np.concatenate([_WEIGHTS, _WEIGHTS])
    # cross term as a symmetric bilinear form on (u, v)
    m = np.zeros((8, 8))
    pairs = [((0, 5), 1.0), ((1, 4), -1.0), ((1, 6), 2.0), ((2, 5), -2.0),
             ((2, 7), 1.0), ((3, 6), -1.0)]
    for (i, j), coef in pairs:
        m[i, j] += coef / 2
        m[j, i] += coef / 2
    d = 1.0 / np.sqrt(w)
    mw = d[:, None] * m * d[None, :]
    lam_max = float(np.linalg.eigvalsh(mw)[-1])
    return 1.0 - 2.0 * lam_max
