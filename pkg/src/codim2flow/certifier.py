"""Sampling certification of the reaction-term sign on the pinching cone.

At a zero of Q = |A|^2 + 2 gamma |K-perp| - k |H|^2 + eps the value of
|H|^2 is pinned by the traceless data, and the zero-order reaction of Q
reduces to a quartic in (a, b, c) with eps corrections:

    (2 - 1/m) 4 a^2 b^2
  + (2 - 1/m) gamma |K| |Ac1|^2  + (6 - 3/m) gamma |K| |Ac2|^2
  + (2 - 1/m) |Ac2|^4            + (6 - (1 + 2 gamma^2)/m) |K|^2
  - eps (2 + 1/m) |Ac1|^2 - (2 eps/m) |Ac2|^2 - 3 eps gamma |K| / m - eps^2 / m

with m = k - 1/2, |Ac1|^2 = 2 a^2, |Ac2|^2 = 2 b^2 + 2 c^2 and
|K| = |2 a c|.  The reduction is exact: it equals the unreduced reaction
2 R1 + 2 gamma R3 - 2 k R2 with |H|^2 eliminated through Q = 0, and the
module cross-checks the two routes on every certification run.

The eps = 0 part is homogeneous of degree four, so sign certification only
needs the unit sphere of (a, b, c); negativity of the sampled maximum over
a k-range is located by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BracketInvalid, InvalidK, ResolutionTooCoarse

ORACLE_RTOL = 1e-10
MIN_GRID = 64


def _check_k(k) -> None:
    if not 0.5 < k <= 1.0:
        raise InvalidK(f"k must lie in (1/2, 1], got {k}")


def gamma_for_k(k, delta=0):
    """Coupling gamma = 1 - (4/3) k - delta tied to the gradient-term budget."""
    return 1 - 4 * k / 3 - delta


def reaction_expression(a, b, c, eps, k, gamma):
    """Reduced reaction on the Q = 0 cone.

    Plain arithmetic throughout: works elementwise on ndarrays and exactly
    on fractions.Fraction inputs.
    """
    inv_m = 2 / (2 * k - 1)
    a1c = 2 * a * a
    a2c = 2 * b * b + 2 * c * c
    w = abs(2 * a * c)
    return (
        (2 - inv_m) * 4 * a * a * b * b
        + (2 - inv_m) * gamma * w * a1c
        + (6 - 3 * inv_m) * gamma * w * a2c
        + (2 - inv_m) * a2c * a2c
        + (6 - (1 + 2 * gamma * gamma) * inv_m) * w * w
        - eps * (2 + inv_m) * a1c
        - 2 * eps * inv_m * a2c
        - 3 * eps * gamma * w * inv_m
        - eps * eps * inv_m
    )


def unreduced_reaction(a, b, c, eps, k, gamma):
    """Oracle: 2 R1 + 2 gamma R3 - 2 k R2 with |H|^2 forced by Q = 0.

    Evaluates the raw reaction terms on the canonical frame state whose
    squared mean curvature is (|Ac|^2 + 2 gamma |K| + eps)/(k - 1/2).
    Polynomial in |H|^2, so exact on rational inputs.
    """
    inv_m = 2 / (2 * k - 1)
    a1c = 2 * a * a
    a2c = 2 * b * b + 2 * c * c
    w = abs(2 * a * c)
    h2 = (a1c + a2c + 2 * gamma * w + eps) * inv_m
    c11 = h2 / 2 + a1c
    c12 = 2 * a * b
    rm_perp2 = 4 * w * w
    r1 = c11 * c11 + 2 * c12 * c12 + a2c * a2c + rm_perp2
    r2 = h2 * c11
    norm_a2 = h2 / 2 + a1c + a2c
    r3 = w * (norm_a2 + 2 * (a1c + a2c))
    return 2 * r1 + 2 * gamma * r3 - 2 * k * r2


@dataclass(frozen=True)
class ConeSample:
    """Point on the Q = 0 constraint surface, parametrized by traceless data."""

    a: float
    b: float
    c: float
    eps: float
    k: float
    gamma: float

    def __post_init__(self):
        _check_k(self.k)
        if self.eps < 0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")

    @property
    def induced_h2(self) -> float:
        """|H|^2 forced by the Q = 0 constraint."""
        num = 2 * self.a ** 2 + 2 * self.b ** 2 + 2 * self.c ** 2 \
            + 2 * self.gamma * abs(2 * self.a * self.c) + self.eps
        return num / (self.k - 0.5)


def reaction_at_zero_q(s: ConeSample) -> float:
    """Value of the reduced reaction expression at a cone sample."""
    return float(reaction_expression(s.a, s.b, s.c, s.eps, s.k, s.gamma))


def grouped_brackets(s: ConeSample, eta1: float, eta2: float) -> tuple[float, float]:
    """The two curly brackets of the grouped quadratic-form upper bound."""
    if not (0 <= eta1 <= 1 and 0 <= eta2 <= 1):
        raise ValueError("eta1 and eta2 must lie in [0, 1]")
    m = s.k - 0.5
    g = s.gamma
    a, c = s.a, s.c
    ac = abs(a * c)
    ck = 6 - (1 + 2 * g * g) / m
    b1 = (2 - 1 / m) * c * c + eta1 * (6 - 3 / m) * g * ac + eta2 * ck * a * a
    b2 = (2 - 1 / m) * g * a * a + (1 - eta2) * ck * ac + (1 - eta1) * (6 - 3 / m) * g * c * c
    return float(b1), float(b2)


def grouped_form_value(s: ConeSample, eta1: float, eta2: float) -> float:
    """Grouped upper bound 4 c^2 {B1} + 4 |ac| {B2} of the eps = 0 reaction.

    Discards the strictly negative b-coupled terms, so it dominates the
    exact reaction for every sample (equality when b = 0).  The total is
    independent of (eta1, eta2); the split only matters when each bracket
    is bounded separately.
    """
    b1, b2 = grouped_brackets(s, eta1, eta2)
    return float(4 * s.c ** 2 * b1 + 4 * abs(s.a * s.c) * b2)


def best_grouping(k: float, gamma: float, eta_res: int = 21, sphere_res: int = 96):
    """Search the (eta1, eta2) grid for the split keeping both brackets smallest.

    Returns (eta1, eta2, worst_bracket) where worst_bracket is the larger
    bracket value maximized over the unit sphere; both brackets nonpositive
    everywhere is the sufficient condition the grouping strategy aims for.
    """
    _check_k(k)
    a, b, c = _octant_sphere_grid(sphere_res)
    ac = np.abs(a * c)
    m = k - 0.5
    ck = 6 - (1 + 2 * gamma * gamma) / m
    etas = np.linspace(0.0, 1.0, eta_res)
    best = (0.0, 0.0, np.inf)
    for e1 in etas:
        for e2 in etas:
            b1 = (2 - 1 / m) * c * c + e1 * (6 - 3 / m) * gamma * ac + e2 * ck * a * a
            b2 = (2 - 1 / m) * gamma * a * a + (1 - e2) * ck * ac \
                + (1 - e1) * (6 - 3 / m) * gamma * c * c
            worst = float(np.maximum(b1, b2).max())
            if worst < best[2]:
                best = (float(e1), float(e2), worst)
    return best


def _octant_sphere_grid(res: int):
    """Unit-sphere grid on the canonical octant a >= 0, c >= 0 (b free)."""
    theta = np.linspace(0.0, np.pi, res)         # polar angle from the b axis
    phi = np.linspace(0.0, np.pi / 2, res)       # splits a from c
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    st = np.sin(th)
    a = (st * np.cos(ph)).ravel()
    b = np.cos(th).ravel()
    c = (st * np.sin(ph)).ravel()
    return a, b, c


@dataclass
class CertificateReport:
    k: float
    gamma: float
    delta: float
    max_value: float
    argmax: ConeSample
    sample_count: int
    grid: dict
    oracle_max_reldev: float
    worst: list = field(default_factory=list)  # (a, b, c, value), value descending

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "gamma": self.gamma,
            "delta": self.delta,
            "maxValue": self.max_value,
            "argmax": {"a": self.argmax.a, "b": self.argmax.b, "c": self.argmax.c},
            "sampleCount": self.sample_count,
            "grid": self.grid,
            "oracleMaxRelDev": self.oracle_max_reldev,
        }


def certify_negativity(k: float, delta: float = 0.0, grid: int = 256,
                       random_samples: int = 10 ** 6, seed: int = 0,
                       gamma_override: float | None = None,
                       worst_n: int = 100) -> CertificateReport:
    """Sample the eps = 0 reaction over the unit sphere and report its maximum.

    gamma defaults to 1 - (4/3) k - delta; pass gamma_override to decouple
    the two constants (e.g. the k = gamma = 1 borderline case).  Homogeneity
    of degree four reduces the sign question to the sphere:  an octant grid
    of the stated resolution plus seeded uniform random directions.
    """
    _check_k(k)
    if grid < MIN_GRID:
        raise ResolutionTooCoarse(f"grid resolution {grid} < {MIN_GRID}")
    gamma = gamma_for_k(k, delta) if gamma_override is None else gamma_override

    ga, gb, gc = _octant_sphere_grid(grid)
    rng = np.random.default_rng(seed)
    r = rng.standard_normal((random_samples, 3))
    r /= np.linalg.norm(r, axis=1, keepdims=True)
    a = np.concatenate([ga, np.abs(r[:, 0])])
    b = np.concatenate([gb, r[:, 1]])
    c = np.concatenate([gc, np.abs(r[:, 2])])

    values = reaction_expression(a, b, c, 0.0, k, gamma)

    # cross-check the reduction against the unreduced reaction on a subset
    idx = rng.choice(values.size, size=min(2000, values.size), replace=False)
    ora = unreduced_reaction(a[idx], b[idx], c[idx], 0.0, k, gamma)
    reldev = float(np.max(np.abs(values[idx] - ora) / (1.0 + np.abs(ora))))
    if reldev > ORACLE_RTOL:
        raise AssertionError(f"reduced/unreduced reaction mismatch: {reldev:.3e}")

    imax = int(np.argmax(values))
    order = np.argsort(values)[::-1][:worst_n]
    worst = [(float(a[i]), float(b[i]), float(c[i]), float(values[i])) for i in order]
    report = CertificateReport(
        k=float(k), gamma=float(gamma), delta=float(delta),
        max_value=float(values[imax]),
        argmax=ConeSample(float(a[imax]), float(b[imax]), float(c[imax]), 0.0, float(k), float(gamma)),
        sample_count=int(values.size),
        grid={"octant_sphere": [int(grid), int(grid)], "random": int(random_samples), "seed": int(seed)},
        oracle_max_reldev=reldev,
        worst=worst,
    )
    return report


@dataclass
class ThresholdScanResult:
    k_star: float
    tol_k: float
    bracket: tuple
    negative_below: bool   # certified negative at k_star - tol_k
    positive_above: bool   # certified positive at k_star + tol_k
    evaluations: int

    def as_dict(self) -> dict:
        return {
            "kStar": self.k_star,
            "tolK": self.tol_k,
            "bracket": list(self.bracket),
            "negativeBelow": self.negative_below,
            "positiveAbove": self.positive_above,
            "evaluations": self.evaluations,
        }


def threshold_scan(k_low: float, k_high: float, tol_k: float = 1e-3,
                   grid: int = 256, random_samples: int = 200_000,
                   seed: int = 0, delta: float = 0.0) -> ThresholdScanResult:
    """Bisect for the k where the sampled reaction maximum changes sign.

    Requires a valid bracket: negative maximum at k_low, positive at
    k_high.  gamma follows 1 - (4/3) k - delta throughout.
    """
    def max_at(k):
        return certify_negativity(k, delta=delta, grid=grid,
                                  random_samples=random_samples, seed=seed,
                                  worst_n=1).max_value

    lo_val, hi_val = max_at(k_low), max_at(k_high)
    evals = 2
    if not (lo_val < 0 and hi_val > 0):
        raise BracketInvalid(
            f"bracket does not straddle the sign change: "
            f"max({k_low}) = {lo_val:.3e}, max({k_high}) = {hi_val:.3e}")
    lo, hi = float(k_low), float(k_high)
    while hi - lo > tol_k:
        mid = 0.5 * (lo + hi)
        evals += 1
        if max_at(mid) < 0:
            lo = mid
        else:
            hi = mid
    k_star = 0.5 * (lo + hi)
    neg = max_at(max(k_star - tol_k, 0.5 + 1e-9)) < 0
    pos = max_at(min(k_star + tol_k, 1.0)) > 0
    evals += 2
    return ThresholdScanResult(k_star=k_star, tol_k=tol_k, bracket=(lo, hi),
                               negative_below=neg, positive_above=pos,
                               evaluations=evals)


def epsilon_z_scan(gamma: float, pinch_fraction: float, grid: int = 200,
                   random_samples: int = 200_000, seed: int = 0) -> float:
    """Sampled minimum of the Simons-nonlinearity ratio on a pinched cone.

    Scans states with |A|^2 <= pinch_fraction |H|^2 and returns
    min Z / ((|Ac|^2 + 2 gamma |K|) |H|^2); strictly positive whenever the
    pinch fraction stays below 5/6.  Normalizes |H| = 1 (the ratio is scale
    free) and covers the extreme normal-curvature slice b = 0 with a
    deterministic grid in addition to random states.
    """
    if not 0.5 < pinch_fraction < 5.0 / 6.0:
        raise ValueError(f"pinch_fraction must lie in (1/2, 5/6), got {pinch_fraction}")
    x_max = pinch_fraction - 0.5  # |Ac|^2 bound at |H| = 1

    def ratio(x, w):
        gauss = (1 - 2 * x) / 4
        return (2 * gauss * x - 2 * w * w) / (x + 2 * gamma * w)

    # deterministic worst-direction slice: b = 0, w sweeps [0, x/2]
    x = np.linspace(x_max / grid, x_max, grid)
    th = np.linspace(0.0, np.pi / 4, grid)
    xg, tg = np.meshgrid(x, th, indexing="ij")
    wg = (xg / 2) * np.sin(2 * tg)
    vals = ratio(xg.ravel(), wg.ravel())

    rng = np.random.default_rng(seed)
    d = np.abs(rng.standard_normal((random_samples, 3)))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    xr = rng.uniform(0.0, x_max, random_samples)
    scale = np.sqrt(xr / 2)
    a, b, c = (d[:, i] * scale for i in range(3))
    wr = np.abs(2 * a * c)
    vals = np.concatenate([vals, ratio(xr, wr)])
    return float(vals.min())
