"""Self-consistent percolation theory for asymmetrically coupled layers.

``R`` is the probability that a randomly chosen link leads to the giant
component of its layer.  For a pair of degree distributions the right-hand
sides of the two link equations are double sums over the degree of a node
and the degree of its partner, with the coupling strength of every degree
pair taken from :func:`interperc.core.coupling_strengths`.

When both layers share one degree distribution the problem collapses to a
single equation ``R = h(R)``.  A discontinuous transition appears where
``y = R`` touches ``h`` tangentially at a non-zero ``R``; a continuous one
where the slope of ``h`` at the origin crosses one.  The sign of ``h''(0)``
at that point separates the two regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.optimize import brentq
from scipy.stats import poisson

from .core import coupling_strengths


class ConvergenceError(RuntimeError):
    """Fixed-point iteration did not settle; ``last`` holds the final iterate."""

    def __init__(self, msg, last):
        super().__init__(msg)
        self.last = last


@dataclass(frozen=True, eq=False)
class DegreeDist:
    """Truncated degree distribution; ``pmf[i]`` is the probability of ``k[i]``."""

    k: np.ndarray
    pmf: np.ndarray
    label: str = ""

    def __post_init__(self):
        k = np.asarray(self.k, dtype=np.int64)
        p = np.asarray(self.pmf, dtype=float)
        if k.shape != p.shape or k.ndim != 1 or k.size == 0:
            raise ValueError("k and pmf must be equal-length 1-d arrays")
        if np.any(k < 0) or np.any(p < 0):
            raise ValueError("degrees and probabilities must be non-negative")
        order = np.argsort(k)
        k, p = k[order], p[order]
        if np.unique(k).size != k.size:
            raise ValueError("duplicate degree in pmf")
        total = p.sum()
        if total <= 0:
            raise ValueError("pmf has no mass")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "pmf", p / total)

    @classmethod
    def from_mapping(cls, pmf: Mapping[int, float], label: str = "") -> "DegreeDist":
        items = sorted(pmf.items())
        return cls(np.array([a for a, _ in items]), np.array([b for _, b in items]), label)

    @classmethod
    def from_degrees(cls, degrees, label: str = "") -> "DegreeDist":
        """Empirical distribution of an observed degree sequence."""
        counts = np.bincount(np.asarray(degrees, dtype=np.int64))
        k = np.flatnonzero(counts)
        return cls(k, counts[k].astype(float), label)

    @property
    def k_max(self) -> int:
        return int(self.k[-1])

    @property
    def mean(self) -> float:
        return float(np.dot(self.k, self.pmf))

    @property
    def factorial_moment2(self) -> float:
        """``<k(k-1)>``."""
        return float(np.dot(self.k * (self.k - 1), self.pmf))

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.k.tolist(), self.pmf.tolist()))

    def excess(self) -> np.ndarray:
        """Probability that a random link ends on a node of degree ``k``."""
        return self.pmf * self.k / self.mean


def poisson_dist(mean: float, tail_tol: float = 1e-12) -> DegreeDist:
    if not mean > 0:
        raise ValueError("mean must be positive")
    k_max = int(poisson.isf(tail_tol, mean))
    while poisson.sf(k_max, mean) >= tail_tol:
        k_max += 1
    k = np.arange(k_max + 1)
    return DegreeDist(k, poisson.pmf(k, mean), label=f"poisson({mean:g})")


def powerlaw_dist(gamma: float, k_min: int, k_max: int) -> DegreeDist:
    """``p_k`` proportional to ``k**-gamma`` on ``[k_min, k_max]``."""
    if not gamma > 1:
        raise ValueError("gamma must exceed 1")
    if k_min < 1:
        raise ValueError("k_min must be at least 1")
    if k_min > k_max:
        raise ValueError("k_min must not exceed k_max")
    k = np.arange(k_min, k_max + 1)
    return DegreeDist(k, k.astype(float) ** -gamma, label=f"powerlaw({gamma:g},{k_min},{k_max})")


def powerlaw_kmax_for_mean(gamma: float, k_min: int, target_mean: float, limit: int = 10**6) -> int:
    """Smallest cutoff whose truncated power law reaches ``target_mean``."""
    lo, hi = k_min, k_min
    while powerlaw_dist(gamma, k_min, hi).mean < target_mean:
        if hi >= limit:
            raise ValueError("target mean not reachable below the cutoff limit")
        lo, hi = hi, min(2 * hi, limit)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if powerlaw_dist(gamma, k_min, mid).mean < target_mean:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass
class SolverParams:
    tol: float = 1e-10
    max_iter: int = 1_000_000
    init_R: float = 1.0
    damping: float = 1.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.init_R <= 1:
            raise ValueError("init_R must lie in (0, 1]")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass
class PhasePoint:
    theta: float
    p_c: float
    order: str
    R_c: float
    S_c: float
    tangency_residual: float = field(default=float("nan"))


class _Tables:
    """Degree-pair tables for one (theta, dist_x, dist_y) combination.

    ``x`` is the layer whose equation is evaluated, ``y`` its partner layer.
    """

    def __init__(self, theta, dist_x: DegreeDist, dist_y: DegreeDist, alpha_override=None):
        self.kx = dist_x.k.astype(float)
        self.ky = dist_y.k.astype(float)
        self.px = dist_x.pmf
        self.py = dist_y.pmf
        self.qx = dist_x.excess()
        KX, KY = np.meshgrid(dist_x.k, dist_y.k, indexing="ij")
        if alpha_override is None:
            self.alpha = coupling_strengths(KX, KY, theta)[0]
        else:
            self.alpha = np.full(KX.shape, float(alpha_override))
        self.KX = KX.astype(float)
        self.KY = KY.astype(float)
        self.excess_exp = np.maximum(self.KX - 1.0, 0.0)
        self.w_link = self.qx[:, None] * self.py[None, :]
        self.w_node = self.px[:, None] * self.py[None, :]

    def link_rhs(self, Rx, Ry, p):
        # 1 - G(1 - R) summed termwise so that R = 0 gives exactly 0
        one_m_g1 = np.dot(self.qx, 1.0 - (1.0 - Rx) ** np.maximum(self.kx - 1.0, 0.0))
        one_m_g0y = np.dot(self.py, 1.0 - (1.0 - Ry) ** self.ky)
        first = p * p * one_m_g1 * one_m_g0y
        a = self.alpha
        partner_down = 1.0 - p * (1.0 - (1.0 - Ry) ** self.KY)
        inner = a * (1.0 - (1.0 - a * Rx) ** self.excess_exp) * partner_down
        return first + p * float(np.sum(self.w_link * inner))

    def node_rhs(self, Rx, Ry, p):
        one_m_g0x = np.dot(self.px, 1.0 - (1.0 - Rx) ** self.kx)
        one_m_g0y = np.dot(self.py, 1.0 - (1.0 - Ry) ** self.ky)
        first = p * p * one_m_g0x * one_m_g0y
        partner_down = 1.0 - p * (1.0 - (1.0 - Ry) ** self.KY)
        inner = (1.0 - (1.0 - self.alpha * Rx) ** self.KX) * partner_down
        return first + p * float(np.sum(self.w_node * inner))


def _check_unit(name, v):
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {v}")


def h_eval(R: float, p: float, theta: float, dist: DegreeDist, *, alpha_override=None) -> float:
    """Right-hand side of the link equation for two layers sharing ``dist``."""
    _check_unit("R", R)
    _check_unit("p", p)
    return _Tables(theta, dist, dist, alpha_override).link_rhs(R, R, p)


def h_eval_two_layer(R_a, R_b, p, theta, dist_a: DegreeDist, dist_b: DegreeDist, *, alpha_override=None):
    """Right-hand sides of the coupled link equations for layers A and B."""
    _check_unit("R_a", R_a)
    _check_unit("R_b", R_b)
    _check_unit("p", p)
    ta = _Tables(theta, dist_a, dist_b, alpha_override)
    tb = _Tables(theta, dist_b, dist_a, alpha_override)
    return ta.link_rhs(R_a, R_b, p), tb.link_rhs(R_b, R_a, p)


def _iterate(fa, fb, params: SolverParams):
    Ra = Rb = params.init_R
    d = params.damping
    for _ in range(params.max_iter):
        na, nb = fa(Ra, Rb), fb(Rb, Ra)
        na = (1 - d) * Ra + d * na
        nb = (1 - d) * Rb + d * nb
        if max(abs(na - Ra), abs(nb - Rb)) < params.tol:
            return na, nb
        Ra, Rb = na, nb
    raise ConvergenceError(f"no convergence in {params.max_iter} iterations", (Ra, Rb))


def solve_fixed_point(p, theta, dist_a: DegreeDist, dist_b: DegreeDist,
                      params: SolverParams | None = None, *, alpha_override=None):
    """Iterate the coupled link equations from ``params.init_R``.

    Starting from an intact network (``R = 1``) the iteration descends
    monotonically onto the largest fixed point, which is the physically
    selected branch.  Returns ``(R_a, R_b)``.
    """
    params = params or SolverParams()
    _check_unit("p", p)
    if p == 0.0:
        return 0.0, 0.0
    ta = _Tables(theta, dist_a, dist_b, alpha_override)
    tb = _Tables(theta, dist_b, dist_a, alpha_override)
    fa = lambda x, y: ta.link_rhs(x, y, p)  # noqa: E731
    fb = lambda x, y: tb.link_rhs(x, y, p)  # noqa: E731
    try:
        Ra, Rb = _iterate(fa, fb, params)
    except ConvergenceError:
        if params.damping == 1.0:
            Ra, Rb = _iterate(fa, fb, SolverParams(params.tol, params.max_iter, params.init_R, 0.5))
        else:
            raise
    # residue of a geometric decay onto R = 0
    snap = lambda r: 0.0 if r < params.tol else r  # noqa: E731
    return snap(Ra), snap(Rb)


def giant_fraction_theory(p, theta, dist_a: DegreeDist, dist_b: DegreeDist, R_a, R_b, *, alpha_override=None):
    """Fractions of nodes in the giant components, ``(S_a, S_b)``."""
    ta = _Tables(theta, dist_a, dist_b, alpha_override)
    tb = _Tables(theta, dist_b, dist_a, alpha_override)
    s_a = min(max(ta.node_rhs(R_a, R_b, p), 0.0), p)
    s_b = min(max(tb.node_rhs(R_b, R_a, p), 0.0), p)
    return float(s_a), float(s_b)


# --- identical layers -------------------------------------------------------

def _scan_grid(floor):
    return np.unique(np.concatenate([
        np.geomspace(floor, 0.05, 200),
        np.linspace(0.05, 1.0, 1901),
    ]))


def largest_fixed_point(p, theta, dist: DegreeDist, R_floor=1e-6, *, alpha_override=None, _grid=None) -> float:
    """Largest root of ``h(R) = R`` above ``R_floor``, else 0.

    This is the point the iteration from ``R = 1`` converges to (``h`` is
    non-decreasing, so iterates never cross a fixed point), located by a
    downward grid scan and Brent refinement instead of iterating through
    the critical slowing-down close to a transition.
    """
    if p == 0.0:
        return 0.0
    t = _Tables(theta, dist, dist, alpha_override)
    g = lambda R: t.link_rhs(R, R, p) - R  # noqa: E731
    grid = _scan_grid(R_floor) if _grid is None else _grid
    prev_R, prev_g = grid[-1], g(grid[-1])
    if prev_g >= 0:
        return float(prev_R)
    for R in grid[-2::-1]:
        gR = g(R)
        if gR >= 0:
            if gR == 0:
                return float(R)
            return float(brentq(g, R, prev_R, xtol=1e-14, rtol=1e-14))
        prev_R, prev_g = R, gR
    return 0.0


def h_prime(R, p, theta, dist: DegreeDist, *, alpha_override=None) -> float:
    """Analytic ``dh/dR`` for identical layers."""
    t = _Tables(theta, dist, dist, alpha_override)
    k = t.kx
    q = t.qx
    pk = t.px
    g1 = np.dot(q, (1 - R) ** np.maximum(k - 1, 0))
    dg1 = -np.dot(q * np.maximum(k - 1, 0), (1 - R) ** np.maximum(k - 2, 0))
    g0 = np.dot(pk, (1 - R) ** k)
    dg0 = -np.dot(pk * k, (1 - R) ** np.maximum(k - 1, 0))
    first = p * p * (-dg1 * (1 - g0) - (1 - g1) * dg0)
    a, m, KY = t.alpha, t.excess_exp, t.KY
    u = a * (1 - (1 - a * R) ** m)
    du = a * a * m * (1 - a * R) ** np.maximum(m - 1, 0)
    v = 1 - p * (1 - (1 - R) ** KY)
    dv = -p * KY * (1 - R) ** np.maximum(KY - 1, 0)
    return float(first + p * np.sum(t.w_link * (du * v + u * dv)))


def pc_second_order(theta, dist_a: DegreeDist, dist_b: DegreeDist | None = None, *, single_layer=False) -> float:
    """Continuous-transition threshold from the slope of ``h`` at the origin.

    ``1 / sum q_ka p_kb alpha**2 (k_a - 1)``.  With ``single_layer`` every
    coupling strength is 1 and the result is ``<k> / <k(k-1)>``.  Values
    above 1 are returned as is.
    """
    dist_b = dist_a if dist_b is None else dist_b
    t = _Tables(theta, dist_a, dist_b, 1.0 if single_layer else None)
    denom = float(np.sum(t.w_link * t.alpha ** 2 * (t.KX - 1.0)))
    if denom <= 0:
        raise ZeroDivisionError("no branching: sum over excess degrees is zero")
    return 1.0 / denom


def h2_at_zero(theta, dist: DegreeDist, *, alpha_override=None) -> float:
    """``h''(0)`` evaluated at the continuous threshold ``p = pc_second_order``.

    ``2 p^2 <k(k-1)> - p S3 - 2 p^2 S2k`` with
    ``S3 = sum q p_kb alpha^3 (k_a-1)(k_a-2)`` and
    ``S2k = sum q p_kb alpha^2 (k_a-1) k_b``.
    """
    t = _Tables(theta, dist, dist, alpha_override)
    a, KA, KB = t.alpha, t.KX, t.KY
    s1 = float(np.sum(t.w_link * a ** 2 * (KA - 1)))
    if s1 <= 0:
        raise ZeroDivisionError("no branching: sum over excess degrees is zero")
    p = 1.0 / s1
    s3 = float(np.sum(t.w_link * a ** 3 * (KA - 1) * (KA - 2)))
    s2k = float(np.sum(t.w_link * a ** 2 * (KA - 1) * KB))
    return 2 * p * p * dist.factorial_moment2 - p * s3 - 2 * p * p * s2k


def find_pc_first_order(theta, dist: DegreeDist, p_tol=1e-5, R_floor=1e-6, jump_floor=1e-3,
                        *, alpha_override=None) -> PhasePoint:
    """Locate the percolation threshold by bisection on ``p``.

    A point ``p`` percolates when the branch reached from ``R = 1`` stays
    above ``R_floor``.  The transition is first order when that branch is
    still above ``jump_floor`` just above the threshold.
    """
    grid = _scan_grid(R_floor)
    perc = lambda p: largest_fixed_point(p, theta, dist, R_floor, alpha_override=alpha_override, _grid=grid)  # noqa: E731
    if perc(1.0) <= R_floor:
        raise ValueError(f"no percolating p <= 1 at theta={theta}")
    lo, hi = 0.0, 1.0
    while hi - lo > p_tol:
        mid = 0.5 * (lo + hi)
        if perc(mid) > R_floor:
            hi = mid
        else:
            lo = mid
    R_c = perc(hi)
    p_c = 0.5 * (lo + hi)
    if R_c > jump_floor:
        s_a, _ = giant_fraction_theory(hi, theta, dist, dist, R_c, R_c, alpha_override=alpha_override)
        resid = h_prime(R_c, hi, theta, dist, alpha_override=alpha_override) - 1.0
        return PhasePoint(float(theta), p_c, "first", R_c, s_a, resid)
    return PhasePoint(float(theta), p_c, "second", 0.0, 0.0)


def find_theta_c(dist: DegreeDist, theta_lo=-2.0, theta_hi=6.0, tol=1e-4) -> float:
    """Root of ``h2_at_zero`` in ``theta`` by bisection."""
    f_lo = h2_at_zero(theta_lo, dist)
    f_hi = h2_at_zero(theta_hi, dist)
    if f_lo == 0:
        return float(theta_lo)
    if f_hi == 0:
        return float(theta_hi)
    if math.copysign(1, f_lo) == math.copysign(1, f_hi):
        raise ValueError(f"h''(0) has no sign change on [{theta_lo}, {theta_hi}]")
    lo, hi = theta_lo, theta_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = h2_at_zero(mid, dist)
        if math.copysign(1, f_mid) == math.copysign(1, f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def phase_point(theta, dist: DegreeDist, p_tol=1e-5) -> PhasePoint:
    """Threshold for one theta; continuous thresholds use the closed form."""
    pt = find_pc_first_order(theta, dist, p_tol=p_tol)
    if pt.order == "second":
        pc2 = pc_second_order(theta, dist)
        if pc2 <= 1.0:
            pt.p_c = pc2
    return pt


def theory_curve(ps, theta, dist_a: DegreeDist, dist_b: DegreeDist | None = None, params=None):
    """``[(p, S_a, S_b, R_a, R_b), ...]`` along a grid of ``p``."""
    dist_b = dist_a if dist_b is None else dist_b
    out = []
    for p in ps:
        Ra, Rb = solve_fixed_point(float(p), theta, dist_a, dist_b, params)
        Sa, Sb = giant_fraction_theory(float(p), theta, dist_a, dist_b, Ra, Rb)
        out.append((float(p), Sa, Sb, Ra, Rb))
    return out
