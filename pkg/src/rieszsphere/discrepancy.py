"""Cap discrepancy, the energy decomposition identity, smoothing defect and mean-value checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from sklearn.base import BaseEstimator

from .energy import RieszParams, continuous_energy, kernel_profile
from .exceptions import InvalidArgumentError, PreconditionError
from .sphere import Cap, Configuration, cap_fraction, make_rng, separation
from .spectral import pair_cap_energy, smoothed_measure_energy, sobolev_discrepancy
from .validation import check_exponent, check_points, check_positive_int, check_radius

_CENTER_CHUNK = 256
CENTER_STREAM = 7919


# -- cap discrepancy -------------------------------------------------------------------

@dataclass(frozen=True)
class CapDiscrepancyEstimate:
    """Lower bound for the sup over caps of ``|#(X in D)/N - sigma(D)/omega_d|``.

    ``argmax_cap`` attains ``value``; when ``argmax_closed`` is true the
    witnessing set is the closed cap with the same center and radius.
    """

    value: float
    argmax_cap: Cap
    centers_tested: int
    is_lower_bound: bool = True
    argmax_closed: bool = False


def _candidate_centers(X: np.ndarray, budget: int, seed: int, extra) -> np.ndarray:
    G = make_rng(seed, CENTER_STREAM).standard_normal((budget, X.shape[1]))
    G /= np.linalg.norm(G, axis=1)[:, None]
    parts = [X, -X, G]
    if extra is not None:
        parts.append(np.asarray(extra, dtype=float).reshape(-1, X.shape[1]))
    return np.vstack(parts)


def _tie_counts(u: np.ndarray):
    # u sorted descending; open/closed counts at each threshold u[k]
    n = u.size
    asc = u[::-1]
    closed = n - np.searchsorted(asc, u, side="left")
    opened = n - np.searchsorted(asc, u, side="right")
    return opened, closed


def cap_discrepancy(config: Configuration, centers_budget: int = 1000, seed: int = 0,
                    extra_centers=None) -> CapDiscrepancyEstimate:
    """Maximize the cap discrepancy over a finite family of caps.

    Candidate centers are the points, their antipodes and ``centers_budget``
    uniform random centers (the first ``k`` random centers do not depend on
    the budget, so larger budgets test a superset). For each center every
    point threshold ``t_k`` is tried as both an open and a closed cap.
    """
    centers_budget = check_positive_int(centers_budget, "centers_budget")
    X = config.points
    n, d = config.n, config.d
    C = _candidate_centers(X, centers_budget, seed, extra_centers)
    k = np.arange(1, n + 1, dtype=float)
    best = (-1.0, None, 0.0, False)
    for a in range(0, C.shape[0], _CENTER_CHUNK):
        T = np.clip(C[a:a + _CENTER_CHUNK] @ X.T, -1.0, 1.0)
        T = -np.sort(-T, axis=1)
        F = cap_fraction(d, T)
        closed_gap = np.abs(k / n - F)
        open_gap = np.abs((k - 1) / n - F)
        ties = np.any(T[:, 1:] == T[:, :-1], axis=1)
        for row in np.flatnonzero(ties):
            opened, closed = _tie_counts(T[row])
            closed_gap[row] = np.abs(closed / n - F[row])
            open_gap[row] = np.abs(opened / n - F[row])
        both = np.maximum(closed_gap, open_gap)
        flat = int(np.argmax(both))
        i, j = divmod(flat, n)
        if both[i, j] > best[0]:
            best = (float(both[i, j]), C[a + i], float(T[i, j]), bool(closed_gap[i, j] >= open_gap[i, j]))
    value, center, t, closed = best
    radius = min(math.sqrt(max(2.0 - 2.0 * t, 0.0)), 2.0)
    radius = max(radius, np.finfo(float).tiny)
    cap = _witnessing_cap(config, center, radius, closed, value)
    return CapDiscrepancyEstimate(value, cap, int(C.shape[0]), True, closed)


def _witnessing_cap(config, center, radius, closed, value):
    # t -> radius -> threshold need not round-trip; try radii a few ulps away
    # until the cap counts the same points as the threshold it came from
    tiny = np.finfo(float).tiny
    for k in range(9):
        for sign in ((1,) if k == 0 else (1, -1)):
            r = min(max(radius + sign * k * np.spacing(radius), tiny), 2.0)
            cap = Cap(center, float(r))
            if abs(witnessed_discrepancy(config, cap, closed) - value) <= 1e-12:
                return cap
    return Cap(center, radius)


def witnessed_discrepancy(config: Configuration, cap: Cap, closed: bool = False) -> float:
    """``|#(X in cap)/N - sigma(cap)/omega_d|`` for one explicit cap."""
    inside = cap.contains(config.points, closed=closed)
    return abs(np.count_nonzero(inside) / config.n - float(cap_fraction(config.d, cap.threshold)))


# -- decomposition identity ------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    lhs: float
    rhs: float
    residual: float
    quadrature_tol: float


def _pair_dots(X: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(X.shape[0], 1)
    return np.clip((X @ X.T)[iu], -1.0, 1.0)


def stolarsky_decomposition_check(config: Configuration, s, epsilon: float = 0.2,
                                  tol: float = 1e-10) -> IdentityReport:
    """Check the splitting of the smoothed pair energy into three pieces.

    With ``mu_i`` the normalized indicator of the cap of radius
    ``r = epsilon N^{-1/d}`` around ``x_i`` and ``mu = (1/N) sum mu_i - sigma/omega_d``,

    ``(1/N^2) sum_{i != j} I(mu_i, mu_j) = E_s(sigma~) + I(mu, mu) - (1/N) I(mu_1, mu_1)``.

    The left side sums pair cap energies over ordered pairs; the right side
    uses the closed-form continuous energy, the zonal-sum energy of ``mu``,
    and the single-cap self energy. All series share the truncation degree
    fixed by the slowest (self-energy) series, so the residual measures
    assembly and rounding error only.
    """
    d, n = config.d, config.n
    s = check_exponent(d, s)
    r = epsilon * n ** (-1.0 / d)
    if not 0 < r <= 2:
        raise InvalidArgumentError(f"cap radius {r} must lie in (0, 2]")
    self_energy, degree, tail = pair_cap_energy(d, s, r, 1.0, tol=tol, return_info=True)
    if n > 1:
        pairs = pair_cap_energy(d, s, r, _pair_dots(config.points), degree=degree)
        lhs = 2.0 * math.fsum(pairs) / (n * n)
    else:
        lhs = 0.0
    mu_energy, _ = smoothed_measure_energy(config, s, r, degree=degree)
    rhs = continuous_energy(RieszParams(d, s)) + mu_energy - self_energy / n
    return IdentityReport(lhs, rhs, abs(lhs - rhs), max(tail, tol * abs(self_energy)))


# -- smoothing defect -------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothingDefect:
    defect: float
    bound_scale: float

    @property
    def ratio(self) -> float:
        return self.defect / self.bound_scale


def _cap_excess(d, s, r, dots, tol, grid):
    """``pair_cap_energy - R_s`` at each inner product, via a spline for many pairs."""
    dist = np.sqrt(np.maximum(2.0 - 2.0 * dots, 0.0))
    if dots.size <= grid:
        return pair_cap_energy(d, s, r, dots, tol=tol) - kernel_profile(s, dist * dist)
    # excess is smooth in log-distance; tabulate once and interpolate
    # stop at the largest distance present: the series is slowest at t = -1
    rho = np.geomspace(dist.min() * (1 - 1e-9), min(2.0, dist.max() * (1 + 1e-9)), grid)
    t = 1.0 - rho * rho / 2.0
    table = pair_cap_energy(d, s, r, t, tol=tol) - kernel_profile(s, rho * rho)
    spline = CubicSpline(np.log(rho), table)
    return spline(np.log(dist))


def smoothing_defect(config: Configuration, s, epsilon: float = 0.1, tol: float = 1e-12,
                     grid: int = 2048) -> SmoothingDefect:
    """Average absolute gap between the kernel and its double cap average.

    ``defect = (1/N^2) sum_{i != j} |R_s(x_i, x_j) - avg_{D_i} avg_{D_j} R_s|`` with
    caps of radius ``epsilon N^{-1/d}``. ``bound_scale = epsilon^2 (N^{-2/d} + N^{-1+s/d})``.
    The caps must be well separated: scaled separation at least ``8 epsilon``.
    """
    d, n = config.d, config.n
    s = check_exponent(d, s)
    if epsilon <= 0:
        raise InvalidArgumentError("epsilon must be positive")
    sep = separation(config)
    if sep.scaled < 8.0 * epsilon:
        raise PreconditionError(
            f"scaled separation {sep.scaled:.4g} is below 8*epsilon = {8 * epsilon:.4g}; caps may overlap")
    r = epsilon * n ** (-1.0 / d)
    excess = _cap_excess(d, s, r, _pair_dots(config.points), tol, grid)
    defect = 2.0 * math.fsum(np.abs(excess)) / (n * n)
    bound = epsilon ** 2 * (n ** (-2.0 / d) + n ** (-1.0 + s / d))
    return SmoothingDefect(defect, bound)


# -- mean-value excess -----------------------------------------------------------------------

MEAN_VALUE_MAX_RADIUS = 0.01


def mean_value_check(d: int, s, a, b, r: float, tol: float = 1e-13) -> float:
    """``(avg_{D_r(a)} avg_{D_r(b)} R_s - R_s(a, b)) / r^2``.

    Defined where the kernel is superharmonic near the diagonal:
    ``d > 2`` with ``0 < s < d - 2``, or ``s = 0``. Requires ``r <= 0.01``.
    """
    p = RieszParams(d, s)
    if not (p.is_log or (p.d > 2 and 0 < p.s < p.d - 2)):
        raise InvalidArgumentError(f"(d={d}, s={p.s}) is outside the superharmonic regime")
    r = check_radius(r)
    if r > MEAN_VALUE_MAX_RADIUS:
        raise InvalidArgumentError(f"r must be at most {MEAN_VALUE_MAX_RADIUS}, got {r}")
    a = check_points(np.atleast_2d(a), p.d)[0]
    b = check_points(np.atleast_2d(b), p.d)[0]
    dist2 = float(np.sum((a - b) ** 2))
    if dist2 < 1e-30:
        raise InvalidArgumentError("cap centers coincide")
    t = 1.0 - dist2 / 2.0
    avg = pair_cap_energy(p.d, p.s, r, t, tol=tol)
    return (avg - float(kernel_profile(p.s, dist2))) / (r * r)


# -- estimators ------------------------------------------------------------------------------

class SobolevDiscrepancy(BaseEstimator):
    """Estimator-style wrapper: ``fit(X)`` stores ``value_`` and ``result_``."""

    def __init__(self, d=2, s=1.0, epsilon=0.2, tol=1e-6):
        self.d = d
        self.s = s
        self.epsilon = epsilon
        self.tol = tol

    def fit(self, X, y=None):
        config = Configuration(self.d, check_points(X, self.d))
        self.result_ = sobolev_discrepancy(config, self.s, self.epsilon, self.tol)
        self.value_ = self.result_.value
        return self


class CapDiscrepancy(BaseEstimator):
    """Estimator-style wrapper around :func:`cap_discrepancy`."""

    def __init__(self, d=2, centers_budget=1000, seed=0):
        self.d = d
        self.centers_budget = centers_budget
        self.seed = seed

    def fit(self, X, y=None):
        config = Configuration(self.d, check_points(X, self.d))
        self.result_ = cap_discrepancy(config, self.centers_budget, self.seed)
        self.value_ = self.result_.value
        return self


# -- combined report ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscrepancyReport:
    sobolev: object
    cap: CapDiscrepancyEstimate
    scaled_separation: Optional[float]

    def to_dict(self) -> dict:
        cap = self.cap
        return {
            "sobolev_D": self.sobolev.value,
            "epsilon": self.sobolev.epsilon,
            "radius": self.sobolev.radius,
            "L_used": self.sobolev.L_used,
            "tail_estimate": self.sobolev.tail_estimate,
            "cap_D": cap.value,
            "argmax_center": [float(v) for v in cap.argmax_cap.center],
            "argmax_radius": cap.argmax_cap.radius,
            "argmax_closed": cap.argmax_closed,
            "centers_tested": cap.centers_tested,
            "is_lower_bound": cap.is_lower_bound,
            "scaled_separation": self.scaled_separation,
        }


def discrepancy_report(config: Configuration, s, epsilon: float = 0.2, centers_budget: int = 1000,
                       seed: int = 0, tol: float = 1e-6) -> DiscrepancyReport:
    sob = sobolev_discrepancy(config, s, epsilon, tol)
    cap = cap_discrepancy(config, centers_budget, seed)
    sep = separation(config).scaled if config.n > 1 else None
    return DiscrepancyReport(sob, cap, sep)
