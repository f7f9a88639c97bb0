"""Spherical-harmonic machinery for zonal kernels on S^d.

Everything here reduces to zonal sums through the addition theorem, so no
explicit spherical-harmonic basis is ever formed. Gegenbauer polynomials are
carried in the normalized form ``C_l(t) / C_l(1)``, which stays in ``[-1, 1]``
for every degree and keeps high-degree recurrences free of overflow.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate, special

from .energy import continuous_energy, RieszParams
from .exceptions import ConvergenceError, InvalidArgumentError
from .sphere import Configuration, cap_area, sphere_area
from .validation import check_dimension, check_exponent, check_radius

STALL_TERMS = 10


# -- Gegenbauer polynomials ------------------------------------------------------

def gegenbauer(alpha: float, ell: int, t):
    """``C_ell^alpha(t)`` by the three-term recurrence, with ``C_ell^alpha(1) = binom(2 alpha + ell - 1, ell)``."""
    if alpha <= 0:
        raise InvalidArgumentError(f"alpha must be positive, got {alpha}")
    if ell < 0:
        raise InvalidArgumentError(f"degree must be non-negative, got {ell}")
    t = np.asarray(t, dtype=float)
    c0 = np.ones_like(t)
    if ell == 0:
        return c0 if c0.ndim else float(c0)
    c1 = 2.0 * alpha * t
    for k in range(2, ell + 1):
        c0, c1 = c1, (2.0 * t * (k + alpha - 1) * c1 - (k + 2 * alpha - 2) * c0) / k
    return c1 if c1.ndim else float(c1)


def gegenbauer_at_one(alpha: float, ell) -> np.ndarray:
    ell = np.asarray(ell, dtype=float)
    return np.exp(special.gammaln(ell + 2 * alpha) - special.gammaln(ell + 1) - special.gammaln(2 * alpha))


def _ratio_coefficients(alpha: float, ell: int):
    # C_l(t)/C_l(1) = a_l t R_{l-1} - b_l R_{l-2}
    denom = ell + 2 * alpha - 1
    return 2.0 * (ell + alpha - 1) / denom, (ell - 1) / denom


def gegenbauer_ratios(alpha: float, t: float, degree: int) -> np.ndarray:
    """``C_l^alpha(t) / C_l^alpha(1)`` for ``l = 0..degree`` at a scalar ``t``."""
    out = np.empty(degree + 1)
    out[0] = 1.0
    if degree == 0:
        return out
    t = float(t)
    r0, r1 = 1.0, t
    out[1] = t
    for ell in range(2, degree + 1):
        den = ell + 2 * alpha - 1
        r0, r1 = r1, (2.0 * (ell + alpha - 1) * t * r1 - (ell - 1) * r0) / den
        out[ell] = r1
    return out


class _RatioStream:
    """Advance ``C_l(t)/C_l(1)`` degree by degree over an array of ``t``."""

    def __init__(self, alpha: float, t: np.ndarray):
        self.alpha = alpha
        self.t = t
        self.ell = 0
        self.prev = None
        self.cur = np.ones_like(t)
        self._tmp = np.empty_like(t)

    def advance(self) -> np.ndarray:
        self.ell += 1
        if self.ell == 1:
            self.prev, self.cur = self.cur, self.t.copy()
            return self.cur
        a, b = _ratio_coefficients(self.alpha, self.ell)
        tmp = self._tmp
        np.multiply(self.t, self.cur, out=tmp)
        tmp *= a
        self.prev *= b
        np.subtract(tmp, self.prev, out=self.prev)
        self.prev, self.cur = self.cur, self.prev
        return self.cur


def harmonic_dimension(d: int, ell):
    """Dimension ``h_l`` of degree-``l`` spherical harmonics on S^d."""
    if np.ndim(ell) == 0:
        ell = int(ell)
        if ell == 0:
            return 1
        return (2 * ell + d - 1) * math.comb(ell + d - 2, ell) // (d - 1)
    ell = np.asarray(ell, dtype=float)
    return (2 * ell + d - 1) / (d - 1) * gegenbauer_at_one((d - 1) / 2.0, ell)


def zonal_kernel(d: int, ell: int, t):
    """Reproducing kernel ``Z_l(t) = sum_k Y_lk(x) Y_lk(y)`` with ``t = <x, y>``."""
    alpha = (d - 1) / 2.0
    ratio = np.asarray(gegenbauer(alpha, ell, t)) / float(gegenbauer_at_one(alpha, ell))
    return float(harmonic_dimension(d, ell)) * ratio / sphere_area(d)


# -- hypergeometric and Riesz eigenvalues -------------------------------------------

def hyp3f2_terminating(ell: int, b: float, c: float, e: float, f: float) -> float:
    """``3F2(-ell, b, c; e, f; 1)`` as the finite Pochhammer sum of ``ell + 1`` terms.

    The terms alternate in sign and cancel heavily, so the sum is carried out
    exactly in rational arithmetic on the binary values of the parameters and
    rounded once at the end.
    """
    if ell < 0 or int(ell) != ell:
        raise InvalidArgumentError(f"ell must be a non-negative integer, got {ell}")
    ell = int(ell)
    b, c, e, f = (Fraction(float(v)) for v in (b, c, e, f))
    for n in range(ell):
        if e + n == 0 or f + n == 0:
            raise InvalidArgumentError("a lower parameter makes a Pochhammer denominator vanish")
    total = term = Fraction(1)
    for n in range(ell):
        term *= (n - ell) * (b + n) * (c + n) / ((e + n) * (f + n) * (n + 1))
        total += term
    return float(total)


def _log_prefactor(d: int, s: float) -> float:
    return (d - s) * math.log(2.0) + 0.5 * d * math.log(math.pi) + math.lgamma((d - s) / 2.0) - math.lgamma(s / 2.0)


def riesz_eigenvalues(d: int, s: float, degree: int) -> np.ndarray:
    """Eigenvalues ``A_{l,s}``, ``l = 0..degree``, of the spherical Riesz transform.

    ``A_{l,s} = 2^{d-s} pi^{d/2} Gamma((d-s)/2) Gamma(s/2 + l) / (Gamma(s/2) Gamma(d - s/2 + l))``
    for ``s > 0``. For the log kernel the ``s``-derivative at 0 is used:
    ``2^{d-1} pi^{d/2} Gamma(d/2) Gamma(l) / Gamma(d + l)`` for ``l >= 1`` and
    ``omega_d E_0`` at ``l = 0``.
    """
    d = check_dimension(d)
    s = check_exponent(d, s)
    ell = np.arange(degree + 1, dtype=float)
    if s > 0:
        logs = _log_prefactor(d, s) + special.gammaln(s / 2.0 + ell) - special.gammaln(d - s / 2.0 + ell)
        return np.exp(logs)
    out = np.empty(degree + 1)
    out[0] = sphere_area(d) * continuous_energy(RieszParams(d, 0.0))
    if degree >= 1:
        k = ell[1:]
        base = (d - 1) * math.log(2.0) + 0.5 * d * math.log(math.pi) + math.lgamma(d / 2.0)
        out[1:] = np.exp(base + special.gammaln(k) - special.gammaln(d + k))
    return out


def riesz_eigenvalue(d: int, s: float, ell: int) -> float:
    if ell < 0:
        raise InvalidArgumentError(f"degree must be non-negative, got {ell}")
    d = check_dimension(d)
    s = check_exponent(d, s)
    if s > 0:
        return math.exp(_log_prefactor(d, s) + math.lgamma(s / 2.0 + ell) - math.lgamma(d - s / 2.0 + ell))
    return float(riesz_eigenvalues(d, s, ell)[ell])


def riesz_eigenvalue_hypergeometric(d: int, s: float, ell: int) -> float:
    """Same eigenvalue through the terminating 3F2 (no Saalschutz summation); ``s > 0``."""
    s = check_exponent(d, s)
    if s == 0:
        raise InvalidArgumentError("the hypergeometric route needs s > 0")
    pref = math.exp((d - s) * math.log(2.0) + 0.5 * d * math.log(math.pi)
                    + math.lgamma((d - s) / 2.0) - math.lgamma(d - s / 2.0))
    return pref * hyp3f2_terminating(ell, ell + d - 1, (d - s) / 2.0, d / 2.0, d - s / 2.0)


def riesz_eigenvalue_quadrature(d: int, s: float, ell: int) -> float:
    """Funk-Hecke integral of the kernel profile against ``C_l(t)/C_l(1)``.

    Endpoint singularities are absorbed into QUADPACK's algebraic(-log) weights.
    """
    d = check_dimension(d)
    s = check_exponent(d, s)
    alpha = (d - 1) / 2.0
    w = (d - 2) / 2.0

    def poly(t):
        return gegenbauer(alpha, ell, t) / float(gegenbauer_at_one(alpha, ell))

    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=400)
    with warnings.catch_warnings():
        # QUADPACK flags roundoff once the requested 1e-13 is out of reach
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if s > 0:
            val, _ = integrate.quad(poly, -1.0, 1.0, weight="alg", wvar=(w, (d - s) / 2.0 - 1.0), **opts)
            return sphere_area(d - 1) * 2.0 ** (-s / 2.0) * val
        plain, _ = integrate.quad(poly, -1.0, 1.0, weight="alg", wvar=(w, w), **opts)
        logpart, _ = integrate.quad(poly, -1.0, 1.0, weight="alg-logb", wvar=(w, w), **opts)
    return sphere_area(d - 1) * (-0.5 * math.log(2.0) * plain - 0.5 * logpart)


# -- cap multipliers ----------------------------------------------------------------

def _one_minus_t0_squared(r: float) -> float:
    # 1 - t0^2 with t0 = 1 - r^2/2, written without cancellation
    return 0.5 * r * r * (2.0 - 0.5 * r * r)


def cap_multiplier(d: int, ell: int, r: float, method: str = "closed") -> float:
    """Funk-Hecke coefficient ``lambda_l(r)`` of the indicator of a cap of radius ``r``.

    The closed form comes from
    ``d/dt[(1-t^2)^{a+1/2} C_{l-1}^{a+1}(t)] = -(l(l+2a)/(2a)) (1-t^2)^{a-1/2} C_l^a(t)``,
    which gives ``lambda_l = (omega_{d-1}/d) (1-t0^2)^{d/2} C_{l-1}^{(d+1)/2}(t0)/C_{l-1}^{(d+1)/2}(1)``.
    ``method="quadrature"`` integrates the definition directly.
    """
    d = check_dimension(d)
    r = check_radius(r)
    if ell < 0:
        raise InvalidArgumentError(f"degree must be non-negative, got {ell}")
    if ell == 0:
        return cap_area(d, r)
    t0 = 1.0 - r * r / 2.0
    alpha = (d - 1) / 2.0
    if method == "closed":
        ratio = gegenbauer_ratios(alpha + 1.0, t0, ell - 1)[-1]
        return sphere_area(d - 1) / d * _one_minus_t0_squared(r) ** (d / 2.0) * ratio
    if method == "quadrature":
        norm = float(gegenbauer_at_one(alpha, ell))
        val, _ = integrate.quad(
            lambda t: gegenbauer(alpha, ell, t) / norm * (1.0 - t * t) ** ((d - 2) / 2.0),
            t0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=400,
        )
        return sphere_area(d - 1) * val
    raise InvalidArgumentError(f"unknown method {method!r}")


@lru_cache(maxsize=64)
def _cap_symbols_cached(d: int, r: float, degree: int) -> np.ndarray:
    out = np.empty(degree + 1)
    out[0] = 1.0
    if degree >= 1:
        ratios = gegenbauer_ratios((d + 1) / 2.0, 1.0 - r * r / 2.0, degree - 1)
        scale = sphere_area(d - 1) / d * _one_minus_t0_squared(r) ** (d / 2.0) / cap_area(d, r)
        out[1:] = scale * ratios
    out.setflags(write=False)
    return out


def cap_symbols(d: int, r: float, degree: int) -> np.ndarray:
    """Normalized cap multipliers ``lambda_l(r) / sigma(D_r)`` for ``l = 0..degree``.

    These are the Fourier symbols of the cap-averaging operator.
    """
    size = 1 << max(int(degree), 16).bit_length()
    return _cap_symbols_cached(int(d), float(r), size)[: degree + 1]


# -- spectral table -------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralTable:
    d: int
    s: float
    L: int
    A: np.ndarray
    h: np.ndarray
    lam: Optional[np.ndarray] = None
    r: Optional[float] = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["ell", "A", "h", "lambda"])
            for ell in range(self.L + 1):
                lam = "" if self.lam is None else format(float(self.lam[ell]), ".17g")
                writer.writerow([ell, format(float(self.A[ell]), ".17g"), int(self.h[ell]), lam])


def spectral_table(d: int, s, L: int, r: Optional[float] = None) -> SpectralTable:
    d = check_dimension(d)
    s = check_exponent(d, s)
    A = riesz_eigenvalues(d, s, L)
    h = np.array([harmonic_dimension(d, ell) for ell in range(L + 1)], dtype=np.int64)
    lam = None
    if r is not None:
        r = check_radius(r)
        lam = cap_symbols(d, r, L) * cap_area(d, r)
    return SpectralTable(d, s, L, A, h, lam, r)


# -- truncated zonal series -------------------------------------------------------------

class _Truncation:
    """Stop once ``STALL_TERMS`` consecutive terms are all below ``tol * |partial sum|``."""

    def __init__(self, tol: float):
        self.tol = tol
        self.quiet = 0
        self.recent = []

    def update(self, term, total) -> bool:
        small = np.all(np.abs(term) < self.tol * (np.abs(total) + 1e-300))
        self.quiet = self.quiet + 1 if small else 0
        self.recent.append(float(np.max(np.abs(term))))
        if len(self.recent) > STALL_TERMS:
            self.recent.pop(0)
        return self.quiet >= STALL_TERMS

    @property
    def tail(self) -> float:
        return max(self.recent) if self.recent else 0.0


def _degree_weights(d: int, kind: str, s: float, degree: int) -> np.ndarray:
    if kind == "riesz":
        return riesz_eigenvalues(d, s, degree)
    ell = np.arange(degree + 1, dtype=float)
    return (1.0 + ell * ell) ** ((s - d) / 2.0)


class _ZonalSeries:
    """Sum over degrees of ``weight_l * symbol_l^2 * Z_l(t)``, vectorized over ``t``.

    Degree-dependent arrays are grown by doubling, so the only per-degree
    cost is one recurrence step over the ``t`` array.
    """

    def __init__(self, d, r, weight_kind, s):
        self.d, self.r, self.kind, self.s = d, r, weight_kind, s
        self.omega = sphere_area(d)
        self._grow(1024)

    def _grow(self, size):
        self.size = size
        self.w = _degree_weights(self.d, self.kind, self.s, size)
        self.q = cap_symbols(self.d, self.r, size) ** 2 if self.r is not None else np.ones(size + 1)
        self.h = harmonic_dimension(self.d, np.arange(size + 1))

    def coefficient(self, ell):
        if ell > self.size:
            self._grow(2 * self.size)
        return self.w[ell] * self.q[ell] * self.h[ell] / self.omega


def pair_cap_energy(d: int, s, r: float, t, tol: float = 1e-10, degree: Optional[int] = None,
                    max_degree: Optional[int] = None, return_info: bool = False):
    """Double cap average of the Riesz kernel for two caps of radius ``r``.

    ``t`` is the inner product of the cap centers (scalar or array). The value
    is ``sum_l A_{l,s} (lambda_l/sigma)^2 Z_l(t)``, truncated adaptively unless
    ``degree`` fixes the truncation.
    """
    d = check_dimension(d)
    s = check_exponent(d, s)
    r = check_radius(r)
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    series = _ZonalSeries(d, r, "riesz", s)
    total = np.full(t.shape, series.coefficient(0))
    stream = _RatioStream((d - 1) / 2.0, t.copy())
    if max_degree is None:
        max_degree = int(400 * math.ceil(2.0 / r)) + 20000
    stop = _Truncation(tol)
    ell = 0
    while True:
        ell += 1
        if degree is not None and ell > degree:
            break
        term = series.coefficient(ell) * stream.advance()
        total += term
        if degree is None:
            if stop.update(term, total):
                break
            if ell >= max_degree:
                raise ConvergenceError(f"cap series did not converge by degree {ell}", partial=total.copy(), degree=ell)
    used = ell if degree is None else degree
    value = float(total[0]) if scalar else total
    if return_info:
        return value, used, stop.tail
    return value


@dataclass(frozen=True)
class SobolevDiscrepancyResult:
    value: float
    epsilon: float
    radius: float
    L_used: int
    tail_estimate: float


def _pair_inner_products(X: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(X.shape[0], 1)
    return np.clip((X @ X.T)[iu], -1.0, 1.0)


def zonal_sums(config: Configuration, degree: int) -> np.ndarray:
    """``S_l = sum_{i,j} Z_l(<x_i, x_j>)`` for ``l = 0..degree`` (all ordered pairs, diagonal included)."""
    d, n = config.d, config.n
    t = _pair_inner_products(config.points)
    stream = _RatioStream((d - 1) / 2.0, t)
    h = harmonic_dimension(d, np.arange(degree + 1))
    out = np.empty(degree + 1)
    out[0] = n * n / sphere_area(d)
    for ell in range(1, degree + 1):
        out[ell] = h[ell] / sphere_area(d) * (n + 2.0 * stream.advance().sum())
    return out


def _measure_series(config, r, kind, s, tol, degree, max_degree):
    d, n = config.d, config.n
    t = _pair_inner_products(config.points)
    stream = _RatioStream((d - 1) / 2.0, t)
    series = _ZonalSeries(d, r, kind, s)
    stop = _Truncation(tol)
    terms = []
    total = 0.0
    ell = 0
    while True:
        ell += 1
        if degree is not None and ell > degree:
            ell -= 1
            break
        pair_sum = stream.advance().sum() if t.size else 0.0
        term = series.coefficient(ell) * (n + 2.0 * pair_sum) / (n * n)
        terms.append(term)
        total += term
        if degree is None:
            if stop.update(term, total):
                break
            if ell >= max_degree:
                raise ConvergenceError(f"zonal series did not converge by degree {ell}",
                                       partial=math.fsum(terms), degree=ell)
    return math.fsum(terms), ell, stop.tail


def sobolev_discrepancy(config: Configuration, s, epsilon: float = 0.2, tol: float = 1e-6,
                        max_degree: Optional[int] = None) -> SobolevDiscrepancyResult:
    """Dual Sobolev norm of the cap-smoothed counting measure minus the uniform measure.

    Each point is replaced by the normalized indicator of a cap of radius
    ``epsilon * N^{-1/d}``; the norm of order ``(s - d)/2`` is evaluated as
    ``sum_{l>=1} (1+l^2)^{(s-d)/2} (lambda_l / (N sigma))^2 S_l``.
    The ``l = 0`` term vanishes since the measure has zero mass.
    """
    d, n = config.d, config.n
    s = check_exponent(d, s)
    if epsilon <= 0:
        raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
    r = epsilon * n ** (-1.0 / d)
    if r > 2.0:
        raise InvalidArgumentError(f"cap radius {r} exceeds 2")
    if max_degree is None:
        max_degree = 20 * math.ceil(n ** (1.0 / d) / r) + 200
    sq, used, tail = _measure_series(config, r, "sobolev", s, tol, None, max_degree)
    return SobolevDiscrepancyResult(math.sqrt(max(sq, 0.0)), float(epsilon), r, used, tail)


def smoothed_measure_energy(config: Configuration, s, r: float, tol: float = 1e-10,
                            degree: Optional[int] = None, max_degree: Optional[int] = None):
    """Riesz energy of ``(1/N) sum_i chi_{D_i}/sigma(D_i) - 1/omega_d`` (times surface measure).

    Returns ``(energy, degree_used)``.
    """
    d = config.d
    s = check_exponent(d, s)
    r = check_radius(r)
    if max_degree is None:
        max_degree = int(400 * math.ceil(2.0 / r)) + 20000
    value, used, _ = _measure_series(config, r, "riesz", s, tol, degree, max_degree)
    return value, used
