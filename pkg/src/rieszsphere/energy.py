"""Riesz and logarithmic kernels, discrete and continuous energies."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .exceptions import InvalidArgumentError, SingularityError
from .sphere import Configuration, min_pair_distance
from .validation import check_dimension, check_exponent

SINGULAR_DIST = 1e-15
_BLOCK = 512


@dataclass(frozen=True)
class RieszParams:
    """Sphere dimension ``d`` and exponent ``0 <= s < d``; ``s == 0`` is the log kernel."""

    d: int
    s: float

    def __post_init__(self):
        object.__setattr__(self, "d", check_dimension(self.d))
        object.__setattr__(self, "s", check_exponent(self.d, self.s))

    @property
    def is_log(self) -> bool:
        return self.s == 0.0


@dataclass(frozen=True)
class EnergyStats:
    energy: float
    gap: float
    log_coeff_context: Optional[float] = None


def _as_params(params, d=None) -> RieszParams:
    if isinstance(params, RieszParams):
        return params
    if d is None:
        raise InvalidArgumentError("pass a RieszParams or an explicit dimension")
    return RieszParams(d, params)


def kernel_profile(s: float, dist2):
    """Kernel as a function of squared chord distance."""
    dist2 = np.asarray(dist2, dtype=float)
    if s == 0.0:
        return -0.5 * np.log(dist2)
    if s == 1.0:
        return 1.0 / np.sqrt(dist2)
    return dist2 ** (-0.5 * s)


def riesz_kernel(params: RieszParams, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dist = float(np.linalg.norm(x - y))
    if dist < SINGULAR_DIST:
        raise SingularityError(f"kernel evaluated at coincident points (distance {dist:.3g})")
    return -math.log(dist) if params.s == 0.0 else dist ** (-params.s)


def _check_singular(X, dist2_min):
    # Gram-based distances lose resolution near 0; confirm exactly before raising.
    if dist2_min < 1e-12:
        dmin, i, j = min_pair_distance(X)
        if dmin < SINGULAR_DIST:
            raise SingularityError(f"points {i} and {j} coincide (distance {dmin:.3g})", pair=(i, j))


def energy_and_gradient(X: np.ndarray, s: float, gradient: bool = True, reference: Optional[np.ndarray] = None):
    """Ordered-pair energy of the rows of ``X`` and its tangent gradient.

    Rows are processed in fixed blocks; per-row sums are combined with
    ``math.fsum`` so the result does not depend on block scheduling.

    If ``reference`` (a nearby configuration) is given, ``E(X) - E(reference)``
    is returned as a third value. It is assembled pair by pair from the change
    in squared distance through ``log1p``/``expm1``, so it stays accurate far
    below the roundoff level of either total energy.
    """
    n = X.shape[0]
    row_sums = np.empty(n)
    grad = np.empty_like(X) if gradient else None
    diff_rows = np.empty(n) if reference is not None else None
    D = reference - X if reference is not None else None
    for a in range(0, n, _BLOCK):
        b = min(a + _BLOCK, n)
        d2 = X[a:b] @ X.T
        d2 *= -2.0
        d2 += 2.0
        idx = np.arange(b - a)
        d2[idx, a + idx] = np.inf
        np.maximum(d2, 0.0, out=d2)
        _check_singular(X, float(d2.min()))
        if s == 0.0:
            K = np.log(d2)
            K *= -0.5
            K[idx, a + idx] = 0.0
        elif s == 1.0:
            K = np.sqrt(d2)
            np.divide(1.0, K, out=K)
        else:
            K = np.power(d2, -0.5 * s)
        row_sums[a:b] = K.sum(axis=1)
        if D is not None:
            # relative change of squared distance, reference vs X
            ratio = D[a:b] @ reference.T
            ratio += X[a:b] @ D.T
            ratio *= -2.0
            ratio /= d2
            if s == 0.0:
                dK = np.log1p(ratio)
                dK *= -0.5
            elif s == 1.0:
                # (1 + u)^{-1/2} - 1 = -u / (q (1 + q)),  q = sqrt(1 + u)
                q = np.sqrt(1.0 + ratio)
                dK = q + 1.0
                dK *= q
                np.divide(ratio, dK, out=dK)
                dK *= K
                dK *= -1.0
            else:
                dK = np.log1p(ratio)
                dK *= -0.5 * s
                np.expm1(dK, out=dK)
                dK *= K
            dK[idx, a + idx] = 0.0
            diff_rows[a:b] = -dK.sum(axis=1)
        if gradient:
            if s == 0.0:
                W = np.divide(1.0, d2)
                c = -2.0
            else:
                W = np.divide(K, d2)
                c = -2.0 * s
            g = X[a:b] * W.sum(axis=1)[:, None]
            g -= W @ X
            g *= c
            g -= np.einsum("ij,ij->i", g, X[a:b])[:, None] * X[a:b]
            grad[a:b] = g
    energy = math.fsum(row_sums)
    out = (energy, grad) if gradient else (energy,)
    if D is not None:
        out = out + (math.fsum(diff_rows),)
    return out if len(out) > 1 else out[0]


def discrete_energy(config: Configuration, params) -> float:
    """``sum_{i != j} R_s(x_i, x_j)`` (both orderings counted)."""
    p = _as_params(params, config.d)
    if config.n < 2:
        return 0.0
    return energy_and_gradient(config.points, p.s, gradient=False)


def energy_gradient(config: Configuration, params) -> np.ndarray:
    """Tangent-space gradient of :func:`discrete_energy`, one row per point."""
    p = _as_params(params, config.d)
    if config.n < 2:
        return np.zeros_like(config.points)
    return energy_and_gradient(config.points, p.s)[1]


def continuous_energy(params) -> float:
    """Energy of the normalized surface measure.

    ``2^{d-s-1} Gamma((d+1)/2) Gamma((d-s)/2) / (sqrt(pi) Gamma(d - s/2))`` for
    ``s > 0`` and ``(psi(d) - psi(d/2))/2 - log 2`` for the log kernel.
    """
    p = params if isinstance(params, RieszParams) else RieszParams(*params)
    d, s = p.d, p.s
    if p.is_log:
        return 0.5 * float(special.digamma(d) - special.digamma(d / 2.0)) - math.log(2.0)
    log_val = (
        (d - s - 1) * math.log(2.0)
        + math.lgamma((d + 1) / 2.0)
        + math.lgamma((d - s) / 2.0)
        - 0.5 * math.log(math.pi)
        - math.lgamma(d - s / 2.0)
    )
    return math.exp(log_val)


def energy_gap(config: Configuration, params) -> EnergyStats:
    """Normalized second-order energy term.

    ``(E - E_cont N^2) / N^{1+s/d}`` for ``s > 0``;
    ``(E - E_cont N^2 + N log N / d) / N`` for the log kernel.
    """
    p = _as_params(params, config.d)
    n = config.n
    energy = discrete_energy(config, p)
    excess = energy - continuous_energy(p) * n * n
    if p.is_log:
        nlogn = n * math.log(n) / p.d
        return EnergyStats(energy, (excess + nlogn) / n, nlogn)
    return EnergyStats(energy, excess / n ** (1.0 + p.s / p.d))


def laplace_riesz_residual(d: int, s: float, x, x0, h: float) -> float:
    """Finite-difference residual of the Laplace-Riesz identity at ``x``.

    The spherical Laplacian of ``f = R_s(., x0)`` is approximated by the
    ambient second-difference Laplacian of its degree-0 homogeneous extension
    ``y -> f(y/|y|)``. For ``s > 0`` the residual is
    ``(-Lap + s(2d-2-s)/4) R_s - s(d-2-s) R_{s+2}``; for ``s = 0`` it is
    ``-Lap R_0 - (d-2) R_2 + (d-1)/2``. Both vanish identically away from
    ``x0``, so the returned value is the O(h^2) stencil error.
    """
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)

    def f(y):
        u = y / np.linalg.norm(y)
        d2 = float(np.sum((u - x0) ** 2))
        return float(kernel_profile(s, d2))

    lap = 0.0
    fx = f(x)
    for k in range(d + 1):
        e = np.zeros(d + 1)
        e[k] = h
        lap += f(x + e) - 2.0 * fx + f(x - e)
    lap /= h * h
    dist2 = float(np.sum((x - x0) ** 2))
    if s == 0.0:
        return -lap - (d - 2) / dist2 + (d - 1) / 2.0
    r_next = dist2 ** (-(s + 2) / 2.0)
    return -lap + s * (2 * d - 2 - s) / 4.0 * fx - s * (d - 2 - s) * r_next
