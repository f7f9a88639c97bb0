"""Riemannian gradient descent for Riesz energies on (S^d)^N."""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .energy import RieszParams, energy_and_gradient
from .exceptions import InvalidArgumentError, StagnationError
from .sphere import (
    ConfigMeta,
    Configuration,
    make_rng,
    random_rotation,
    read_config,
    spiral_points,
    write_config,
)
from .validation import check_points, check_positive_int, format_s

logger = logging.getLogger(__name__)

ARMIJO_C1 = 1e-4
STEP_GROWTH = 1.3
MAX_HALVINGS = 60
TIE_TOL = 1e-12
MIN_DISPLACEMENT = 4 * np.finfo(float).eps
INITS = ("random", "spiral", "from_file")


@dataclass(frozen=True)
class MinimizeOptions:
    """Optimizer settings.

    The gradient tolerance is scaled by ``N^{s/d}`` at run time, matching the
    natural size of the per-point force at a minimizer.
    """

    max_iters: int = 20000
    grad_tol: float = 1e-8
    stall_tol: float = 1e-13
    stall_window: int = 50
    restarts: int = 1
    seed: int = 0
    init: str = "random"
    init_path: Optional[str] = None

    def __post_init__(self):
        check_positive_int(self.max_iters, "max_iters")
        check_positive_int(self.restarts, "restarts")
        check_positive_int(self.stall_window, "stall_window")
        if not self.grad_tol > 0:
            raise InvalidArgumentError(f"grad_tol must be positive, got {self.grad_tol}")
        if self.stall_tol < 0:
            raise InvalidArgumentError("stall_tol must be non-negative")
        if self.init not in INITS:
            raise InvalidArgumentError(f"init must be one of {INITS}, got {self.init!r}")
        if self.init == "from_file" and self.init_path is None:
            raise InvalidArgumentError("init='from_file' needs init_path")


@dataclass
class MinimizeResult:
    config: Configuration
    energy: float
    grad_inf_norm: float
    iters: int
    restart_index: int
    converged: bool
    restart_energies: list = field(default_factory=list)
    stop_reason: str = ""


def _max_tangent_norm(grad: np.ndarray) -> float:
    return float(np.sqrt(np.einsum("ij,ij->i", grad, grad).max()))


def _retract(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X, axis=1)[:, None]


def _initial_points(d: int, n: int, opts: MinimizeOptions, restart: int) -> np.ndarray:
    rng = make_rng(opts.seed, restart)
    if opts.init == "from_file":
        cfg = read_config(opts.init_path)
        if cfg.d != d or cfg.n != n:
            raise InvalidArgumentError(f"{opts.init_path} holds d={cfg.d}, n={cfg.n}; expected d={d}, n={n}")
        X = np.array(cfg.points)
        if restart == 0:
            return X
    elif opts.init == "spiral":
        if d != 2:
            raise InvalidArgumentError("spiral initialization is only defined on S^2")
        X = spiral_points(n)
        if restart == 0:
            return X
    else:
        G = rng.standard_normal((n, d + 1))
        return _retract(G)
    # later restarts of a deterministic start: rotate and jitter it
    X = X @ random_rotation(d + 1, rng).T
    X += 0.1 * n ** (-1.0 / d) * rng.standard_normal(X.shape)
    return _retract(X)


def _descend(X: np.ndarray, s: float, d: int, opts: MinimizeOptions):
    n = X.shape[0]
    energy, grad = energy_and_gradient(X, s)
    tol = opts.grad_tol * n ** (s / d)
    step = 1.0 / n
    history = [energy]
    reason = "max_iters"
    it = 0
    gnorm = _max_tangent_norm(grad)
    while it < opts.max_iters:
        if gnorm <= tol:
            reason = "grad_tol"
            break
        if len(history) > opts.stall_window:
            past = history[-opts.stall_window - 1]
            if (past - energy) <= opts.stall_tol * abs(past):
                reason = "stall"
                break
        g2 = float(np.einsum("ij,ij->", grad, grad))
        for _ in range(MAX_HALVINGS):
            if step * gnorm < MIN_DISPLACEMENT:
                # no point would move by more than coordinate resolution
                return X, energy, grad, it, "roundoff"
            trial = _retract(X - step * grad)
            e_trial, g_trial, delta = energy_and_gradient(trial, s, reference=X)
            if delta <= -ARMIJO_C1 * step * g2:
                break
            step *= 0.5
        else:
            raise StagnationError(f"line search failed after {MAX_HALVINGS} halvings", best=(X, energy))
        X, energy, grad = trial, e_trial, g_trial
        gnorm = _max_tangent_norm(grad)
        step *= STEP_GROWTH
        history.append(energy)
        it += 1
    return X, energy, grad, it, reason


def minimize_energy(d: int, s, N: int, opts: Optional[MinimizeOptions] = None) -> MinimizeResult:
    """Best-of-restarts projected gradient descent with Armijo backtracking.

    Each iterate moves against the tangent gradient and is retracted to the
    sphere by renormalizing every point. Step sizes start at ``1/N``, grow by
    1.3 after each accepted step and halve on rejection.

    Parameters
    ----------
    d, s : sphere dimension and Riesz exponent (``s = 0`` or ``"log"`` for the log kernel)
    N : number of points, at least 2
    opts : MinimizeOptions

    Returns
    -------
    MinimizeResult
        The lowest-energy restart; ties within 1e-12 relative go to the lowest index.
    """
    params = RieszParams(d, s)
    N = check_positive_int(N, "N", minimum=2)
    opts = opts or MinimizeOptions()
    best = None
    energies = []
    for k in range(opts.restarts):
        X0 = _initial_points(params.d, N, opts, k)
        X, energy, grad, iters, reason = _descend(X0, params.s, params.d, opts)
        energies.append(energy)
        gnorm = _max_tangent_norm(grad)
        logger.debug("restart %d: E=%.17g |g|=%.3g iters=%d (%s)", k, energy, gnorm, iters, reason)
        if best is None or energy < best[1] - TIE_TOL * abs(best[1]):
            best = (X, energy, gnorm, iters, k, reason)
    X, energy, gnorm, iters, k, reason = best
    meta = ConfigMeta(s=params.s, seed=int(opts.seed), energy=energy, grad_norm=gnorm)
    config = Configuration(params.d, X, meta)
    return MinimizeResult(config, energy, gnorm, iters, k, reason == "grad_tol", energies, reason)


# -- on-disk cache ----------------------------------------------------------------

def cache_key(d: int, s: float, N: int, opts: MinimizeOptions) -> str:
    s_tag = format_s(s)
    return f"d{d}_s{s_tag}_N{N}_seed{opts.seed}_tol{opts.grad_tol:g}_{opts.init}_r{opts.restarts}"


def minimize_cached(d: int, s, N: int, opts: Optional[MinimizeOptions] = None, cache_dir=None) -> MinimizeResult:
    """:func:`minimize_energy` with results stored as SPHPTS files plus a JSON sidecar."""
    opts = opts or MinimizeOptions()
    params = RieszParams(d, s)
    if cache_dir is None:
        return minimize_energy(d, params.s, N, opts)
    cache_dir = Path(cache_dir)
    stem = cache_key(params.d, params.s, N, opts)
    pts_path = cache_dir / f"{stem}.sphpts"
    info_path = cache_dir / f"{stem}.json"
    if pts_path.exists() and info_path.exists():
        info = json.loads(info_path.read_text())
        config = read_config(pts_path)
        config = config.with_meta(energy=info["energy"], grad_norm=info["grad_inf_norm"])
        return MinimizeResult(config, info["energy"], info["grad_inf_norm"], info["iters"],
                              info["restart_index"], info["converged"], info["restart_energies"],
                              info.get("stop_reason", ""))
    result = minimize_energy(params.d, params.s, N, opts)
    cache_dir.mkdir(parents=True, exist_ok=True)
    write_config(result.config, pts_path)
    info = {k: v for k, v in asdict(replace(result, config=None)).items() if k != "config"}
    tmp = info_path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(info, indent=1))
    os.replace(tmp, info_path)
    return result


# -- estimator ------------------------------------------------------------------------

class RieszEnergyMinimizer(BaseEstimator):
    """Estimator-style wrapper around :func:`minimize_energy`.

    ``fit()`` with no data starts from the configured initialization;
    ``fit(X)`` polishes the given points instead.

    Attributes
    ----------
    points_ : ndarray of shape (n_points, d + 1)
    energy_ : float
    grad_norm_ : float
        Largest tangent-gradient norm at ``points_``.
    n_iter_ : int
    converged_ : bool
    restart_energies_ : list of float
    """

    def __init__(self, d=2, s=1.0, n_points=100, max_iters=20000, grad_tol=1e-8, stall_tol=1e-13,
                 stall_window=50, restarts=1, seed=0, init="random", cache_dir=None):
        self.d = d
        self.s = s
        self.n_points = n_points
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.stall_tol = stall_tol
        self.stall_window = stall_window
        self.restarts = restarts
        self.seed = seed
        self.init = init
        self.cache_dir = cache_dir

    def _options(self, **over):
        kw = dict(max_iters=self.max_iters, grad_tol=self.grad_tol, stall_tol=self.stall_tol,
                  stall_window=self.stall_window, restarts=self.restarts, seed=self.seed, init=self.init)
        kw.update(over)
        return MinimizeOptions(**kw)

    def fit(self, X=None, y=None):
        if X is None:
            res = minimize_cached(self.d, self.s, self.n_points, self._options(), self.cache_dir)
        else:
            X = check_points(X, self.d)
            params = RieszParams(self.d, self.s)
            opts = self._options(restarts=1)
            Xo, energy, grad, iters, reason = _descend(np.array(X), params.s, params.d, opts)
            config = Configuration(params.d, Xo, ConfigMeta(s=params.s, seed=self.seed))
            res = MinimizeResult(config, energy, _max_tangent_norm(grad), iters, 0, reason == "grad_tol",
                                 [energy], reason)
        self.result_ = res
        self.points_ = np.array(res.config.points)
        self.energy_ = res.energy
        self.grad_norm_ = res.grad_inf_norm
        self.n_iter_ = res.iters
        self.converged_ = res.converged
        self.restart_energies_ = list(res.restart_energies)
        return self

    def transform(self, X=None):
        """Return the fitted configuration as an array."""
        return np.array(self.points_)

    def fit_transform(self, X=None, y=None):
        return self.fit(X).transform()
