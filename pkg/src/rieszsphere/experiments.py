"""Sweeps over N, exponent fits and the self-verification suite."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from . import spectral
from .discrepancy import cap_discrepancy, stolarsky_decomposition_check, witnessed_discrepancy
from .energy import RieszParams, continuous_energy, discrete_energy, energy_and_gradient, energy_gap, laplace_riesz_residual
from .exceptions import InvalidArgumentError, SweepError
from .minimize import MinimizeOptions, minimize_cached, minimize_energy
from .sphere import Configuration, cap_area, make_rng, random_rotation, sample_uniform, separation, sphere_area
from .validation import check_dimension, check_exponent, check_positive_int, format_s, parse_s

CSV_COLUMNS = ("N", "energy", "gap", "sobolev_D", "cap_D", "scaled_separation", "grad_inf_norm")


# -- exponent fits ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentFit:
    slope: float
    stderr: float


def fit_exponent(pairs) -> ExponentFit:
    """OLS slope of ``log value`` against ``log N`` with its standard error."""
    pairs = list(pairs)
    if len(pairs) < 4:
        raise InvalidArgumentError(f"need at least 4 (N, value) pairs, got {len(pairs)}")
    for k, (n, v) in enumerate(pairs):
        if not v > 0 or not n > 0:
            raise InvalidArgumentError(f"row {k}: N and value must be positive, got ({n}, {v})")
    x = np.log([float(n) for n, _ in pairs])
    y = np.log([float(v) for _, v in pairs])
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xc
    dof = len(pairs) - 2
    stderr = math.sqrt(float(resid @ resid) / dof / sxx)
    return ExponentFit(slope, stderr)


def energy_expansion_coefficient(d: int, s, Ns, energies) -> float:
    """Leading correction coefficient of the energy after removing ``E_cont N^2``.

    For the log kernel ``E - E_0 N^2`` is regressed on ``{N log N, N}`` and the
    ``N log N`` coefficient is returned. For ``s > 0`` the excess is regressed
    on ``N^{1+s/d}`` alone.
    """
    p = RieszParams(d, s)
    N = np.asarray(Ns, dtype=float)
    excess = np.asarray(energies, dtype=float) - continuous_energy(p) * N * N
    if p.is_log:
        A = np.column_stack([N * np.log(N), N])
    else:
        A = (N ** (1.0 + p.s / p.d))[:, None]
    coef, *_ = np.linalg.lstsq(A, excess, rcond=None)
    return float(coef[0])


# -- sweeps -------------------------------------------------------------------------------------

@dataclass
class SweepOutputs:
    csv_path: Optional[str] = None
    json_path: Optional[str] = None
    cache_dir: Optional[str] = None


@dataclass
class SweepConfig:
    d: int
    s: float
    N_list: List[int]
    epsilon: float = 0.2
    restarts: int = 1
    seed: int = 0
    centers_budget: int = 1000
    outputs: SweepOutputs = field(default_factory=SweepOutputs)
    init: str = "random"
    grad_tol: float = 1e-8
    max_iters: int = 20000
    stall_tol: float = 1e-9
    stall_window: int = 50
    sobolev_tol: float = 1e-6

    def __post_init__(self):
        self.d = check_dimension(self.d)
        self.s = check_exponent(self.d, self.s)
        self.N_list = [check_positive_int(n, "N", minimum=2) for n in self.N_list]
        if any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
            raise InvalidArgumentError("N_list must be strictly increasing")
        if not self.epsilon > 0:
            raise InvalidArgumentError("epsilon must be positive")
        if isinstance(self.outputs, dict):
            self.outputs = SweepOutputs(**self.outputs)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        data = dict(data)
        data["s"] = parse_s(data.get("s", 1.0))
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def minimize_options(self) -> MinimizeOptions:
        return MinimizeOptions(max_iters=self.max_iters, grad_tol=self.grad_tol, stall_tol=self.stall_tol,
                               stall_window=self.stall_window, restarts=self.restarts, seed=self.seed,
                               init=self.init)


@dataclass
class SweepRow:
    N: int
    energy: float
    gap: float
    sobolev_D: float
    cap_D: float
    scaled_separation: float
    grad_inf_norm: float


@dataclass
class SweepFits:
    sobolev_slope: Optional[float] = None
    sobolev_slope_stderr: Optional[float] = None
    cap_slope: Optional[float] = None
    cap_slope_stderr: Optional[float] = None
    gap_coeff: Optional[float] = None


@dataclass
class SweepResult:
    rows: List[SweepRow]
    fits: SweepFits

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows], "fits": asdict(self.fits)}

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)


def _fmt(v) -> str:
    return str(v) if isinstance(v, (int, np.integer)) else format(float(v), ".17g")


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])


def read_sweep_csv(path) -> List[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [SweepRow(int(r["N"]), *(float(r[c]) for c in CSV_COLUMNS[1:])) for r in reader]


def _sweep_row(cfg: SweepConfig, n: int) -> SweepRow:
    stage = "minimize"
    try:
        res = minimize_cached(cfg.d, cfg.s, n, cfg.minimize_options(), cfg.outputs.cache_dir)
        config = res.config
        stage = "energy_gap"
        stats = energy_gap(config, RieszParams(cfg.d, cfg.s))
        stage = "sobolev_discrepancy"
        sob = spectral.sobolev_discrepancy(config, cfg.s, cfg.epsilon, cfg.sobolev_tol)
        stage = "cap_discrepancy"
        cap = cap_discrepancy(config, cfg.centers_budget, cfg.seed)
        stage = "separation"
        sep = separation(config)
    except Exception as exc:
        raise SweepError(str(exc), n=n, stage=stage) from exc
    return SweepRow(n, stats.energy, stats.gap, sob.value, cap.value, sep.scaled, res.grad_inf_norm)


def _sweep_job(args):
    cfg, n = args
    try:
        return _sweep_row(cfg, n), None
    except SweepError as exc:
        return None, (str(exc), exc.n, exc.stage)


def run_sweep(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Minimize and measure every ``N`` of the sweep, then fit rates.

    Rows are independent jobs; results are collected in ``N_list`` order, so
    the output does not depend on ``workers``.
    """
    jobs = [(cfg, n) for n in cfg.N_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_job, jobs))
    else:
        outcomes = [_sweep_job(j) for j in jobs]
    rows = [row for row, _ in outcomes if row is not None]
    failure = next((err for _, err in outcomes if err is not None), None)
    if failure is not None:
        if cfg.outputs.csv_path:
            write_sweep_csv(rows, cfg.outputs.csv_path)
        message, n, stage = failure
        raise SweepError(message.split(": ", 1)[-1], n=n, stage=stage)
    fits = SweepFits()
    if len(rows) >= 4:
        sob = fit_exponent([(r.N, r.sobolev_D) for r in rows])
        cap = fit_exponent([(r.N, r.cap_D) for r in rows])
        fits = SweepFits(sob.slope, sob.stderr, cap.slope, cap.stderr,
                         energy_expansion_coefficient(cfg.d, cfg.s, [r.N for r in rows], [r.energy for r in rows]))
    result = SweepResult(rows, fits)
    if cfg.outputs.csv_path:
        write_sweep_csv(rows, cfg.outputs.csv_path)
    if cfg.outputs.json_path:
        Path(cfg.outputs.json_path).write_text(json.dumps(result.to_dict(), indent=1))
    return result


# -- verification suite ------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


@dataclass
class VerifyReport:
    level: str
    checks: List[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"level": self.level, "ok": self.ok, "checks": [asdict(c) for c in self.checks]}


# (d, s) pairs whose eigenvalue table is checked against the two-sided l^{s-d} bound
ASYMPTOTIC_CASES = [(2, 0.0), (2, 1.0), (3, 0.0), (3, 1.0), (3, 2.0), (4, 1.5), (4, 2.0)]

_LEVELS = {"fast": dict(L=50, N=64), "full": dict(L=200, N=1024)}


def _rel(a, b):
    return abs(a - b) / abs(b)


def _check(name, worst, threshold, detail=""):
    worst = float(worst)
    return CheckResult(name, bool(worst <= threshold), worst, threshold, detail)


def _eig(corrupt):
    scale = 1.01 if corrupt == "eigenvalue" else 1.0
    return lambda d, s, ell: scale * spectral.riesz_eigenvalue(d, s, ell)


def check_eigenvalue_quadrature(level, corrupt=None):
    eig = _eig(corrupt)
    L = min(_LEVELS[level]["L"], 60)
    worst = 0.0
    for d, s in [(2, 0.0), (2, 1.0), (3, 1.0), (3, 2.0), (4, 1.5), (4, 2.0)]:
        for ell in range(0, L + 1, 1 if level == "full" else 5):
            worst = max(worst, _rel(eig(d, s, ell), spectral.riesz_eigenvalue_quadrature(d, s, ell)))
    return _check("eigenvalue_quadrature", worst, 1e-8, f"l <= {L}")


def check_eigenvalue_zero_mode(level, corrupt=None):
    eig = _eig(corrupt)
    worst = max(_rel(eig(d, s, 0), sphere_area(d) * continuous_energy(RieszParams(d, s)))
                for d in (2, 3, 4) for s in (0.5, 1.0, d - 1.0, d - 0.5))
    return _check("eigenvalue_zero_mode", worst, 1e-12)


def check_newtonian_closed_form(level, corrupt=None):
    eig = _eig(corrupt)
    L = min(_LEVELS[level]["L"], 100)
    worst = max(_rel(eig(d, d - 1.0, ell), sphere_area(d) * (d - 1) / (2 * ell + d - 1))
                for d in (2, 3, 4) for ell in range(L + 1))
    return _check("newtonian_closed_form", worst, 1e-12)


def check_green_closed_form(level, corrupt=None):
    eig = _eig(corrupt)
    L = min(_LEVELS[level]["L"], 100)
    worst = 0.0
    for d in (3, 4, 5):
        c = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
        for ell in range(L + 1):
            worst = max(worst, _rel(eig(d, d - 2.0, ell), c / (ell * (ell + d - 1) / (d - 2) + d / 4.0)))
    return _check("green_closed_form", worst, 1e-12)


def check_iteration_identity(level, corrupt=None):
    eig = _eig(corrupt)
    L = min(_LEVELS[level]["L"], 100)
    worst = 0.0
    for d in (4, 5, 6):
        for s in (0.5, 1.0, d - 2.5):
            for ell in range(L + 1):
                lhs = eig(d, s + 2, ell) / eig(d, s, ell)
                rhs = (ell * (ell + d - 1) + s * (2 * d - 2 - s) / 4.0) / (s * (d - 2 - s))
                worst = max(worst, _rel(lhs, rhs))
    return _check("iteration_identity", worst, 1e-10)


def check_eigenvalue_asymptotics(level, corrupt=None):
    L = _LEVELS[level]["L"]
    worst = 0.0
    cases = ASYMPTOTIC_CASES + [(d, s) for d in (2, 3, 4) for s in (0.5, d - 1.0, d - 0.5)]
    ell = np.arange(1, L + 1)
    for d, s in cases:
        v = spectral.riesz_eigenvalues(d, s, L)[1:] * (1.0 + ell ** (d - s))
        worst = max(worst, v.max() / v.min())
    return _check("eigenvalue_asymptotics", worst, 10.0, "max/min of A_l (1 + l^(d-s))")


def check_saalschutz(level, corrupt=None):
    worst = 0.0
    for d, s in [(3, 1.0), (2, 0.5), (4, 1.5), (5, 3.0)]:
        for ell in range(0, 16):
            hyp = spectral.hyp3f2_terminating(ell, ell + d - 1, (d - s) / 2, d / 2, d - s / 2)
            ratio = math.exp(math.lgamma(s / 2 + ell) + math.lgamma(d - s / 2)
                             - math.lgamma(s / 2) - math.lgamma(d - s / 2 + ell))
            worst = max(worst, _rel(hyp, ratio))
    return _check("saalschutz_summation", worst, 1e-10, "l <= 15")


def check_cap_multiplier(level, corrupt=None):
    L = min(_LEVELS[level]["L"], 60)
    worst = 0.0
    for d in (2, 3, 4):
        for r in (0.05, 0.4, 1.3):
            scale = sphere_area(d - 1)
            for ell in range(0, L + 1, 3):
                a = spectral.cap_multiplier(d, ell, r)
                b = spectral.cap_multiplier(d, ell, r, method="quadrature")
                worst = max(worst, abs(a - b) / scale)
    return _check("cap_multiplier_quadrature", worst, 1e-11, "absolute, in units of omega_{d-1}")


def check_cap_area(level, corrupt=None):
    worst = max(_rel(cap_area(d, r), cap_area(d, r, method="quadrature"))
                for d in (2, 3, 4, 5) for r in (1e-3, 0.1, 0.7, 1.5, 2.0))
    return _check("cap_area_quadrature", worst, 1e-10)


def check_gradient(level, corrupt=None):
    n = 12 if level == "fast" else 64
    worst = 0.0
    rng = make_rng(11, 0)
    for d in (2, 3, 4):
        X = np.array(sample_uniform(d, n, seed=5, stream=d).points)
        for s in sorted({0.0, 0.5, d - 2.0, d - 1.0, d - 0.5}):
            _, g = energy_and_gradient(X, s)
            for i in range(0, n, 5):
                v = rng.standard_normal(d + 1)
                v -= (v @ X[i]) * X[i]
                v /= np.linalg.norm(v)
                h = 1e-5
                Y1, Y2 = X.copy(), X.copy()
                Y1[i] = (X[i] + h * v) / np.linalg.norm(X[i] + h * v)
                Y2[i] = (X[i] - h * v) / np.linalg.norm(X[i] - h * v)
                e1, _, dp = energy_and_gradient(Y1, s, reference=X)
                e2, _, dm = energy_and_gradient(Y2, s, reference=X)
                fd = (dp - dm) / (2 * h)
                worst = max(worst, abs(fd - g[i] @ v) / max(abs(g[i] @ v), 1e-3 * np.linalg.norm(g[i])))
    return _check("gradient_finite_difference", worst, 1e-5)


def check_rotation_invariance(level, corrupt=None):
    worst = 0.0
    for d in (2, 3, 4):
        c = sample_uniform(d, 40, seed=2)
        Q = random_rotation(d + 1, make_rng(3, d))
        for s in (0.0, 1.0, d - 0.5):
            p = RieszParams(d, s)
            e = discrete_energy(c, p)
            worst = max(worst, _rel(discrete_energy(Configuration(d, c.points @ Q.T), p), e))
    return _check("energy_rotation_invariance", worst, 1e-10)


def check_decomposition(level, corrupt=None):
    sizes = (2, 8) if level == "fast" else (2, 8, 20)
    worst = 0.0
    for d in (2, 3):
        for s in sorted({0.0, 1.0, d - 1.0}):
            for n in sizes:
                rep = stolarsky_decomposition_check(sample_uniform(d, n, seed=n), s, 0.2, tol=1e-8)
                worst = max(worst, rep.residual / max(10 * rep.quadrature_tol, 1e-6))
    return _check("decomposition_identity", worst, 1.0, "residual / max(10 tol, 1e-6)")


def check_laplace_riesz(level, corrupt=None):
    rng = make_rng(17, 0)
    worst = 0.0
    for d, s in [(3, 0.5), (4, 1.0), (2, 0.0), (3, 0.0)]:
        for _ in range(5 if level == "fast" else 20):
            while True:
                x, x0 = rng.standard_normal((2, d + 1))
                x /= np.linalg.norm(x)
                x0 /= np.linalg.norm(x0)
                if np.linalg.norm(x - x0) >= 0.5:
                    break
            r1 = laplace_riesz_residual(d, s, x, x0, 0.02)
            r2 = laplace_riesz_residual(d, s, x, x0, 0.01)
            worst = max(worst, abs(r1 / r2 - 4.0))
    return _check("laplace_riesz_order", worst, 0.6, "|residual ratio under h -> h/2 minus 4|")


def check_small_minimizers(level, corrupt=None):
    opts = MinimizeOptions(restarts=3 if level == "fast" else 20)
    targets = [(2, 1.0, 1.0), (3, 0.0, -3.0 * math.log(3.0)), (4, 1.0, 12.0 / math.sqrt(8.0 / 3.0))]
    worst = max(abs(minimize_energy(2, s, n, opts).energy - e) for n, s, e in targets)
    return _check("small_n_minimizers", worst, 1e-8)


def check_zonal_sums(level, corrupt=None):
    n = _LEVELS[level]["N"] // (1 if level == "fast" else 4)
    worst = 0.0
    for d in (2, 3):
        S = spectral.zonal_sums(sample_uniform(d, n, seed=d), 60)
        worst = max(worst, float(-S.min() / n ** 2))
    return _check("zonal_sums_nonnegative", worst, 1e-9)


def check_cap_witness(level, corrupt=None):
    worst = 0.0
    for d in (2, 3):
        c = sample_uniform(d, 50, seed=d)
        est = cap_discrepancy(c, 200, seed=1)
        worst = max(worst, abs(witnessed_discrepancy(c, est.argmax_cap, est.argmax_closed) - est.value))
    return _check("cap_discrepancy_witness", worst, 1e-12)


CHECKS: List[Callable] = [
    check_eigenvalue_quadrature,
    check_eigenvalue_zero_mode,
    check_newtonian_closed_form,
    check_green_closed_form,
    check_iteration_identity,
    check_eigenvalue_asymptotics,
    check_saalschutz,
    check_cap_multiplier,
    check_cap_area,
    check_gradient,
    check_rotation_invariance,
    check_decomposition,
    check_laplace_riesz,
    check_small_minimizers,
    check_zonal_sums,
    check_cap_witness,
]


def _run_check(args):
    idx, level, corrupt = args
    fn = CHECKS[idx]
    try:
        return fn(level, corrupt)
    except Exception as exc:  # a crash is a failed invariant, not a crashed suite
        return CheckResult(fn.__name__.removeprefix("check_"), False, float("nan"), float("nan"), repr(exc))


def verify(level: str = "fast", corrupt: Optional[str] = None, workers: int = 1) -> VerifyReport:
    """Run the named invariant checks and collect pass/fail entries.

    ``corrupt="eigenvalue"`` scales every closed-form eigenvalue by 1.01 to
    confirm that the suite notices.
    """
    if level not in _LEVELS:
        raise InvalidArgumentError(f"level must be 'fast' or 'full', got {level!r}")
    jobs = [(k, level, corrupt) for k in range(len(CHECKS))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            checks = list(pool.map(_run_check, jobs))
    else:
        checks = [_run_check(j) for j in jobs]
    return VerifyReport(level, checks)
