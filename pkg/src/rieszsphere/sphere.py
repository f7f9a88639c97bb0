"""Geometry of the unit sphere S^d in R^{d+1}: configurations, caps, sampling, I/O."""
from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate, special
from scipy.spatial import cKDTree

from .exceptions import InvalidArgumentError, ParseError
from .validation import (
    check_dimension,
    check_points,
    check_positive_int,
    check_radius,
    format_s,
    parse_s,
)

UNIT_TOL = 1e-12


def sphere_area(d: int) -> float:
    """Surface measure of S^d, ``2 pi^{(d+1)/2} / Gamma((d+1)/2)``."""
    return 2.0 * math.pi ** ((d + 1) / 2) / math.gamma((d + 1) / 2)


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``.

    Independent streams let restarts and sweep rows draw reproducibly
    regardless of how work is split across processes.
    """
    seq = np.random.SeedSequence([int(seed), int(stream)])
    return np.random.Generator(np.random.Philox(seq))


@dataclass
class ConfigMeta:
    s: float = 0.0
    seed: int = 0
    energy: Optional[float] = None
    grad_norm: Optional[float] = None


@dataclass
class Configuration:
    """``N`` distinct points on S^d stored row-wise in an ``(N, d+1)`` array."""

    d: int
    points: np.ndarray
    meta: ConfigMeta = field(default_factory=ConfigMeta)

    def __post_init__(self):
        self.d = check_dimension(self.d)
        X = check_points(self.points, self.d, atol=1e-9, copy=True)
        norms = np.linalg.norm(X, axis=1)
        off = np.abs(norms - 1.0) > UNIT_TOL
        if off.any():
            X[off] /= norms[off, None]
        if X.shape[0] >= 2:
            dmin, i, j = min_pair_distance(X)
            if dmin == 0.0:
                raise InvalidArgumentError(f"points {i} and {j} coincide")
        X.setflags(write=False)
        self.points = X

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def with_meta(self, **changes) -> "Configuration":
        return Configuration(self.d, self.points, replace(self.meta, **changes))


@dataclass(frozen=True)
class Cap:
    """Open cap ``{y : |y - center| < radius}`` (Euclidean chord radius)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if abs(np.linalg.norm(c) - 1.0) > 1e-9:
            raise InvalidArgumentError("cap center must be a unit vector")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", check_radius(self.radius))

    @property
    def threshold(self) -> float:
        """Inner-product threshold: y is inside iff <center, y> > threshold."""
        return 1.0 - self.radius**2 / 2.0

    def contains(self, Y, closed=False):
        t = np.asarray(Y, dtype=float) @ self.center
        return t >= self.threshold if closed else t > self.threshold


def min_pair_distance(X):
    """Smallest pairwise Euclidean distance and the pair attaining it.

    Nearest neighbours come from a k-d tree, which measures distances from
    coordinate differences, so near-duplicates are resolved to full precision.
    """
    X = np.asarray(X, dtype=float)
    dist, idx = cKDTree(X).query(X, k=2)
    i = int(np.argmin(dist[:, 1]))
    j = int(idx[i, 1])
    if j == i:
        # exact duplicate listed before the point itself
        j = int(idx[i, 0])
    return float(dist[i, 1]), min(i, j), max(i, j)


def sample_uniform(d: int, n: int, seed: int = 0, stream: int = 0) -> Configuration:
    """I.i.d. points from the normalized surface measure (normalized Gaussians)."""
    d = check_dimension(d)
    n = check_positive_int(n, "n")
    G = make_rng(seed, stream).standard_normal((n, d + 1))
    G /= np.linalg.norm(G, axis=1)[:, None]
    return Configuration(d, G, ConfigMeta(seed=int(seed)))


def spiral_points(n: int) -> np.ndarray:
    """Generalized spiral points on S^2 (Rakhmanov-Saff-Zhou)."""
    n = check_positive_int(n, "n")
    if n == 1:
        return np.array([[0.0, 0.0, 1.0]])
    k = np.arange(1, n + 1)
    h = -1.0 + 2.0 * (k - 1) / (n - 1)
    theta = np.arccos(np.clip(h, -1.0, 1.0))
    phi = np.zeros(n)
    for i in range(1, n - 1):
        phi[i] = (phi[i - 1] + 3.6 / math.sqrt(n * (1.0 - h[i] ** 2))) % (2 * math.pi)
    return np.column_stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def cap_fraction(d: int, t):
    """Normalized measure of ``{y : <c, y> > t}`` on S^d.

    Equal to the regularized incomplete beta ``I_{(1-t)/2}(d/2, d/2)``;
    on S^2 this is ``(1 - t) / 2``.
    """
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    return special.betainc(d / 2.0, d / 2.0, (1.0 - t) / 2.0)


def cap_area(d: int, r: float, method: str = "beta") -> float:
    """Surface measure of a cap of chord radius ``r`` on S^d.

    ``method="quadrature"`` integrates ``omega_{d-1} (1-t^2)^{(d-2)/2}`` over
    ``[1 - r^2/2, 1]`` adaptively instead of using the incomplete beta.
    """
    d = check_dimension(d)
    r = check_radius(r)
    if method == "beta":
        return sphere_area(d) * float(special.betainc(d / 2.0, d / 2.0, r * r / 4.0))
    if method == "quadrature":
        # t = 1 - u: omega_{d-1} int_0^{r^2/2} u^{(d-2)/2} (2 - u)^{(d-2)/2} du
        h = (d - 2) / 2.0
        val, _ = integrate.quad(
            lambda u: (2.0 - u) ** h, 0.0, r * r / 2.0, weight="alg", wvar=(h, 0.0),
            epsabs=0.0, epsrel=1e-13, limit=200,
        )
        return sphere_area(d - 1) * val
    raise InvalidArgumentError(f"unknown method {method!r}")


class Separation(NamedTuple):
    min_dist: float
    scaled: float


def separation(config: Configuration) -> Separation:
    """Minimal pairwise distance and its ``N^{1/d}``-scaled value."""
    if config.n < 2:
        raise InvalidArgumentError("separation needs at least two points")
    dmin, _, _ = min_pair_distance(config.points)
    return Separation(dmin, dmin * config.n ** (1.0 / config.d))


def cap_counts(config: Configuration, cap: Cap):
    """Number of points in the open and in the closed cap."""
    t = config.points @ cap.center
    return int(np.count_nonzero(t > cap.threshold)), int(np.count_nonzero(t >= cap.threshold))


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random orthogonal matrix of size ``dim``."""
    Q, R = np.linalg.qr(rng.standard_normal((dim, dim)))
    return Q * np.sign(np.diag(R))


# -- SPHPTS v1 text format ---------------------------------------------------

_HEADER = re.compile(r"^# sphpts v1 d=(\d+) n=(\d+) s=(\S+) seed=(\d+)$")


def write_config(config: Configuration, path) -> None:
    lines = [f"# sphpts v1 d={config.d} n={config.n} s={format_s(config.meta.s)} seed={int(config.meta.seed)}"]
    for row in config.points:
        lines.append(" ".join(format(float(v), ".17g") for v in row))
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_config(path) -> Configuration:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty file", line=1)
    m = _HEADER.match(lines[0].rstrip("\r"))
    if not m:
        raise ParseError(f"malformed header {lines[0]!r}", line=1)
    d, n = int(m.group(1)), int(m.group(2))
    try:
        s = parse_s(m.group(3))
    except ValueError:
        raise ParseError(f"bad s value {m.group(3)!r}", line=1) from None
    seed = int(m.group(4))
    if d < 2:
        raise ParseError(f"dimension must be >= 2, got {d}", line=1)
    body = lines[1:]
    if len(body) != n:
        raise ParseError(f"header declares n={n} points but file has {len(body)}", line=min(len(lines), n + 2))
    X = np.empty((n, d + 1))
    for k, text in enumerate(body):
        lineno = k + 2
        fields = text.split()
        if len(fields) != d + 1:
            raise ParseError(f"expected {d + 1} coordinates, got {len(fields)}", line=lineno)
        try:
            X[k] = [float(v) for v in fields]
        except ValueError:
            raise ParseError("non-numeric coordinate", line=lineno) from None
        norm = math.sqrt(float(X[k] @ X[k]))
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-9:
            raise ParseError(f"point has norm {norm!r}, not on the unit sphere", line=lineno)
    try:
        return Configuration(d, X, ConfigMeta(s=s, seed=seed))
    except InvalidArgumentError as exc:
        raise ParseError(str(exc)) from None
