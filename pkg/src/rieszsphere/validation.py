"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import InvalidArgumentError

UNIT_NORM_ATOL = 1e-9


def check_dimension(d) -> int:
    if isinstance(d, bool) or not isinstance(d, numbers.Integral):
        raise InvalidArgumentError(f"dimension d must be an integer, got {d!r}")
    if d < 2:
        raise InvalidArgumentError(f"dimension d must be >= 2, got {d}")
    return int(d)


def check_positive_int(value, name, minimum=1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidArgumentError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def parse_s(s) -> float:
    """Accept a real exponent or the literal ``"log"`` (mapped to 0.0)."""
    if isinstance(s, str):
        token = s.strip().lower()
        if token == "log":
            return 0.0
        try:
            return float(token)
        except ValueError:
            raise InvalidArgumentError(f"s must be a real number or 'log', got {s!r}") from None
    if isinstance(s, bool) or not isinstance(s, numbers.Real):
        raise InvalidArgumentError(f"s must be a real number or 'log', got {s!r}")
    return float(s)


def format_s(s: float) -> str:
    return "log" if s == 0 else repr(float(s))


def check_exponent(d: int, s) -> float:
    s = parse_s(s)
    if not (0.0 <= s < d):
        raise InvalidArgumentError(f"need 0 <= s < d, got s={s}, d={d}")
    return s


def check_points(X, d=None, *, atol=UNIT_NORM_ATOL, copy=False) -> np.ndarray:
    """Validate an ``(N, d+1)`` array of unit vectors.

    Parameters
    ----------
    X : array-like
        Point coordinates, one row per point.
    d : int, optional
        Expected sphere dimension. Inferred from the column count if omitted.
    atol : float
        Allowed deviation of each row norm from 1.

    Returns
    -------
    ndarray of float64, C-contiguous.
    """
    try:
        X = check_array(X, dtype=np.float64, order="C", copy=copy, ensure_min_features=3)
    except ValueError as exc:
        raise InvalidArgumentError(str(exc)) from None
    if d is not None and X.shape[1] != d + 1:
        raise InvalidArgumentError(f"expected {d + 1} coordinates per point, got {X.shape[1]}")
    norms = np.linalg.norm(X, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > atol)
    if bad.size:
        i = int(bad[0])
        raise InvalidArgumentError(f"point {i} has norm {norms[i]!r}, not on the unit sphere")
    return X


def check_radius(r) -> float:
    r = float(r)
    if not (0.0 < r <= 2.0):
        raise InvalidArgumentError(f"cap radius must lie in (0, 2], got {r}")
    return r
