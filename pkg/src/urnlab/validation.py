"""Input validation helpers shared by the library, the estimators and the CLI."""

import numbers

import numpy as np

SIMPLEX_ATOL = 1e-12


def check_positive(name, value, strict=True):
    """Return ``value`` as a float, raising ``ValueError`` unless it is positive."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value


def check_int(name, value, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_interaction_matrix(A):
    """Validate a square nonnegative interaction matrix.

    Every row needs at least one strictly positive entry, otherwise the
    corresponding colour weight can vanish identically.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"interaction matrix must be square, got shape {A.shape}")
    if A.shape[0] < 2:
        raise ValueError("need at least two colours")
    if not np.all(np.isfinite(A)):
        raise ValueError("interaction matrix has non-finite entries")
    if np.any(A < 0):
        i, j = np.argwhere(A < 0)[0]
        raise ValueError(f"interaction matrix entry ({i}, {j}) is negative: {A[i, j]}")
    dead = np.flatnonzero(~np.any(A > 0, axis=1))
    if dead.size:
        raise ValueError(f"interaction matrix row {dead[0]} has no positive entry")
    return A


def check_counts(counts, d=None):
    """Ball counts as an int64 vector of strictly positive entries."""
    arr = np.asarray(counts)
    if arr.ndim != 1:
        raise ValueError("counts must be one-dimensional")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise ValueError("counts must be integers")
    elif arr.dtype.kind not in "iu":
        raise TypeError(f"counts must be integers, got dtype {arr.dtype}")
    arr = arr.astype(np.int64)
    if d is not None and arr.shape[0] != d:
        raise ValueError(f"expected {d} counts, got {arr.shape[0]}")
    if np.any(arr < 1):
        raise ValueError("every colour needs at least one ball (zero counts are rejected)")
    return arr


def check_simplex_point(x, d=None, interior=False, atol=SIMPLEX_ATOL):
    """Validate a point (or stack of points along the last axis) of the simplex."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise ValueError("simplex point must be a vector")
    if d is not None and x.shape[-1] != d:
        raise ValueError(f"expected {d} coordinates, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("simplex point has non-finite coordinates")
    if np.any(x < 0):
        raise ValueError("simplex point has negative coordinates")
    if np.any(np.abs(x.sum(axis=-1) - 1.0) > atol):
        raise ValueError(f"simplex coordinates must sum to 1 within {atol}")
    if interior and np.any(x <= 0):
        raise ValueError("point must lie in the interior of the simplex")
    return x


def check_grid(name, values):
    """A strictly increasing grid of positive reals."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d grid")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain positive finite values")
    if np.any(np.diff(arr) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return arr
