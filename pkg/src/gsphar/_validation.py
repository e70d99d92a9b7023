import numpy as np
from sklearn.utils.validation import check_array


def check_panel(X, min_rows=1, name="panel"):
    """Return the T x N float array behind a VolPanel or array-like."""
    values = getattr(X, "values", X)
    arr = check_array(
        np.asarray(values, dtype=float),
        dtype=np.float64,
        ensure_2d=True,
        ensure_min_samples=min_rows,
        input_name=name,
    )
    return arr


def panel_labels(X, n):
    labels = getattr(X, "labels", None)
    return list(labels) if labels is not None else [f"S{i + 1}" for i in range(n)]


def check_square_nonneg(A, name="adjacency"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} must be finite")
    if np.any(A < 0):
        raise ValueError(f"{name} must be non-negative")
    return A
