import numpy as np
from sklearn.utils.validation import check_array, check_X_y

from .exceptions import ValidationError


def check_points(X, *, ensure_min_samples=1):
    """2-D float array of shape (n, 2) with all coordinates in [0, 1]."""
    try:
        X = check_array(X, dtype=np.float64, ensure_min_samples=ensure_min_samples)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    if X.shape[1] != 2:
        raise ValidationError(f"points must have 2 columns, got {X.shape[1]}")
    if np.any(X < 0) or np.any(X > 1):
        raise ValidationError("points must lie in the unit square")
    return X


def check_points_targets(X, y):
    try:
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    X = check_points(X)
    return X, y.astype(np.float64)
