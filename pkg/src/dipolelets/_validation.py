"""Input checks shared by the estimator wrappers."""
import numpy as np

from .errors import ConfigurationError
from .volume import MIN_DIM


def check_volume(X, allow_complex=False, name="X"):
    """Return ``X`` as a finite float64 (or complex128) 3D array."""
    X = np.asarray(getattr(X, "data", X))
    if X.ndim != 3:
        raise ConfigurationError(f"{name} must be a 3D volume, got ndim={X.ndim}")
    if min(X.shape) < MIN_DIM:
        raise ConfigurationError(f"{name} dimensions must be >= {MIN_DIM}, got {X.shape}")
    if np.iscomplexobj(X):
        if not allow_complex:
            raise ConfigurationError(f"{name} must be real")
        X = X.astype(np.complex128, copy=False)
    else:
        X = X.astype(np.float64, copy=False)
    if not np.all(np.isfinite(X)):
        raise ConfigurationError(f"{name} contains NaN or Inf")
    return X


def check_same_shape(X, shape, name="X"):
    if X.shape != tuple(shape):
        raise ConfigurationError(f"{name} has shape {X.shape}, estimator was fitted on {tuple(shape)}")
    return X


def check_weight(w, shape):
    if w is None:
        return None
    w = check_same_shape(check_volume(w, name="weight"), shape, "weight")
    if w.min() < 0 or w.max() > 1 + 1e-12:
        raise ConfigurationError("weight values must lie in [0, 1]")
    return w
