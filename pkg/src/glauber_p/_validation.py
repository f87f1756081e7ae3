"""Input checks shared by the functional API and the estimators."""

from __future__ import annotations

import hashlib

import numpy as np
from sklearn.utils import check_array


def as_quadratures(data, min_samples: int = 1):
    """Return ``(samples, fingerprint)`` for a dataset or array-like.

    Arrays may be 1-D or a single column. The fingerprint is the SHA-256 of
    the sample bytes; it ties downstream estimates to their data.
    """
    from .homodyne_sim import QuadratureDataset

    if isinstance(data, QuadratureDataset):
        x = data.samples
    else:
        arr = np.asarray(data, dtype=float)
        if arr.ndim == 2 and arr.shape[1] != 1:
            raise ValueError(f"expected a single column of quadratures, got shape {arr.shape}")
        if arr.ndim > 2:
            raise ValueError(f"expected 1-D quadratures, got shape {arr.shape}")
        x = check_array(arr.reshape(-1, 1), ensure_min_samples=1).ravel()
    if x.size < min_samples:
        raise ValueError(f"need at least {min_samples} quadrature samples, got {x.size}")
    fingerprint = hashlib.sha256(np.ascontiguousarray(x, dtype=float).tobytes()).hexdigest()
    return x, fingerprint


def check_radial(values, name="alpha"):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr.ravel()
    arr = check_array(np.atleast_1d(arr).reshape(-1, 1)).ravel()
    if np.any(arr < 0):
        raise ValueError(f"{name} must be non-negative")
    return arr
