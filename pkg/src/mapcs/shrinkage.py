"""Soft thresholding and its derivative.

Both accept scalars or arrays for ``u``; the dead zone ``|u| <= k`` is
closed, so the derivative is 0 exactly on the boundary.
"""
import numpy as np


def _check_k(k):
    if np.any(np.asarray(k) < 0):
        raise ValueError(f"threshold k must be nonnegative, got {k}")


def soft_threshold(u, k):
    """``sign(u) * max(|u| - k, 0)``."""
    _check_k(k)
    u = np.asarray(u, dtype=np.float64)
    out = np.where(u > k, u - k, np.where(u < -k, u + k, 0.0))
    return out if out.ndim else float(out)


def soft_threshold_deriv(u, k):
    _check_k(k)
    u = np.asarray(u, dtype=np.float64)
    out = (np.abs(u) > k).astype(np.float64)
    return out if out.ndim else float(out)


def active_count(u, k) -> int:
    """Number of entries outside the dead zone, i.e. ``sum(soft_threshold_deriv(u, k))``."""
    _check_k(k)
    return int(np.count_nonzero(np.abs(u) > k))
