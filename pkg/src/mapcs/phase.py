"""Theoretical l1 reconstruction threshold rho_c(alpha).

Two characterizations are solved independently:

* the AMP/state-evolution form, ``rho = alpha * max_{z>=0} g(z; alpha)``;
* the replica pair, a root in ``z`` for given ``rho`` followed by an explicit
  ``alpha(rho)``.

They describe the same curve, which the test-suite checks numerically.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# switch between the power series and the continued fraction
_ERFC_SPLIT = 1.5
_SERIES_TERMS = 120
_CF_DEPTH = 600


def _erfc_series(x: np.ndarray) -> np.ndarray:
    # erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (2n+1)!!, all terms positive
    term = x.copy()
    total = x.copy()
    x2 = 2.0 * x * x
    for n in range(1, _SERIES_TERMS):
        term = term * x2 / (2 * n + 1)
        total = total + term
    return 1.0 - 2.0 * _INV_SQRT_PI * np.exp(-x * x) * total


def _erfc_cf(x: np.ndarray) -> np.ndarray:
    # erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), x > 0
    tail = np.zeros_like(x)
    for n in range(_CF_DEPTH, 0, -1):
        tail = (n / 2.0) / (x + tail)
    return _INV_SQRT_PI * np.exp(-x * x) / (x + tail)


def _erfc_scalar(x: float) -> float:
    ax = abs(x)
    if ax < _ERFC_SPLIT:
        term = total = ax
        x2 = 2.0 * ax * ax
        n = 1
        while term > 1e-17 * total and n < _SERIES_TERMS:
            term *= x2 / (2 * n + 1)
            total += term
            n += 1
        out = 1.0 - 2.0 * _INV_SQRT_PI * math.exp(-ax * ax) * total
    else:
        tail = 0.0
        for n in range(_CF_DEPTH, 0, -1):
            tail = (n / 2.0) / (ax + tail)
        out = _INV_SQRT_PI * math.exp(-ax * ax) / (ax + tail)
    return 2.0 - out if x < 0 else out


def erfc(x):
    """Complementary error function, ~1e-13 relative accuracy for |x| <= 6."""
    if isinstance(x, (float, int)):
        return _erfc_scalar(float(x))
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        return _erfc_scalar(float(x))
    ax = np.abs(x)
    out = np.empty_like(ax)
    small = ax < _ERFC_SPLIT
    if small.any():
        out[small] = _erfc_series(ax[small])
    if (~small).any():
        out[~small] = _erfc_cf(ax[~small])
    out = np.where(x < 0, 2.0 - out, out)
    return out if out.ndim else float(out)


def gauss_upper_tail(z):
    """``H(z) = P(N(0,1) > z) = erfc(z / sqrt 2) / 2``."""
    if isinstance(z, (float, int)):
        return 0.5 * _erfc_scalar(z / _SQRT2)
    return 0.5 * erfc(np.asarray(z, dtype=np.float64) / _SQRT2)


def gauss_density(z):
    if isinstance(z, (float, int)):
        return _INV_SQRT_2PI * math.exp(-0.5 * z * z)
    z = np.asarray(z, dtype=np.float64)
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


@dataclass(frozen=True)
class ThresholdPoint:
    alpha: float
    rho_c: float
    z_star: float


class ThresholdSolveError(ArithmeticError):
    pass


def amp_objective(z, alpha: float):
    """``g(z; alpha)``; the threshold is ``alpha * max_z g``."""
    if isinstance(z, float):
        q = (1.0 + z * z) * gauss_upper_tail(z) - z * gauss_density(z)
        den = 1.0 + z * z - 2.0 * q
        return (1.0 - (2.0 / alpha) * q) / den if den != 0.0 else -math.inf
    z = np.asarray(z, dtype=np.float64)
    q = (1.0 + z * z) * gauss_upper_tail(z) - z * gauss_density(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (1.0 - (2.0 / alpha) * q) / (1.0 + z * z - 2.0 * q)


def golden_section_max(f, a: float, b: float, tol: float = 1e-10, max_iter: int = 200) -> float:
    """Maximizer of a unimodal ``f`` on ``[a, b]``."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def amp_threshold_rho(alpha: float, z_max: float = 10.0, grid_step: float = 1e-3) -> ThresholdPoint:
    if not 0.01 < alpha < 0.99:
        raise ValueError(f"alpha={alpha} outside (0.01, 0.99)")
    zs = np.arange(0.0, z_max + 0.5 * grid_step, grid_step)
    g = amp_objective(zs, alpha)
    g = np.where(np.isfinite(g), g, -np.inf)
    i = int(np.argmax(g))
    if i == 0 or i == zs.size - 1 or not np.isfinite(g[i]):
        raise ThresholdSolveError(f"maximizer of g on boundary (z={zs[i]}) for alpha={alpha}")
    z_star = golden_section_max(lambda z: amp_objective(z, alpha), float(zs[i - 1]), float(zs[i + 1]))
    return ThresholdPoint(alpha, alpha * amp_objective(z_star, alpha), z_star)


def replica_residual(z, rho: float):
    """``2 (1 - rho) (H(z) - phi(z) / z) + rho``; zero at the replica saddle point."""
    if not isinstance(z, float):
        z = np.asarray(z, dtype=np.float64)
    return 2.0 * (1.0 - rho) * (gauss_upper_tail(z) - gauss_density(z) / z) + rho


def _bisect(f, lo: float, hi: float, ftol: float, max_iter: int = 400) -> float:
    flo = f(lo)
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) < ftol or mid in (lo, hi):
            break
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return mid


def replica_threshold_alpha(rho: float) -> ThresholdPoint:
    if not 0.001 < rho < 0.999:
        raise ValueError(f"rho={rho} outside (0.001, 0.999)")
    zs = np.geomspace(1e-6, 50.0, 400)
    r = replica_residual(zs, rho)
    flips = np.flatnonzero(np.sign(r[:-1]) != np.sign(r[1:]))
    if flips.size == 0:
        raise ThresholdSolveError(f"no sign change of the replica residual on [1e-6, 50] for rho={rho}")
    j = int(flips[0])
    z = _bisect(lambda v: replica_residual(v, rho), float(zs[j]), float(zs[j + 1]), 1e-12)
    alpha = 2.0 * (1.0 - rho) * gauss_upper_tail(z) + rho
    return ThresholdPoint(alpha, rho, z)


def replica_rho_for_alpha(alpha: float, tol: float = 1e-13) -> ThresholdPoint:
    """Invert ``alpha(rho)`` of the replica pair by bisection in ``rho``."""
    if not 0.01 < alpha < 0.99:
        raise ValueError(f"alpha={alpha} outside (0.01, 0.99)")
    lo, hi = 0.0011, 0.9989
    if not replica_threshold_alpha(lo).alpha < alpha < replica_threshold_alpha(hi).alpha:
        raise ThresholdSolveError(f"alpha={alpha} not bracketed by rho in [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if replica_threshold_alpha(mid).alpha < alpha:
            lo = mid
        else:
            hi = mid
    pt = replica_threshold_alpha(0.5 * (lo + hi))
    return ThresholdPoint(alpha, pt.rho_c, pt.z_star)


def default_alpha_grid() -> list:
    return [round(0.05 * i, 2) for i in range(1, 20)]


def threshold_curve(alphas: Iterable[float] = None) -> list:
    alphas = default_alpha_grid() if alphas is None else sorted(float(a) for a in alphas)
    out = []
    for a in alphas:
        try:
            out.append(amp_threshold_rho(a))
        except (ValueError, ThresholdSolveError) as exc:
            raise type(exc)(f"threshold curve failed at alpha={a}: {exc}") from exc
    return out


def curve_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "rho_c", "z_star"])
    for p in points:
        w.writerow([f"{p.alpha:.12g}", f"{p.rho_c:.12g}", f"{p.z_star:.12g}"])
    return buf.getvalue()
