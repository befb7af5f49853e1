"""Iterative thresholding solvers derived from the MAP stationary condition.

Every step function takes the iterate ``x^(t-1)`` held in an
:class:`IterateState` and returns a :class:`StepOutcome`; :func:`run` drives
them under an exponentially annealed threshold ``k``.

For a general matrix the variants that were derived for unit column norms
(``map_gamma``, ``amp_external``, ``amp``) use the per-column normalized
argument ``(F^T zhat)_i / c_i + x_i`` with ``c_i = sum_mu F_mu,i^2``, which
is exactly the unit-norm form when ``c_i = 1``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    IterateState,
    ProblemInstance,
    RunResult,
    SolverConfig,
    Variant,
    mse_per_entry,
    residual,
)
from .shrinkage import active_count, soft_threshold

log = logging.getLogger(__name__)

DIVERGENCE_MSE = 1e6
SINGULAR_DENOM = 1e-9


class DivergenceError(ArithmeticError):
    """A step hit a singular rescaling of the residual or blew up."""


@dataclass
class StepOutcome:
    x_new: np.ndarray
    z_new: np.ndarray
    z_hat_new: np.ndarray
    gamma_used: Optional[float] = None
    degenerate_hits: int = 0


def _safe_norms(instance: ProblemInstance):
    mat = instance.matrix
    return np.where(mat.degenerate, 1.0, mat.col_sq_norms), mat.degenerate


def _naive_update(instance: ProblemInstance, x: np.ndarray, z: np.ndarray, k: float):
    F = instance.matrix.F
    c, degen = _safe_norms(instance)
    arg = F.T @ z + c * x
    x_new = soft_threshold(arg, k) / c
    hits = int(np.count_nonzero(degen))
    if hits:
        x_new[degen] = 0.0
    return x_new, hits


def _normalized_arg(instance: ProblemInstance, zhat: np.ndarray, x: np.ndarray) -> np.ndarray:
    c, _ = _safe_norms(instance)
    return (instance.matrix.F.T @ zhat) / c + x


def _thresholded(instance: ProblemInstance, arg: np.ndarray, k: float):
    x_new = soft_threshold(arg, k)
    degen = instance.matrix.degenerate
    hits = int(np.count_nonzero(degen))
    if hits:
        x_new[degen] = 0.0
    return x_new, hits


def step_naive(state: IterateState, instance: ProblemInstance, k: float) -> StepOutcome:
    """Full update ``x_i = eta((F^T z)_i + c_i x_i; k) / c_i``."""
    z = residual(instance, state.x)
    x_new, hits = _naive_update(instance, state.x, z, k)
    return StepOutcome(x_new, z, z.copy(), None, hits)


def step_partial_constant(state: IterateState, instance: ProblemInstance, k: float,
                          gamma: float) -> StepOutcome:
    """Convex blend of the previous iterate (weight ``gamma/(1+gamma)``) and the naive update."""
    if gamma < 0:
        raise ValueError("partition ratio must be nonnegative")
    z = residual(instance, state.x)
    naive, hits = _naive_update(instance, state.x, z, k)
    x_new = (gamma * state.x + naive) / (1.0 + gamma)
    return StepOutcome(x_new, z, z.copy(), float(gamma), hits)


def gamma_step_dependent(state: IterateState, instance: ProblemInstance, k: float,
                         z: Optional[np.ndarray] = None) -> float:
    """Step-dependent partition ratio: active fraction of the update argument, per row.

    ``z`` is the fresh residual for ``state.x``; computed when omitted.
    """
    if z is None:
        z = residual(instance, state.x)
    arg = _normalized_arg(instance, z, state.x)
    return active_count(arg, k) / instance.m


def _rescaled_step(state, instance, k, sign) -> StepOutcome:
    z = residual(instance, state.x)
    gamma = gamma_step_dependent(state, instance, k, z)
    denom = 1.0 + sign * gamma
    if abs(denom) < SINGULAR_DENOM or denom < 0 and sign > 0:
        raise DivergenceError(f"residual rescaling denominator {denom:.3g} at gamma={gamma:.6g}")
    zhat = z / denom
    x_new, hits = _thresholded(instance, _normalized_arg(instance, zhat, state.x), k)
    return StepOutcome(x_new, z, zhat, gamma, hits)


def step_map_gamma(state: IterateState, instance: ProblemInstance, k: float) -> StepOutcome:
    """MAP update with residual rescaled by ``1/(1 + gamma_t)``."""
    return _rescaled_step(state, instance, k, +1.0)


def step_amp_external(state: IterateState, instance: ProblemInstance, k: float) -> StepOutcome:
    """External-division variant: residual rescaled by ``1/(1 - gamma_t)``.

    Singular once ``gamma_t`` reaches 1 (more active coordinates than rows).
    """
    return _rescaled_step(state, instance, k, -1.0)


def step_amp(state: IterateState, instance: ProblemInstance, k: float) -> StepOutcome:
    """AMP: residual plus Onsager memory term, then thresholded update.

    Uses ``state.z_hat_prev`` (zhat^(t-1)) and ``state.x_prev`` (x^(t-2));
    both are zero on a cold start, which removes the memory term at t = 1.
    """
    z = residual(instance, state.x)
    zhat_prev = state.z_hat_prev if state.z_hat_prev is not None else np.zeros(instance.m)
    x_before = state.x_prev if state.x_prev is not None else np.zeros(instance.n)
    onsager = active_count(_normalized_arg(instance, zhat_prev, x_before), k) / instance.m
    zhat = z + onsager * zhat_prev
    x_new, hits = _thresholded(instance, _normalized_arg(instance, zhat, state.x), k)
    return StepOutcome(x_new, z, zhat, onsager, hits)


def simplified_naive_step(state: IterateState, instance: ProblemInstance, k: float) -> StepOutcome:
    """Unit-column-norm naive step ``x = eta(F^T z + x; k)`` (no rescaling)."""
    z = residual(instance, state.x)
    x_new, hits = _thresholded(instance, _normalized_arg(instance, z, state.x), k)
    return StepOutcome(x_new, z, z.copy(), None, hits)


def take_step(state: IterateState, instance: ProblemInstance, config: SolverConfig,
              k: float) -> StepOutcome:
    v = config.variant
    if v is Variant.NAIVE:
        return step_naive(state, instance, k)
    if v is Variant.PARTIAL:
        return step_partial_constant(state, instance, k, config.gamma)
    if v is Variant.MAP_GAMMA:
        return step_map_gamma(state, instance, k)
    if v is Variant.AMP_EXTERNAL:
        return step_amp_external(state, instance, k)
    if v is Variant.AMP:
        return step_amp(state, instance, k)
    raise ValueError(f"unknown variant {v!r}")


def run(instance: ProblemInstance, config: SolverConfig) -> RunResult:
    """Anneal ``k`` from its initial value and iterate the configured variant.

    Starts from ``x = 0``.  Stops after ``max_steps`` or once ``k`` sits on
    its floor and the iterate moved by less than ``fixed_point_tol``.  Step
    errors and divergence end the run with ``success=False``.
    """
    sched = config.anneal
    k = sched.initial(instance)
    state = IterateState.cold(instance, k)
    x0 = instance.truth.values
    records_gamma = config.variant is not Variant.NAIVE
    mse_trace, k_trace, gamma_trace = [], [], []
    error = None
    floor_reached = k <= sched.k_floor * (1 + 1e-12)

    for t in range(1, config.max_steps + 1):
        try:
            out = take_step(state, instance, config, k)
        except DivergenceError as exc:
            error = str(exc)
            log.debug("run aborted at step %d: %s", t, exc)
            break
        change = float(np.max(np.abs(out.x_new - state.x), initial=0.0))
        state.x_prev = state.x
        state.z_hat_prev = out.z_hat_new
        state.x = out.x_new
        state.z = out.z_new
        state.z_hat = out.z_hat_new
        state.t = t
        state.degenerate_hits += out.degenerate_hits
        k = max(k * sched.decay, sched.k_floor)
        state.k_current = k

        mse = mse_per_entry(state.x, x0)
        mse_trace.append(mse)
        k_trace.append(k)
        if records_gamma:
            gamma_trace.append(out.gamma_used)
        if not np.isfinite(mse) or mse > DIVERGENCE_MSE:
            error = f"diverged at step {t} (mse={mse:.3g})"
            break
        if floor_reached and change < config.fixed_point_tol:
            break
        floor_reached = k <= sched.k_floor * (1 + 1e-12)

    x_final = state.x
    final_mse = mse_per_entry(x_final, x0)
    success = bool(final_mse < config.mse_success_threshold)
    res = residual(instance, x_final)
    return RunResult(
        x_final=x_final,
        mse_trace=mse_trace,
        k_trace=k_trace,
        gamma_trace=gamma_trace,
        steps_taken=state.t,
        success=success,
        residual_norm_final=float(np.linalg.norm(res)),
        variant=config.label,
        seed=instance.seed,
        error=error,
        degenerate_hits=state.degenerate_hits,
    )
