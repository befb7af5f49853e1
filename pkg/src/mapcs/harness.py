"""Phase-diagram sweeps and convergence comparisons over seeded instances."""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import AnnealSchedule, SolverConfig, Variant
from .instances import GenSpec, make_instance
from .solvers import run

log = logging.getLogger(__name__)

PHASE_COLUMNS = ["alpha", "rho", "m", "k", "trials", "successes", "rate", "mean_steps"]


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


def cell_seed(base_seed: int, m: int, k: int, trial: int) -> int:
    """Per-trial seed keyed on the cell coordinates, independent of evaluation order."""
    ss = np.random.SeedSequence([int(base_seed), int(m), int(k), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def frange(lo: float, hi: float, step: float) -> list:
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


@dataclass(frozen=True)
class PhaseGridSpec:
    n: int
    alphas: Sequence[float]
    rhos: Sequence[float]
    trials: int = 20
    solver: SolverConfig = field(default_factory=SolverConfig)
    base_seed: int = 0
    keep_fraction: float = 1.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.alphas or not self.rhos:
            raise ValueError("alpha and rho grids must be nonempty")
        for v in list(self.alphas) + list(self.rhos):
            if not 0 <= v < 1:
                raise ValueError(f"grid value {v} outside [0, 1)")

    def cells(self) -> list:
        seen, out = set(), []
        for a in self.alphas:
            m = max(1, round(a * self.n))
            for r in self.rhos:
                key = (m, round(r * self.n))
                if key not in seen:
                    seen.add(key)
                    out.append(key)
        return out


@dataclass(frozen=True)
class PhaseCell:
    m: int
    k: int
    n: int
    trials: int
    successes: int
    mean_steps: float

    @property
    def alpha(self) -> float:
        return self.m / self.n

    @property
    def rho(self) -> float:
        return self.k / self.n

    @property
    def rate(self) -> float:
        return self.successes / self.trials


def run_trial(n: int, m: int, k: int, seed: int, config: SolverConfig, keep_fraction: float = 1.0):
    inst = make_instance(GenSpec(n=n, m=m, k_nonzeros=k, seed=seed, keep_fraction=keep_fraction))
    return run(inst, config)


def _eval_cell(args) -> PhaseCell:
    spec, m, k = args
    successes, steps = 0, []
    for trial in range(spec.trials):
        seed = cell_seed(spec.base_seed, m, k, trial)
        try:
            res = run_trial(spec.n, m, k, seed, spec.solver, spec.keep_fraction)
        except Exception:  # a broken run is a failed trial, never a broken sweep
            log.exception("trial failed: n=%d m=%d k=%d seed=%d", spec.n, m, k, seed)
            steps.append(spec.solver.max_steps)
            continue
        successes += res.success
        steps.append(res.steps_taken)
    return PhaseCell(m, k, spec.n, spec.trials, successes, float(np.mean(steps)))


def _map(fn, items, jobs: int):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def phase_sweep(spec: PhaseGridSpec, jobs: int = 1) -> list:
    cells = spec.cells()
    out = _map(_eval_cell, [(spec, m, k) for m, k in cells], jobs)
    return sorted(out, key=lambda c: (c.m, c.k))


def phase_csv(cells) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PHASE_COLUMNS)
    for c in cells:
        w.writerow([fmt(c.alpha), fmt(c.rho), c.m, c.k, c.trials, c.successes,
                    fmt(c.rate), fmt(c.mean_steps)])
    return buf.getvalue()


@dataclass(frozen=True)
class ConvergenceSpec:
    n: int = 1000
    m: int = 500
    k_nonzeros: int = 50
    trials: int = 20
    decay: float = 0.95
    max_steps: int = 1000
    solvers: Sequence[SolverConfig] = (SolverConfig(Variant.MAP_GAMMA), SolverConfig(Variant.AMP))
    base_seed: int = 0
    k0: object = "auto"
    k_floor: float = 1e-9

    def configured(self, cfg: SolverConfig) -> SolverConfig:
        sched = AnnealSchedule(k0=self.k0, decay=self.decay, k_floor=self.k_floor,
                               k0_scale=cfg.anneal.k0_scale)
        return replace(cfg, anneal=sched, max_steps=self.max_steps)


@dataclass
class ConvergenceResult:
    labels: list
    mean_traces: list  # one array of length max_steps per solver
    traces: list  # per solver, array (trials, max_steps)

    def steps_to(self, level: float) -> list:
        """Per solver, per trial: first 1-based step with MSE <= level (None if never)."""
        out = []
        for tr in self.traces:
            hit = tr <= level
            out.append([int(np.argmax(row)) + 1 if row.any() else None for row in hit])
        return out

    def median_steps_to(self, level: float) -> list:
        meds = []
        for per_trial in self.steps_to(level):
            vals = [np.inf if s is None else s for s in per_trial]
            meds.append(float(np.median(vals)))
        return meds

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step"] + [f"mse_{lab}" for lab in self.labels])
        for t in range(len(self.mean_traces[0]) if self.mean_traces else 0):
            w.writerow([t + 1] + [fmt(tr[t]) for tr in self.mean_traces])
        return buf.getvalue()


def _padded(trace, length: int) -> np.ndarray:
    out = np.full(length, trace[-1] if trace else np.nan)
    out[: len(trace)] = trace[:length]
    return out


def _convergence_trial(args):
    spec, cfg, seed = args
    res = run_trial(spec.n, spec.m, spec.k_nonzeros, seed, cfg)
    # runs that stop early have settled; hold their last value
    return _padded(res.mse_trace, spec.max_steps)


def convergence_compare(spec: ConvergenceSpec, jobs: int = 1) -> ConvergenceResult:
    seeds = [cell_seed(spec.base_seed, spec.m, spec.k_nonzeros, t) for t in range(spec.trials)]
    labels, means, traces = [], [], []
    for cfg in spec.solvers:
        cfg = spec.configured(cfg)
        rows = _map(_convergence_trial, [(spec, cfg, s) for s in seeds], jobs)
        arr = np.vstack(rows)
        labels.append(cfg.label)
        traces.append(arr)
        means.append(arr.mean(axis=0))
    return ConvergenceResult(labels, means, traces)


DESK = {"n": 500, "trials": 20, "max_steps": 2000}
FULL = {"n": 1000, "trials": 50, "max_steps": 10000, "grid_step_count": 25}
FULL_CONVERGENCE = {"n": 2000, "m": 1000, "k_nonzeros": 200, "trials": 100, "decay": 0.95}
