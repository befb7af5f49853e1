"""Shared data types for sparse reconstruction problems.

Matrices are stored dense, row-major (``F[mu, i]``, shape ``(M, N)``) in
float64.  Everything except :class:`IterateState` is treated as immutable
after construction.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

DEGENERATE_COL_TOL = 1e-12


class MalformedInputError(ValueError):
    """Raised when vector or matrix shapes do not fit together."""


class SensingMatrix:
    """Dense ``M x N`` observation matrix with cached squared column norms."""

    def __init__(self, entries):
        F = np.array(entries, dtype=np.float64, order="C")
        if F.ndim != 2 or F.shape[0] < 1 or F.shape[1] < 1:
            raise MalformedInputError(f"matrix must be 2-d and non-empty, got shape {F.shape}")
        F.setflags(write=False)
        self.F = F
        self.col_sq_norms = np.einsum("mi,mi->i", F, F)
        self.col_sq_norms.setflags(write=False)
        self.degenerate = self.col_sq_norms < DEGENERATE_COL_TOL
        self.degenerate.setflags(write=False)

    @property
    def m(self) -> int:
        return self.F.shape[0]

    @property
    def n(self) -> int:
        return self.F.shape[1]

    @property
    def alpha(self) -> float:
        return self.m / self.n

    def __repr__(self):
        return f"SensingMatrix(m={self.m}, n={self.n})"


class SparseSignal:
    """Signal vector together with its support (indices of nonzero entries)."""

    def __init__(self, values):
        x = np.array(values, dtype=np.float64)
        if x.ndim != 1:
            raise MalformedInputError("signal must be a 1-d vector")
        x.setflags(write=False)
        self.values = x
        self.support = np.flatnonzero(x)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def nnz(self) -> int:
        return int(self.support.size)

    @property
    def rho(self) -> float:
        return self.nnz / self.n

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "SparseSignal":
        x = np.zeros(n)
        for i, v in pairs:
            x[int(i)] = float(v)
        return cls(x)

    def pairs(self) -> list:
        return [[int(i), float(self.values[i])] for i in self.support]


@dataclass(frozen=True)
class ProblemInstance:
    """One reconstruction task ``y = F x0`` with known ground truth."""

    matrix: SensingMatrix
    truth: SparseSignal
    y: np.ndarray
    seed: int = 0
    tags: tuple = ()

    def __post_init__(self):
        y = np.array(self.y, dtype=np.float64)
        if y.shape != (self.matrix.m,):
            raise MalformedInputError(f"y has shape {y.shape}, expected ({self.matrix.m},)")
        if self.truth.n != self.matrix.n:
            raise MalformedInputError("truth length does not match matrix columns")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "tags", tuple(self.tags))

    @classmethod
    def from_truth(cls, matrix: SensingMatrix, truth: SparseSignal, seed: int = 0, tags=()):
        """Build an instance with the exact observation ``y = F x0``."""
        return cls(matrix, truth, observe(matrix, truth.values), seed, tags)

    @property
    def m(self) -> int:
        return self.matrix.m

    @property
    def n(self) -> int:
        return self.matrix.n

    def to_json(self) -> str:
        doc = {
            "m": self.m,
            "n": self.n,
            "seed": int(self.seed),
            "matrix": self.matrix.F.ravel().tolist(),
            "x0": self.truth.pairs(),
            "y": self.y.tolist(),
        }
        if self.tags:
            doc["tags"] = list(self.tags)
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ProblemInstance":
        doc = json.loads(text)
        m, n = int(doc["m"]), int(doc["n"])
        F = np.array(doc["matrix"], dtype=np.float64)
        if F.size != m * n:
            raise MalformedInputError(f"matrix has {F.size} entries, expected {m * n}")
        matrix = SensingMatrix(F.reshape(m, n))
        truth = SparseSignal.from_pairs(n, doc["x0"])
        return cls(matrix, truth, np.array(doc["y"]), int(doc["seed"]), tuple(doc.get("tags", ())))


def observe(matrix: SensingMatrix, x: np.ndarray) -> np.ndarray:
    """``F x`` summed in ascending column order, reproducible across BLAS builds."""
    x = np.asarray(x, dtype=np.float64)
    y = np.zeros(matrix.m)
    for i in np.flatnonzero(x):
        y += matrix.F[:, i] * x[i]
    return y


def mse_per_entry(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise MalformedInputError(f"cannot compare vectors of shapes {a.shape} and {b.shape}")
    d = a - b
    return float(d @ d) / a.size


def residual(instance: ProblemInstance, x) -> np.ndarray:
    """Constraint violation ``z = y - F x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (instance.n,):
        raise MalformedInputError(f"x has shape {x.shape}, expected ({instance.n},)")
    return instance.y - instance.matrix.F @ x


AUTO = "auto"


@dataclass(frozen=True)
class AnnealSchedule:
    """Exponential schedule ``k_t = max(k0 * decay**t, k_floor)``.

    ``k0 = "auto"`` resolves per instance to ``max_i |(F^T y)_i|`` so that the
    first update lands entirely in the dead zone.  ``k0_scale`` multiplies the
    resolved value; short step budgets use it to skip the early stretch of a
    slow schedule.
    """

    k0: Union[float, str] = AUTO
    decay: float = 0.999
    k_floor: float = 1e-9
    k0_scale: float = 1.0

    def __post_init__(self):
        if self.k0 != AUTO and not (float(self.k0) > 0):
            raise ValueError(f"k0 must be positive or 'auto', got {self.k0!r}")
        if not (0 < self.decay <= 1):
            raise ValueError(f"decay must lie in (0, 1], got {self.decay}")
        if self.k_floor < 0:
            raise ValueError("k_floor must be nonnegative")
        if not self.k0_scale > 0:
            raise ValueError("k0_scale must be positive")

    def initial(self, instance: ProblemInstance) -> float:
        if self.k0 == AUTO:
            k0 = float(np.max(np.abs(instance.matrix.F.T @ instance.y), initial=0.0))
        else:
            k0 = float(self.k0)
        return max(self.k0_scale * k0, self.k_floor)

    def at(self, k0: float, t: int) -> float:
        return max(k0 * self.decay**t, self.k_floor)


class Variant(str, enum.Enum):
    NAIVE = "naive"
    PARTIAL = "partial"  # constant partition ratio gamma
    MAP_GAMMA = "map-gamma"  # step-dependent partition ratio
    AMP_EXTERNAL = "amp-external"
    AMP = "amp"


@dataclass(frozen=True)
class SolverConfig:
    variant: Variant = Variant.MAP_GAMMA
    gamma: float = 1.0  # only used by Variant.PARTIAL
    anneal: AnnealSchedule = field(default_factory=AnnealSchedule)
    max_steps: int = 2000
    mse_success_threshold: float = 1e-3
    fixed_point_tol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if not self.mse_success_threshold > 0:
            raise ValueError("mse_success_threshold must be positive")
        if self.variant is Variant.PARTIAL and not self.gamma >= 0:
            raise ValueError("constant partition ratio must be nonnegative")

    @property
    def label(self) -> str:
        if self.variant is Variant.PARTIAL:
            return f"partial{self.gamma:g}"
        return self.variant.value


@dataclass
class IterateState:
    """Mutable per-run iterate, owned by a single solver run."""

    x: np.ndarray
    z: np.ndarray
    z_hat: np.ndarray
    k_current: float
    t: int = 0
    x_prev: Optional[np.ndarray] = None
    z_hat_prev: Optional[np.ndarray] = None
    degenerate_hits: int = 0

    @classmethod
    def cold(cls, instance: ProblemInstance, k: float) -> "IterateState":
        n, m = instance.n, instance.m
        return cls(
            x=np.zeros(n),
            z=instance.y.copy(),
            z_hat=np.zeros(m),
            k_current=k,
            x_prev=np.zeros(n),
            z_hat_prev=np.zeros(m),
        )


@dataclass
class RunResult:
    x_final: np.ndarray
    mse_trace: list
    k_trace: list
    gamma_trace: list
    steps_taken: int
    success: bool
    residual_norm_final: float
    variant: str = ""
    seed: int = 0
    error: Optional[str] = None
    degenerate_hits: int = 0

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "seed": int(self.seed),
            "steps": int(self.steps_taken),
            "success": bool(self.success),
            "mse_trace": [float(v) for v in self.mse_trace],
            "k_trace": [float(v) for v in self.k_trace],
            "gamma_trace": [float(v) for v in self.gamma_trace],
            "residual_norm_final": _finite_or_none(self.residual_norm_final),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _finite_or_none(v: float):
    v = float(v)
    return v if math.isfinite(v) else None
