"""Seeded generation of Gaussian sensing matrices and sparse signals.

Randomness is counter based: each named stream (``"matrix"``, ``"mask"``,
``"support"``, ``"signal"``) gets its own Philox key derived from the seed,
and matrix entry ``(mu, i)`` always consumes the same two counter words.  Any
single entry can therefore be regenerated without producing the rest.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import ProblemInstance, SensingMatrix, SparseSignal

log = logging.getLogger(__name__)

_STREAMS = {"matrix": 1, "mask": 2, "support": 3, "signal": 4}
_U53 = 2.0**-53


def stream_key(seed: int, stream: str) -> np.ndarray:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, _STREAMS[stream]])
    return ss.generate_state(2, dtype=np.uint64)


def _raw_words(seed: int, stream: str, start_word: int, count: int) -> np.ndarray:
    block, offset = divmod(start_word, 4)
    bg = np.random.Philox(key=stream_key(seed, stream),
                          counter=np.array([block, 0, 0, 0], dtype=np.uint64))
    return bg.random_raw(offset + count)[offset:]


def _normals_from_words(w: np.ndarray) -> np.ndarray:
    # Box-Muller on word pairs; u1 in (0, 1] keeps the log finite.
    u1 = ((w[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _U53
    u2 = (w[1::2] >> np.uint64(11)).astype(np.float64) * _U53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def _uniforms_from_words(w: np.ndarray) -> np.ndarray:
    return (w >> np.uint64(11)).astype(np.float64) * _U53


def keyed_normals(seed: int, stream: str, count: int, start: int = 0) -> np.ndarray:
    """Standard normals number ``start .. start+count-1`` of a stream."""
    return _normals_from_words(_raw_words(seed, stream, 2 * start, 2 * count))


def keyed_uniforms(seed: int, stream: str, count: int, start: int = 0) -> np.ndarray:
    return _uniforms_from_words(_raw_words(seed, stream, start, count))


@dataclass(frozen=True)
class GenSpec:
    n: int
    m: int
    k_nonzeros: int
    seed: int = 0
    keep_fraction: float = 1.0  # < 1 gives the sparsified Gaussian ensemble

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"need n >= 1 and m >= 1, got n={self.n}, m={self.m}")
        if not 0 <= self.k_nonzeros <= self.n:
            raise ValueError(f"k_nonzeros={self.k_nonzeros} outside [0, {self.n}]")
        if not 0 < self.keep_fraction <= 1:
            raise ValueError("keep_fraction must lie in (0, 1]")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def matrix_kind(self) -> str:
        return "dense" if self.keep_fraction == 1.0 else f"sparse{self.keep_fraction:g}"

    @classmethod
    def from_ratios(cls, n: int, alpha: float, rho: float, seed: int = 0,
                    keep_fraction: float = 1.0) -> "GenSpec":
        return cls(n=n, m=max(1, round(alpha * n)), k_nonzeros=round(rho * n),
                   seed=seed, keep_fraction=keep_fraction)


def matrix_entry(spec: GenSpec, mu: int, i: int) -> float:
    """Entry ``F[mu, i]`` computed in isolation."""
    j = mu * spec.n + i
    v = keyed_normals(spec.seed, "matrix", 1, start=j)[0] / np.sqrt(spec.m)
    if spec.keep_fraction < 1.0 and keyed_uniforms(spec.seed, "mask", 1, start=j)[0] >= spec.keep_fraction:
        return 0.0
    return float(v)


def gen_matrix(spec: GenSpec) -> SensingMatrix:
    """i.i.d. N(0, 1/m) entries, optionally zeroed with probability ``1 - keep_fraction``.

    Retained entries are not rescaled after sparsification.
    """
    size = spec.m * spec.n
    F = keyed_normals(spec.seed, "matrix", size).reshape(spec.m, spec.n) / np.sqrt(spec.m)
    if spec.keep_fraction < 1.0:
        drop = keyed_uniforms(spec.seed, "mask", size).reshape(spec.m, spec.n) >= spec.keep_fraction
        F[drop] = 0.0
    mat = SensingMatrix(F)
    if spec.keep_fraction == 1.0 and spec.m >= 200:
        spread = float(np.max(np.abs(mat.col_sq_norms - 1.0)))
        if spread >= 0.5:
            log.warning("column norms poorly concentrated: max |c_i - 1| = %.3f", spread)
    return mat


def gen_signal(spec: GenSpec) -> SparseSignal:
    """Exactly ``k_nonzeros`` N(0, 1) entries on a uniformly random support."""
    x = np.zeros(spec.n)
    if spec.k_nonzeros:
        rng = np.random.Generator(np.random.Philox(key=stream_key(spec.seed, "support")))
        support = np.sort(rng.choice(spec.n, size=spec.k_nonzeros, replace=False))
        vals = keyed_normals(spec.seed, "signal", spec.k_nonzeros)
        # a Box-Muller draw of exactly 0.0 has probability ~2^-53; keep |support| exact anyway
        vals[vals == 0.0] = np.finfo(float).tiny
        x[support] = vals
    return SparseSignal(x)


def make_instance(spec: GenSpec, tags=()) -> ProblemInstance:
    matrix = gen_matrix(spec)
    truth = gen_signal(spec)
    base = (f"n={spec.n}", f"m={spec.m}", f"k={spec.k_nonzeros}", f"matrix={spec.matrix_kind}")
    return ProblemInstance.from_truth(matrix, truth, seed=int(spec.seed), tags=base + tuple(tags))
