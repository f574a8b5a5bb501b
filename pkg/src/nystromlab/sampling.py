"""Uniform column sampling with reproducible, parallel-safe streams.

Randomness policy
-----------------
Every random draw in the package flows through a counter-based Philox
bit generator keyed by the pair ``(master_seed, stream_id)``.  Philox is a
stateless 64-bit counter/key design, so distinct stream ids give
statistically independent streams and the draw for a given key is
identical across platforms, runs, and thread schedules.  A trial's stream
id is its trial index, which is what makes per-trial records reproducible
in isolation.

Sampling ``l`` of ``n`` columns without replacement is the first ``l``
entries of a Fisher-Yates shuffle of ``0..n-1``: at step ``i`` the pool
entry at a uniform position ``j`` in ``[i, n)`` is swapped into slot ``i``.
Each ``j`` comes from ``Generator.integers``, which is unbiased, so every
size-``l`` subset (in every order) is equally likely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import SymMatrix

_U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class RngSeed:
    """Key of one random stream: (master seed, stream id), both uint64."""

    master_seed: int
    stream_id: int

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ValueError(f"{name} must be an integer, got {v!r}")
            if not 0 <= int(v) <= _U64_MAX:
                raise ValueError(f"{name} must lie in [0, 2^64), got {v}")


def rng_from(seed: RngSeed) -> np.random.Generator:
    """Philox generator keyed by (master_seed, stream_id)."""
    key = np.array([seed.master_seed, seed.stream_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ColumnSample:
    """An ordered sample of distinct column indices of an n x n matrix."""

    n: int
    indices: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        l = len(self.indices)
        if not 1 <= l <= self.n:
            raise ValueError(f"sample size {l} out of range [1, {self.n}]")
        seen = set()
        for idx in self.indices:
            if not isinstance(idx, (int, np.integer)) or isinstance(idx, bool):
                raise ValueError(f"index {idx!r} is not an integer")
            if not 0 <= idx < self.n:
                raise ValueError(f"index {idx} out of range [0, {self.n})")
            if idx in seen:
                raise ValueError(f"duplicate index {idx} in sample")
            seen.add(idx)

    @property
    def l(self) -> int:
        return len(self.indices)


def sample_uniform(n: int, l: int, seed: RngSeed) -> ColumnSample:
    """Draw l distinct indices from 0..n-1, uniformly over subsets.

    Deterministic given the seed: the same (master_seed, stream_id) yields
    the same sample on every run and under any thread schedule.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 1 <= l <= n:
        raise ValueError(f"sample size l={l} out of range [1, {n}]")
    rng = rng_from(seed)
    pool = np.arange(n)
    for i in range(l):
        j = int(rng.integers(i, n))
        pool[i], pool[j] = pool[j], pool[i]
    return ColumnSample(n=n, indices=tuple(int(x) for x in pool[:l]))


def selection_matrix(sample: ColumnSample) -> np.ndarray:
    """The n x l 0/1 matrix S whose j-th column is e_{indices[j]}.

    Multiplying A @ S gathers the sampled columns; S^T S is the l x l
    identity exactly.
    """
    s = np.zeros((sample.n, sample.l))
    s[list(sample.indices), np.arange(sample.l)] = 1.0
    return s


def extract_cw(a: SymMatrix, sample: ColumnSample) -> tuple[np.ndarray, SymMatrix]:
    """Gather C = A S (sampled columns) and W = S^T A S (principal block).

    Implemented as index gathers, so the entries of C and W are bit-equal
    to the corresponding entries of A - no arithmetic is applied.
    """
    if sample.n != a.n:
        raise ValueError(f"sample is over n={sample.n} but the matrix has n={a.n}")
    idx = list(sample.indices)
    c = a.entries[:, idx].copy()
    w = a.entries[np.ix_(idx, idx)]
    return c, SymMatrix(w)
