"""Reproducible uniform streams.

The generator is pinned to L'Ecuyer's MRG32k3a, implemented in exact int64
arithmetic so that the JIT and pure-Python paths emit identical bits.  An
integer seed in ``{1, ..., 10**9}`` is expanded into the six-word state by
LCG scrambling (the same idea R uses for its own generators) followed by a
short warm-up.  Golden values in the test-suite depend on every constant
here: do not change them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ._jit import njit

SEED_MIN = 1
SEED_MAX = 10**9

M1 = 4294967087
M2 = 4294944443
A12 = 1403580
A13N = 810728
A21 = 527612
A23N = 1370589
NORM = 2.328306549295727688e-10  # 1 / (M1 + 1)

_LCG_A = 69069
_LCG_MOD = 4294967296
_SCRAMBLE_ROUNDS = 50
_WARMUP = 8


@njit
def mrg_next(state, row):
    """Advance stream ``row`` of ``state`` (shape ``(k, 6)``) and return a draw in (0, 1)."""
    while True:
        p1 = (A12 * state[row, 1] - A13N * state[row, 0]) % M1
        state[row, 0] = state[row, 1]
        state[row, 1] = state[row, 2]
        state[row, 2] = p1
        p2 = (A21 * state[row, 5] - A23N * state[row, 3]) % M2
        state[row, 3] = state[row, 4]
        state[row, 4] = state[row, 5]
        state[row, 5] = p2
        if p1 > p2:
            u = (p1 - p2) * NORM
        else:
            u = (p1 - p2 + M1) * NORM
        # unreachable for MRG32k3a, kept so -log(u) is finite by construction
        if u > 0.0 and u < 1.0:
            return u


@njit
def mrg_seed(seed, state, row):
    """Initialise stream ``row`` of ``state`` from an integer seed."""
    s = seed % _LCG_MOD
    for _ in range(_SCRAMBLE_ROUNDS):
        s = (_LCG_A * s + 1) % _LCG_MOD
    for i in range(6):
        m = M1 if i < 3 else M2
        s = (_LCG_A * s + 1) % _LCG_MOD
        while s >= m:
            s = (_LCG_A * s + 1) % _LCG_MOD
        state[row, i] = s
    if state[row, 0] == 0 and state[row, 1] == 0 and state[row, 2] == 0:
        state[row, 0] = 1
    if state[row, 3] == 0 and state[row, 4] == 0 and state[row, 5] == 0:
        state[row, 3] = 1
    for _ in range(_WARMUP):
        mrg_next(state, row)


@njit
def mrg_fill(state, row, out):
    for i in range(out.shape[0]):
        out[i] = mrg_next(state, row)


def check_seed(seed: int) -> int:
    seed_int = int(seed)
    if seed_int != seed or not SEED_MIN <= seed_int <= SEED_MAX:
        raise ValueError(f"seed must be an integer in [{SEED_MIN}, {SEED_MAX}], got {seed!r}")
    return seed_int


class UniformStream:
    """A seeded, replayable stream of uniform(0, 1) draws.

    Not safe to share between threads; build one stream per worker.
    """

    def __init__(self, seed: int):
        self.seed = check_seed(seed)
        self.state = np.zeros((1, 6), dtype=np.int64)
        mrg_seed(self.seed, self.state, 0)
        self.draw_count = 0

    def next_uniform(self) -> float:
        self.draw_count += 1
        return float(mrg_next(self.state, 0))

    def uniforms(self, size: int) -> np.ndarray:
        out = np.empty(int(size), dtype=np.float64)
        mrg_fill(self.state, 0, out)
        self.draw_count += out.shape[0]
        return out

    def integers(self, low: int, high: int, size: int) -> np.ndarray:
        """Integers uniform on ``{low, ..., high}`` (inclusive)."""
        u = self.uniforms(size)
        return low + np.floor(u * (high - low + 1)).astype(np.int64)

    def __iter__(self) -> Iterator[float]:
        while True:
            yield self.next_uniform()

    def __repr__(self) -> str:
        return f"UniformStream(seed={self.seed}, draw_count={self.draw_count})"


def stream_from_seed(seed: int) -> UniformStream:
    return UniformStream(seed)


def next_uniform(stream: UniformStream) -> float:
    return stream.next_uniform()


@dataclass(frozen=True)
class SeedVector:
    """Per-slot stream seeds: the finite encoding of the intrinsic randomness."""

    seeds: tuple[int, ...]

    def __post_init__(self):
        if len(self.seeds) == 0:
            raise ValueError("SeedVector needs at least one seed")
        object.__setattr__(self, "seeds", tuple(check_seed(s) for s in self.seeds))

    def __len__(self) -> int:
        return len(self.seeds)

    def __iter__(self):
        return iter(self.seeds)

    def __getitem__(self, i):
        return self.seeds[i]

    def streams(self) -> list[UniformStream]:
        return [UniformStream(s) for s in self.seeds]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.seeds, dtype=np.int64)

    @classmethod
    def of(cls, seeds: Sequence[int]) -> "SeedVector":
        return cls(tuple(int(s) for s in seeds))


def draw_seeds(master: UniformStream, shape) -> np.ndarray:
    """Array of seeds uniform on ``{1, ..., 10**9}`` drawn from ``master``."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    size = int(np.prod(shape))
    return master.integers(SEED_MIN, SEED_MAX, size).reshape(shape)


def draw_seed_vector(master: UniformStream, n_slots: int) -> SeedVector:
    if n_slots < 1:
        raise ValueError("n_slots must be >= 1")
    return SeedVector.of(draw_seeds(master, n_slots))


def seeding_state(seeds: np.ndarray) -> np.ndarray:
    """Generator states for a 1-D array of seeds, one row per seed."""
    seeds = np.asarray(seeds, dtype=np.int64)
    state = np.zeros((seeds.shape[0], 6), dtype=np.int64)
    for k in range(seeds.shape[0]):
        mrg_seed(seeds[k], state, k)
    return state
