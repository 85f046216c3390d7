"""Exact CTMC simulators as deterministic functions of (model, theta, seeds, T).

Four representations are available:

``direct``          classical Gillespie direct method on a single stream
``direct2``         direct method with jump times from stream 1 and the
                    embedded chain from stream 2
``first-reaction``  one stream per channel, one candidate exponential per
                    channel per step
``mnrm``            modified next reaction method (random time change), one
                    unit-rate Poisson process per channel
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .expr import evaluate
from .errors import EventCapExceeded, ImpossibleTransitionError, RateEvaluationError
from .model import ModelGraph
from .rng import SeedVector, UniformStream, seeding_state

DEFAULT_MAX_EVENTS = 10**8


class RepresentationKind(enum.Enum):
    DIRECT = "direct"
    DIRECT_TWO_STREAM = "direct2"
    FIRST_REACTION = "first-reaction"
    MNRM = "mnrm"

    @property
    def code(self) -> int:
        return _KIND_CODES[self]

    def n_streams(self, model: ModelGraph) -> int:
        if self is RepresentationKind.DIRECT:
            return 1
        if self is RepresentationKind.DIRECT_TWO_STREAM:
            return 2
        return model.n_channels

    @classmethod
    def parse(cls, value) -> "RepresentationKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown representation {value!r} (choose from {choices})") from None


_KIND_CODES = {
    RepresentationKind.DIRECT: kernels.DIRECT,
    RepresentationKind.DIRECT_TWO_STREAM: kernels.DIRECT2,
    RepresentationKind.FIRST_REACTION: kernels.FIRST_REACTION,
    RepresentationKind.MNRM: kernels.MNRM,
}

_REASONS = {kernels.ABSORBED: "absorbed", kernels.HORIZON: "horizon_reached", kernels.STOPPED: "stopped"}


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Right-continuous step path: ``states[k]`` holds on ``[times[k], times[k+1])``.

    ``jump_times`` excludes time 0, so ``len(states) == len(jump_times) + 1``.
    """

    compartments: tuple[str, ...]
    jump_times: np.ndarray
    states: np.ndarray
    channels: np.ndarray
    terminal_reason: str
    t_end: float

    @property
    def n_jumps(self) -> int:
        return self.jump_times.shape[0]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.compartments == other.compartments
            and self.terminal_reason == other.terminal_reason
            and np.array_equal(self.jump_times, other.jump_times)
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.channels, other.channels)
        )

    def to_csv(self, fp=None) -> str:
        """CSV with columns ``time`` then one per compartment; ``time`` 0 is the initial state."""
        out = io.StringIO() if fp is None else fp
        out.write(",".join(("time",) + self.compartments) + "\n")
        times = np.concatenate(([0.0], self.jump_times))
        for t, row in zip(times, self.states):
            out.write(format_float(t) + "," + ",".join(str(int(v)) for v in row) + "\n")
        return out.getvalue() if fp is None else ""


def format_float(x: float) -> str:
    """12 significant digits, '.' separator."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(float(x), ".12g")


def _theta_array(model: ModelGraph, theta) -> np.ndarray:
    if isinstance(theta, Mapping):
        return model.parameter_vector(theta)
    arr = np.asarray(theta, dtype=np.float64)
    if arr.shape != (len(model.parameter_names),):
        raise ValueError(f"theta must have {len(model.parameter_names)} entries")
    return arr


def _stop_mask(model: ModelGraph, stop_when_empty: Sequence[str] | None):
    mask = np.zeros(model.n_compartments, dtype=np.int64)
    if stop_when_empty:
        for name in stop_when_empty:
            mask[model.index(name)] = 1
    return mask, bool(stop_when_empty)


def raise_for_status(model: ModelGraph, status: int, bad: int, state, max_events: int, theta: np.ndarray):
    if status == kernels.ERR_RATE:
        ch = model.channels[bad]
        value = evaluate(ch.rate, dict(zip(model.parameter_names, theta)), state, model.population)
        raise RateEvaluationError(ch.label, state, value)
    if status == kernels.ERR_CAP:
        raise EventCapExceeded(f"event cap of {max_events} reached before termination")
    if status == kernels.ERR_IMPOSSIBLE:
        raise ImpossibleTransitionError(f"simulator fired {model.channels[bad].label} from an empty compartment")


def _run(
    model: ModelGraph,
    kind: RepresentationKind,
    theta,
    rng_state: np.ndarray,
    t_end: float,
    max_events: int,
    stop_when_empty,
) -> Trajectory:
    prog = model.program
    theta = _theta_array(model, theta)
    mask, use_stop = _stop_mask(model, stop_when_empty)
    empty_grid = np.zeros(0, dtype=np.float64)
    status, bad, n, t, t_stop, x, times, chans = kernels.simulate(
        kind.code,
        prog.code,
        prog.length,
        prog.slot_code,
        prog.slot_length,
        prog.literals,
        prog.max_stack,
        model.source_indices,
        model.target_indices,
        model.dependency_ptr,
        model.dependency_idx,
        model.initial_array,
        float(model.population),
        theta,
        rng_state,
        float(t_end),
        int(max_events),
        mask,
        use_stop,
        empty_grid,
        0,
        empty_grid,
        True,
    )
    raise_for_status(model, status, bad, x, max_events, theta)
    jumps = np.zeros((model.n_channels, model.n_compartments), dtype=np.int64)
    jumps[np.arange(model.n_channels), model.source_indices] = -1
    jumps[np.arange(model.n_channels), model.target_indices] = 1
    states = np.vstack([model.initial_array[None, :], model.initial_array + np.cumsum(jumps[chans], axis=0)])
    return Trajectory(model.compartments, times, states, chans, _REASONS[int(status)], float(t_end))


def _check_seeds(model, kind, seeds) -> SeedVector:
    if not isinstance(seeds, SeedVector):
        seeds = SeedVector.of(seeds)
    need = kind.n_streams(model)
    if len(seeds) != need:
        raise ValueError(f"{kind.value} needs a SeedVector of length {need}, got {len(seeds)}")
    return seeds


def gillespie_direct(
    model: ModelGraph,
    theta,
    stream: UniformStream,
    T: float = math.inf,
    *,
    max_events: int = DEFAULT_MAX_EVENTS,
    stop_when_empty: Sequence[str] | None = None,
) -> Trajectory:
    """Classical direct method consuming two draws per jump from ``stream``.

    The stream advances, so successive calls give independent paths.
    """
    traj = _run(model, RepresentationKind.DIRECT, theta, stream.state, T, max_events, stop_when_empty)
    # two draws per attempted jump; a horizon-crossing attempt also consumed two
    attempts = traj.n_jumps + (1 if traj.terminal_reason == "horizon_reached" else 0)
    stream.draw_count += 2 * attempts
    return traj


def gillespie_two_stream(model, theta, seeds, T=math.inf, *, max_events=DEFAULT_MAX_EVENTS, stop_when_empty=None):
    kind = RepresentationKind.DIRECT_TWO_STREAM
    seeds = _check_seeds(model, kind, seeds)
    return _run(model, kind, theta, seeding_state(seeds.as_array()), T, max_events, stop_when_empty)


def first_reaction(model, theta, seeds, T=math.inf, *, max_events=DEFAULT_MAX_EVENTS, stop_when_empty=None):
    kind = RepresentationKind.FIRST_REACTION
    seeds = _check_seeds(model, kind, seeds)
    return _run(model, kind, theta, seeding_state(seeds.as_array()), T, max_events, stop_when_empty)


def mnrm(model, theta, seeds, T=math.inf, *, max_events=DEFAULT_MAX_EVENTS, stop_when_empty=None):
    kind = RepresentationKind.MNRM
    seeds = _check_seeds(model, kind, seeds)
    return _run(model, kind, theta, seeding_state(seeds.as_array()), T, max_events, stop_when_empty)


def simulate(
    model: ModelGraph,
    representation,
    theta,
    seeds,
    T: float = math.inf,
    *,
    max_events: int = DEFAULT_MAX_EVENTS,
    stop_when_empty: Sequence[str] | None = None,
) -> Trajectory:
    """Dispatch on representation; ``seeds`` must match its stream count.

    For ``direct`` the single seed builds a fresh stream.
    """
    kind = RepresentationKind.parse(representation)
    seeds = _check_seeds(model, kind, seeds)
    return _run(model, kind, theta, seeding_state(seeds.as_array()), T, max_events, stop_when_empty)


def sample_path(traj: Trajectory, grid) -> np.ndarray:
    """States at each grid time (rows), using the right-continuous convention."""
    grid = np.asarray(grid, dtype=np.float64)
    if np.any(grid < 0):
        raise ValueError("grid times must be >= 0")
    idx = np.searchsorted(traj.jump_times, grid, side="right")
    return traj.states[idx]


@dataclass
class BatchResult:
    stop_times: np.ndarray
    grid_values: np.ndarray
    status: np.ndarray
    n_events: np.ndarray


def simulate_batch(
    model: ModelGraph,
    representation,
    thetas: np.ndarray,
    seeds: np.ndarray,
    T: float = math.inf,
    *,
    stop_when_empty: Sequence[str] | None = None,
    grid=None,
    grid_compartment: str | None = None,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> BatchResult:
    """Run one simulation per row of ``thetas`` / ``seeds`` without storing paths.

    Returns the stop-predicate times and/or one compartment sampled on
    ``grid``.  Errors in any row are raised after the batch finishes.
    """
    kind = RepresentationKind.parse(representation)
    thetas = np.ascontiguousarray(thetas, dtype=np.float64)
    seeds = np.ascontiguousarray(seeds, dtype=np.int64)
    if thetas.ndim != 2 or thetas.shape[1] != len(model.parameter_names):
        raise ValueError("thetas must be (rows, n_parameters)")
    if seeds.shape != (thetas.shape[0], kind.n_streams(model)):
        raise ValueError(f"seeds must be (rows, {kind.n_streams(model)}) for {kind.value}")
    n_rows = thetas.shape[0]
    grid = np.zeros(0) if grid is None else np.ascontiguousarray(grid, dtype=np.float64)
    comp = model.index(grid_compartment) if grid_compartment is not None else 0
    mask, use_stop = _stop_mask(model, stop_when_empty)
    out_stop = np.full(n_rows, np.inf)
    out_grid = np.zeros((n_rows, grid.shape[0]), dtype=np.float64)
    out_status = np.zeros(n_rows, dtype=np.int64)
    out_events = np.zeros(n_rows, dtype=np.int64)
    prog = model.program
    kernels.simulate_batch(
        kind.code,
        prog.code,
        prog.length,
        prog.slot_code,
        prog.slot_length,
        prog.literals,
        prog.max_stack,
        model.source_indices,
        model.target_indices,
        model.dependency_ptr,
        model.dependency_idx,
        model.initial_array,
        float(model.population),
        thetas,
        seeds,
        float(T),
        int(max_events),
        mask,
        use_stop,
        grid,
        comp,
        out_stop,
        out_grid,
        out_status,
        out_events,
    )
    failed = np.flatnonzero(out_status >= kernels.ERR_RATE)
    if failed.size:
        r = int(failed[0])
        # replay the failing row with full recording for a precise error
        simulate(model, kind, thetas[r], seeds[r], T, max_events=max_events, stop_when_empty=stop_when_empty)
        raise RuntimeError(f"row {r} failed with status {out_status[r]}")  # pragma: no cover
    return BatchResult(out_stop, out_grid, out_status, out_events)
