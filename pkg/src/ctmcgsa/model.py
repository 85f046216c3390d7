"""Compartmental CTMC models as directed graphs with rate expressions."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import ImpossibleTransitionError, ModelValidationError, RateEvaluationError
from .expr import Count, RateExpr, compile_rates, evaluate, identifiers, parse_rate_expr

_NAME = re.compile(r"^[A-Za-z0-9_]+$")
_PARAM_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class TransitionChannel:
    source: str
    target: str
    rate: RateExpr
    jump: tuple[int, ...]

    @property
    def label(self) -> str:
        return f"({self.source},{self.target})"

    @property
    def source_index(self) -> int:
        return self.jump.index(-1)

    @property
    def target_index(self) -> int:
        return self.jump.index(1)


def jump_vector(compartments: Sequence[str], source: str, target: str) -> tuple[int, ...]:
    return tuple(-1 if c == source else (1 if c == target else 0) for c in compartments)


@dataclass(frozen=True)
class ModelGraph:
    """A closed-population compartmental model.

    Channel order is part of the model's identity: stream assignment and
    tie-breaking in the simulators follow it.
    """

    name: str
    compartments: tuple[str, ...]
    channels: tuple[TransitionChannel, ...]
    population: int
    initial: tuple[int, ...]
    parameter_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "compartments", tuple(self.compartments))
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "initial", tuple(int(x) for x in self.initial))
        object.__setattr__(self, "parameter_names", tuple(self.parameter_names))
        _check(self)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def n_compartments(self) -> int:
        return len(self.compartments)

    def index(self, compartment: str) -> int:
        try:
            return self.compartments.index(compartment)
        except ValueError:
            raise KeyError(f"unknown compartment {compartment!r}") from None

    def channel(self, source: str, target: str) -> TransitionChannel:
        for ch in self.channels:
            if ch.source == source and ch.target == target:
                return ch
        raise KeyError(f"no channel ({source},{target})")

    def parameter_vector(self, theta: Mapping[str, float]) -> np.ndarray:
        missing = [p for p in self.parameter_names if p not in theta]
        if missing:
            raise ModelValidationError(f"parameter point is missing {missing}")
        return np.array([float(theta[p]) for p in self.parameter_names], dtype=np.float64)

    def with_initial(self, initial: Sequence[int]) -> "ModelGraph":
        return ModelGraph(
            self.name, self.compartments, self.channels, sum(initial), tuple(initial), self.parameter_names
        )

    # arrays consumed by the kernels; not part of equality
    @cached_property
    def program(self):
        return compile_rates([ch.rate for ch in self.channels], self.parameter_names)

    @cached_property
    def source_indices(self) -> np.ndarray:
        return np.array([ch.source_index for ch in self.channels], dtype=np.int64)

    @cached_property
    def target_indices(self) -> np.ndarray:
        return np.array([ch.target_index for ch in self.channels], dtype=np.int64)

    @cached_property
    def _dependencies(self):
        reads = [identifiers(ch.rate)[1] for ch in self.channels]
        ptr = [0]
        idx: list[int] = []
        for ch in self.channels:
            touched = {ch.source, ch.target}
            idx.extend(j for j, names in enumerate(reads) if names & touched)
            ptr.append(len(idx))
        return np.array(ptr, dtype=np.int64), np.array(idx, dtype=np.int64)

    @property
    def dependency_ptr(self) -> np.ndarray:
        """CSR row pointers: channels to re-evaluate after each channel fires."""
        return self._dependencies[0]

    @property
    def dependency_idx(self) -> np.ndarray:
        return self._dependencies[1]

    @cached_property
    def initial_array(self) -> np.ndarray:
        return np.array(self.initial, dtype=np.int64)


def _check(model: ModelGraph) -> None:
    comps = model.compartments
    if not comps:
        raise ModelValidationError("model has no compartments")
    if len(set(comps)) != len(comps):
        dup = sorted({c for c in comps if comps.count(c) > 1})
        raise ModelValidationError(f"duplicate compartment name(s) {dup}")
    for c in comps:
        if not _NAME.match(c):
            raise ModelValidationError(f"invalid compartment name {c!r}")
    params = model.parameter_names
    if len(set(params)) != len(params):
        raise ModelValidationError("duplicate parameter names")
    for p in params:
        if not _PARAM_NAME.match(p) or p == "N" or p.startswith("W_"):
            raise ModelValidationError(f"invalid parameter name {p!r}")
    if not model.channels:
        raise ModelValidationError("model has no transition channels")
    if isinstance(model.population, bool) or int(model.population) != model.population or model.population <= 0:
        raise ModelValidationError(f"population size must be a positive integer, got {model.population!r}")
    if len(model.initial) != len(comps):
        raise ModelValidationError(f"initial state has length {len(model.initial)}, expected {len(comps)}")
    if any(x < 0 for x in model.initial):
        raise ModelValidationError("initial state has negative counts")
    if sum(model.initial) != model.population:
        raise ModelValidationError(f"initial state sums to {sum(model.initial)}, expected N={model.population}")
    for k, ch in enumerate(model.channels):
        where = f"channel {k + 1} {ch.label}"
        if ch.source not in comps or ch.target not in comps:
            raise ModelValidationError(f"{where}: unknown compartment")
        if ch.source == ch.target:
            raise ModelValidationError(f"{where}: source equals target")
        if tuple(ch.jump) != jump_vector(comps, ch.source, ch.target):
            raise ModelValidationError(f"{where}: jump vector inconsistent with (source, target): {ch.jump}")
        used_params, used_comps = identifiers(ch.rate)
        unknown = sorted(used_params - set(params))
        if unknown:
            raise ModelValidationError(f"{where}: unknown identifier(s) {unknown} in rate")
        unknown = sorted(used_comps - set(comps))
        if unknown:
            raise ModelValidationError(f"{where}: unknown compartment(s) {unknown} in rate")
        _check_counts(ch.rate, comps, where)


def _check_counts(expr, comps, where):
    if isinstance(expr, Count):
        if expr.index >= len(comps) or comps[expr.index] != expr.name:
            raise ModelValidationError(f"{where}: compartment reference W_{expr.name} has a stale index")
    elif hasattr(expr, "left"):
        _check_counts(expr.left, comps, where)
        _check_counts(expr.right, comps, where)


def validate_model(graph: ModelGraph) -> ModelGraph:
    """Re-check every invariant; returns the same (immutable) graph."""
    _check(graph)
    return graph


def eval_rate(channel: TransitionChannel, theta: Mapping[str, float], state: Sequence[int], N: int) -> float:
    value = evaluate(channel.rate, theta, state, N)
    if not (math.isfinite(value) and value >= 0.0):
        raise RateEvaluationError(channel.label, state, value)
    return value


def apply_transition(state: Sequence[int], channel: TransitionChannel) -> tuple[int, ...]:
    if state[channel.source_index] < 1:
        raise ImpossibleTransitionError(
            f"impossible transition {channel.label}: compartment {channel.source} is empty in {tuple(state)}"
        )
    return tuple(int(x) + d for x, d in zip(state, channel.jump))


def make_model(
    name: str,
    compartments: Sequence[str],
    parameters: Sequence[str],
    channels: Sequence[tuple[str, str, str]],
    initial: Sequence[int],
    population: int | None = None,
) -> ModelGraph:
    """Build a model from ``(source, target, rate source text)`` triples."""
    compartments = tuple(compartments)
    built = [
        TransitionChannel(src, dst, parse_rate_expr(rate, parameters, compartments), jump_vector(compartments, src, dst))
        for src, dst, rate in channels
    ]
    if population is None:
        population = sum(initial)
    return ModelGraph(name, compartments, tuple(built), population, tuple(initial), tuple(parameters))


SIR_PARAMETERS = ("beta", "gamma_I")


def build_sir(N: int = 100, initial: Sequence[int] | None = None) -> ModelGraph:
    """Classical SIR: infection ``beta/N*W_I*W_S`` and removal ``gamma_I*W_I``."""
    if initial is None:
        initial = (N - 5, 5, 0)
    return make_model(
        "sir",
        ("S", "I", "R"),
        SIR_PARAMETERS,
        [("S", "I", "beta/N * W_I * W_S"), ("I", "R", "gamma_I * W_I")],
        initial,
        N,
    )


SEIARHD_COMPARTMENTS = ("S", "E", "A", "I", "H", "R", "D")
SEIARHD_PARAMETERS = ("beta", "gamma_E", "gamma_A", "gamma_I", "gamma_H", "p_EA", "p_IH", "p_ID", "p_HD")
SEIARHD_CHANNELS = (
    ("S", "E", "beta/N * W_S * (W_A + W_I)"),
    ("E", "A", "gamma_E * p_EA * W_E"),
    ("E", "I", "gamma_E * (1 - p_EA) * W_E"),
    ("A", "R", "gamma_A * W_A"),
    ("I", "R", "gamma_I * (1 - p_IH - p_ID) * W_I"),
    ("I", "H", "gamma_I * p_IH * W_I"),
    ("I", "D", "gamma_I * p_ID * W_I"),
    ("H", "R", "gamma_H * (1 - p_HD) * W_H"),
    ("H", "D", "gamma_H * p_HD * W_H"),
)
SEIARHD_INITIAL = (2000, 5, 0, 0, 0, 0, 0)
SEIARHD_NOMINAL = {
    "beta": 2.0,
    "gamma_E": 1 / 4.6,
    "gamma_A": 1 / 2.1,
    "gamma_I": 1 / 4.0,
    "gamma_H": 1 / 10.0,
    "p_EA": 0.6,
    "p_IH": 0.15,
    "p_ID": 0.05,
    "p_HD": 0.08,
}


def build_seiarhd(N: int = 2005, initial: Sequence[int] | None = None) -> ModelGraph:
    """The seven-compartment, nine-channel SARS-CoV-2 model."""
    if initial is None:
        initial = SEIARHD_INITIAL
    if len(initial) != len(SEIARHD_COMPARTMENTS):
        raise ModelValidationError(f"initial state must have 7 components, got {len(initial)}")
    return make_model("seiarhd", SEIARHD_COMPARTMENTS, SEIARHD_PARAMETERS, SEIARHD_CHANNELS, initial, N)
