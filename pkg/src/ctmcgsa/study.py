"""Quantities of interest, replicated GSA studies and Welch comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import ExtinctionNotReached, ModelValidationError, ValidationError
from .gsa import DynamicalIndices, IndexEstimate, InputSpec, Replications, replicate_indices
from .model import ModelGraph
from .rng import UniformStream, check_seed
from .simulate import DEFAULT_MAX_EVENTS, RepresentationKind, Trajectory, sample_path, simulate_batch


@dataclass(frozen=True)
class QoIDef:
    """Either ``extinction_time`` (all of ``compartments`` empty) or
    ``compartment_curve`` (one compartment sampled on ``points`` equidistant
    times covering ``[0, t_end]``)."""

    kind: str
    compartments: tuple[str, ...] = ()
    t_end: float = math.inf
    points: int = 0

    def __post_init__(self):
        object.__setattr__(self, "compartments", tuple(self.compartments))
        if self.kind == "extinction_time":
            if not self.compartments:
                raise ValidationError("extinction_time needs at least one compartment")
        elif self.kind == "compartment_curve":
            if len(self.compartments) != 1:
                raise ValidationError("compartment_curve needs exactly one compartment")
            if not (math.isfinite(self.t_end) and self.t_end > 0):
                raise ValidationError("compartment_curve needs a finite t_end > 0")
            if self.points < 1:
                raise ValidationError("compartment_curve needs points >= 1")
        else:
            raise ValidationError(f"unknown QoI kind {self.kind!r}")

    @classmethod
    def extinction(cls, compartments: Sequence[str]) -> "QoIDef":
        return cls("extinction_time", tuple(compartments))

    @classmethod
    def curve(cls, compartment: str, t_end: float, points: int) -> "QoIDef":
        return cls("compartment_curve", (compartment,), float(t_end), int(points))

    @property
    def is_scalar(self) -> bool:
        return self.kind == "extinction_time"

    @property
    def grid(self) -> np.ndarray:
        if self.is_scalar:
            return np.zeros(0)
        if self.points == 1:
            return np.array([self.t_end])
        return np.linspace(0.0, self.t_end, self.points)

    def check_model(self, model: ModelGraph) -> None:
        for c in self.compartments:
            if c not in model.compartments:
                raise ModelValidationError(f"QoI refers to unknown compartment {c!r}")


@dataclass(frozen=True)
class StudyConfig:
    model: ModelGraph
    inputs: InputSpec
    representations: tuple[RepresentationKind, ...]
    n: int
    reps: int
    qoi: QoIDef
    seed: int
    max_events: int = DEFAULT_MAX_EVENTS

    def __post_init__(self):
        reps = tuple(RepresentationKind.parse(r) for r in self.representations)
        object.__setattr__(self, "representations", reps)
        if not reps:
            raise ValidationError("study needs at least one representation")
        if len(set(reps)) != len(reps):
            raise ValidationError("duplicate representation in study")
        if self.n < 2 or self.reps < 2:
            raise ValidationError("study needs n >= 2 and reps >= 2")
        check_seed(self.seed)
        self.inputs.check_model(self.model.parameter_names)
        self.qoi.check_model(self.model)

    def with_overrides(self, **changes) -> "StudyConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)


def extinction_time(traj: Trajectory, predicate: Sequence[str]) -> float:
    """First time all ``predicate`` compartments are empty (0 if they start empty)."""
    idx = [traj.compartments.index(c) for c in predicate]
    empty = np.all(traj.states[:, idx] == 0, axis=1)
    hits = np.flatnonzero(empty)
    if hits.size == 0:
        raise ExtinctionNotReached(f"compartments {list(predicate)} never all empty on this trajectory")
    k = int(hits[0])
    return 0.0 if k == 0 else float(traj.jump_times[k - 1])


def infectious_curve(traj: Trajectory, grid, compartment: str = "I") -> np.ndarray:
    return sample_path(traj, grid)[:, traj.compartments.index(compartment)].astype(np.float64)


def make_evaluator(cfg: StudyConfig, kind: RepresentationKind):
    """Map stacked design rows to QoI values for one representation."""
    model, qoi = cfg.model, cfg.qoi
    if qoi.is_scalar:

        def evaluate(thetas, seeds):
            res = simulate_batch(
                model, kind, thetas, seeds, math.inf, stop_when_empty=qoi.compartments, max_events=cfg.max_events
            )
            if not np.all(np.isfinite(res.stop_times)):
                r = int(np.flatnonzero(~np.isfinite(res.stop_times))[0])
                raise ExtinctionNotReached(f"design row {r} absorbed before {list(qoi.compartments)} emptied")
            return res.stop_times

    else:
        grid = qoi.grid

        def evaluate(thetas, seeds):
            res = simulate_batch(
                model,
                kind,
                thetas,
                seeds,
                qoi.t_end,
                grid=grid,
                grid_compartment=qoi.compartments[0],
                max_events=cfg.max_events,
            )
            return res.grid_values

    return evaluate


@dataclass
class StudyResult:
    """Replicated estimates per representation (keyed by representation value)."""

    config: StudyConfig
    replications: dict[str, Replications] = field(default_factory=dict)

    @property
    def groups(self) -> tuple[str, ...]:
        return self.config.inputs.group_names

    def estimates(self, representation: str) -> list[IndexEstimate]:
        """Flat list in group order, then replication order."""
        reps = self.replications[representation].estimates
        return [rep[k] for k in range(len(self.groups)) for rep in reps]


@dataclass
class FunctionalIndexReport:
    grid: np.ndarray
    groups: tuple[str, ...]
    dynamical: list[DynamicalIndices]
    aggregated: list[list[IndexEstimate]]

    def mean_curves(self, attr: str = "total") -> np.ndarray:
        """Replication mean of a dynamical index, shape (groups, grid); nan where undefined."""
        return np.mean([getattr(d, attr) for d in self.dynamical], axis=0)

    @property
    def defined(self) -> np.ndarray:
        return np.all([d.defined for d in self.dynamical], axis=0)


def _master_for(cfg: StudyConfig, position: int) -> UniformStream:
    # one master stream per representation, derived from the study seed and its
    # position in the list, so each representation gets independent designs
    master = UniformStream(cfg.seed)
    seeds = master.integers(1, 10**9 + 1, position + 1)
    return UniformStream(int(seeds[position]))


def _run(cfg: StudyConfig) -> StudyResult:
    result = StudyResult(cfg)
    for pos, kind in enumerate(cfg.representations):
        evaluate = make_evaluator(cfg, kind)
        grid = None if cfg.qoi.is_scalar else cfg.qoi.grid
        result.replications[kind.value] = replicate_indices(
            evaluate, cfg.inputs, cfg.n, cfg.reps, _master_for(cfg, pos), kind.n_streams(cfg.model), grid=grid
        )
    return result


def run_scalar_study(cfg: StudyConfig) -> StudyResult:
    if not cfg.qoi.is_scalar:
        raise ValidationError("run_scalar_study needs an extinction_time QoI")
    return _run(cfg)


def run_functional_study(cfg: StudyConfig) -> StudyResult:
    if cfg.qoi.is_scalar:
        raise ValidationError("run_functional_study needs a compartment_curve QoI")
    return _run(cfg)


def functional_report(result: StudyResult, representation: str) -> FunctionalIndexReport:
    reps = result.replications[representation]
    return FunctionalIndexReport(result.config.qoi.grid, result.groups, reps.dynamical, reps.estimates)


@dataclass(frozen=True)
class WelchResult:
    group: str
    mean1: float
    var1: float
    mean2: float
    var2: float
    t: float
    df: float
    p: float
    reject: bool


def welch_test(sample1, sample2, alpha: float = 0.01, group: str = "") -> WelchResult:
    """Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom."""
    a = np.asarray(sample1, dtype=np.float64)
    b = np.asarray(sample2, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("welch_test needs at least 2 values per sample")
    m1, m2 = float(a.mean()), float(b.mean())
    v1, v2 = float(a.var(ddof=1)), float(b.var(ddof=1))
    se1, se2 = v1 / a.size, v2 / b.size
    if se1 + se2 == 0.0:
        raise ValueError("welch_test: both samples have zero variance")
    t = (m1 - m2) / math.sqrt(se1 + se2)
    df = (se1 + se2) ** 2 / (se1**2 / (a.size - 1) + se2**2 / (b.size - 1))
    p = float(min(1.0, 2.0 * stats.t.sf(abs(t), df)))
    return WelchResult(group, m1, v1, m2, v2, t, df, p, p < alpha)


def compare_representations(
    result: StudyResult, rep1: str, rep2: str, alpha: float = 0.01, attr: str = "numerator_total"
) -> list[WelchResult]:
    """Per-group Welch tests on replication samples of ``attr``."""
    s1 = result.replications[rep1].by_group(attr)
    s2 = result.replications[rep2].by_group(attr)
    return [welch_test(s1[g], s2[g], alpha, g) for g in result.groups]
