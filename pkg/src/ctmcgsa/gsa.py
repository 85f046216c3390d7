"""Pick-freeze Sobol indices with grouped inputs and an intrinsic-noise group.

Design rows carry two things: a parameter vector and a vector of stream
seeds.  The distinguished ``Z`` group swaps the whole seed vector, which
is how the intrinsic randomness of a simulator becomes an ordinary input.

Estimators (pinned)::

    V        = var(concat(yA, yB))                    (ddof=1)
    first_j  = mean(yB * (yAB_j - yA)) / V            (yA, yB, yAB centred on the pooled mean)
    total_j  = mean((yA - yAB_j) ** 2) / (2 V)        (Jansen)
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateOutputError, FlaggedEstimateWarning, ModelValidationError
from .rng import UniformStream, draw_seeds

Z_GROUP = "Z"
FLAG_LOW = -0.05
FLAG_HIGH = 1.05


@dataclass(frozen=True)
class ParameterSpec:
    """An uncertain parameter sampled uniformly on ``[low, high]``.

    With ``scale="reciprocal"`` the uniform draw is a mean duration and the
    model receives its inverse (``nominal`` is then also a duration).
    """

    name: str
    nominal: float
    low: float
    high: float
    scale: str = "linear"

    def __post_init__(self):
        if self.scale not in ("linear", "reciprocal"):
            raise ModelValidationError(f"parameter {self.name}: unknown scale {self.scale!r}")
        if not (math.isfinite(self.low) and math.isfinite(self.high) and self.low < self.high):
            raise ModelValidationError(f"parameter {self.name}: degenerate range [{self.low}, {self.high}]")
        if self.scale == "reciprocal" and self.low <= 0:
            raise ModelValidationError(f"parameter {self.name}: reciprocal scale needs a positive range")

    def to_model(self, x):
        return 1.0 / x if self.scale == "reciprocal" else x

    @property
    def nominal_value(self) -> float:
        return float(self.to_model(self.nominal))


@dataclass(frozen=True)
class InputGroup:
    name: str
    parameters: tuple[str, ...] = ()

    @property
    def is_z(self) -> bool:
        return not self.parameters


@dataclass(frozen=True)
class InputSpec:
    """Parameters (in model order) and the groups used as GSA inputs."""

    parameters: tuple[ParameterSpec, ...]
    groups: tuple[InputGroup, ...]

    def __post_init__(self):
        object.__setattr__(self, "parameters", tuple(self.parameters))
        object.__setattr__(self, "groups", tuple(self.groups))
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ModelValidationError("duplicate parameter in input spec")
        gnames = [g.name for g in self.groups]
        if len(set(gnames)) != len(gnames):
            raise ModelValidationError("duplicate group name")
        if sum(g.is_z for g in self.groups) != 1:
            raise ModelValidationError("input spec needs exactly one intrinsic-randomness (Z) group")
        seen: list[str] = []
        for g in self.groups:
            for p in g.parameters:
                if p not in names:
                    raise ModelValidationError(f"group {g.name}: unknown parameter {p!r}")
                seen.append(p)
        if sorted(seen) != sorted(names):
            missing = sorted(set(names) - set(seen))
            repeated = sorted({p for p in seen if seen.count(p) > 1})
            raise ModelValidationError(
                f"every parameter must be in exactly one group (missing {missing}, repeated {repeated})"
            )

    @classmethod
    def one_group_per_parameter(cls, parameters: Sequence[ParameterSpec]) -> "InputSpec":
        groups = [InputGroup(p.name, (p.name,)) for p in parameters] + [InputGroup(Z_GROUP)]
        return cls(tuple(parameters), tuple(groups))

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    @property
    def group_names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.groups)

    def columns(self, group: InputGroup) -> list[int]:
        names = self.parameter_names
        return [names.index(p) for p in group.parameters]

    def nominal_theta(self) -> dict[str, float]:
        return {p.name: p.nominal_value for p in self.parameters}

    def to_model(self, x: np.ndarray) -> np.ndarray:
        """Map a sampling-scale design (rows x parameters) to model values."""
        theta = np.empty_like(x, dtype=np.float64)
        for k, p in enumerate(self.parameters):
            theta[:, k] = p.to_model(x[:, k])
        return theta

    def check_model(self, parameter_names: Sequence[str]) -> None:
        if tuple(parameter_names) != self.parameter_names:
            raise ModelValidationError(
                f"input spec parameters {self.parameter_names} do not match model parameters {tuple(parameter_names)}"
            )


def lhs_sample(ranges: Sequence[tuple[float, float]], n: int, stream: UniformStream) -> np.ndarray:
    """Stratified-permutation Latin hypercube on the box ``ranges``.

    Column ``k`` consumes ``n - 1`` draws for its Fisher-Yates permutation
    followed by ``n`` in-stratum offsets.
    """
    if n < 2:
        raise ValueError("lhs_sample needs n >= 2")
    out = np.empty((n, len(ranges)), dtype=np.float64)
    for k, (low, high) in enumerate(ranges):
        if not (math.isfinite(low) and math.isfinite(high) and low < high):
            raise ValueError(f"degenerate interval [{low}, {high}] in column {k}")
        perm = np.arange(n)
        u = stream.uniforms(n - 1)
        for i in range(n - 1, 0, -1):
            j = int(u[n - 1 - i] * (i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        offsets = stream.uniforms(n)
        out[:, k] = low + (high - low) * (perm + offsets) / n
    return out


@dataclass
class PickFreezeDesign:
    """Paired samples ``A`` and ``B`` plus hybrids ``AB_j``.

    ``AB_j`` is ``A`` with group ``j`` (all of its columns, or the whole seed
    vector for ``Z``) taken from ``B``.
    """

    spec: InputSpec
    x_A: np.ndarray
    x_B: np.ndarray
    seeds_A: np.ndarray
    seeds_B: np.ndarray

    @property
    def n(self) -> int:
        return self.x_A.shape[0]

    @property
    def theta_A(self) -> np.ndarray:
        return self.spec.to_model(self.x_A)

    @property
    def theta_B(self) -> np.ndarray:
        return self.spec.to_model(self.x_B)

    def hybrid(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Sampling-scale parameters and seeds of ``AB_j``."""
        group = self.spec.groups[j]
        x = self.x_A.copy()
        seeds = self.seeds_A.copy()
        if group.is_z:
            seeds[:] = self.seeds_B
        else:
            cols = self.spec.columns(group)
            x[:, cols] = self.x_B[:, cols]
        return x, seeds

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """Model-scale parameters and seeds for rows ``A, B, AB_1, ..., AB_G``."""
        xs = [self.x_A, self.x_B]
        ss = [self.seeds_A, self.seeds_B]
        for j in range(len(self.spec.groups)):
            x, s = self.hybrid(j)
            xs.append(x)
            ss.append(s)
        return self.spec.to_model(np.vstack(xs)), np.vstack(ss)


def build_pickfreeze(spec: InputSpec, n: int, stream: UniformStream, n_slots: int) -> PickFreezeDesign:
    ranges = [(p.low, p.high) for p in spec.parameters]
    x_A = lhs_sample(ranges, n, stream)
    x_B = lhs_sample(ranges, n, stream)
    seeds_A = draw_seeds(stream, (n, n_slots))
    seeds_B = draw_seeds(stream, (n, n_slots))
    return PickFreezeDesign(spec, x_A, x_B, seeds_A, seeds_B)


# ----------------------------------------------------------------- estimators


def pooled_variance(yA, yB) -> np.ndarray:
    y = np.concatenate([np.asarray(yA, float), np.asarray(yB, float)], axis=0)
    return np.var(y, axis=0, ddof=1)


def _check_lengths(*ys):
    n = len(ys[0])
    if n < 2 or any(len(y) != n for y in ys):
        raise ValueError("estimators need equal-length outputs with n >= 2")


def first_order_numerator(yA, yB, yAB, center: bool = True):
    yA = np.asarray(yA, float)
    yB = np.asarray(yB, float)
    yAB = np.asarray(yAB, float)
    if center:
        mu = np.mean(np.concatenate([yA, yB], axis=0), axis=0)
        yA, yB, yAB = yA - mu, yB - mu, yAB - mu
    return np.mean(yB * (yAB - yA), axis=0)


def total_numerator(yA, yAB):
    d = np.asarray(yA, float) - np.asarray(yAB, float)
    return np.mean(d * d, axis=0) / 2.0


def estimate_first_order(yA, yB, yAB_j, center: bool = True) -> float:
    _check_lengths(yA, yB, yAB_j)
    v = float(pooled_variance(yA, yB))
    if v <= 0.0:
        raise DegenerateOutputError("degenerate output: zero variance")
    return float(first_order_numerator(yA, yB, yAB_j, center)) / v


def estimate_total(yA, yAB_j, yB=None) -> float:
    """Jansen total index; the variance is pooled over ``yB`` when given."""
    _check_lengths(yA, yAB_j)
    v = float(pooled_variance(yA, yB if yB is not None else yA[:0]))
    if v <= 0.0:
        raise DegenerateOutputError("degenerate output: zero variance")
    return float(total_numerator(yA, yAB_j)) / v


@dataclass(frozen=True)
class IndexEstimate:
    group: str
    first_order: float
    total: float
    variance: float
    numerator_first: float
    numerator_total: float
    replication: int = 0

    @property
    def flagged(self) -> bool:
        return any(not (FLAG_LOW <= v <= FLAG_HIGH) for v in (self.first_order, self.total))


def split_outputs(y: np.ndarray, n: int, n_groups: int):
    """Split stacked outputs ``A, B, AB_1..AB_G`` into ``(yA, yB, [yAB_j])``."""
    if y.shape[0] != (2 + n_groups) * n:
        raise ValueError("output length does not match the design")
    parts = [y[k * n : (k + 1) * n] for k in range(2 + n_groups)]
    return parts[0], parts[1], parts[2:]


def scalar_indices(y: np.ndarray, spec: InputSpec, n: int, replication: int = 0) -> list[IndexEstimate]:
    yA, yB, yAB = split_outputs(np.asarray(y, float), n, len(spec.groups))
    v = float(pooled_variance(yA, yB))
    if v <= 0.0:
        raise DegenerateOutputError("degenerate output: zero variance")
    out = []
    for group, y_j in zip(spec.groups, yAB):
        num_f = float(first_order_numerator(yA, yB, y_j))
        num_t = float(total_numerator(yA, y_j))
        est = IndexEstimate(group.name, num_f / v, num_t / v, v, num_f, num_t, replication)
        if est.flagged:
            warnings.warn(
                f"index estimate for {group.name} outside [-0.05, 1.05]: {est}", FlaggedEstimateWarning, stacklevel=2
            )
        out.append(est)
    return out


@dataclass
class DynamicalIndices:
    """Per-time indices for one replication; ``defined`` is False where V(t)=0."""

    grid: np.ndarray
    groups: tuple[str, ...]
    first_order: np.ndarray        # (groups, grid), nan where undefined
    total: np.ndarray
    variance: np.ndarray           # (grid,)
    numerator_first: np.ndarray    # (groups, grid)
    numerator_total: np.ndarray
    defined: np.ndarray            # (grid,) bool

    def aggregated(self, replication: int = 0) -> list[IndexEstimate]:
        return aggregated_indices(self, replication)


def dynamical_indices(y: np.ndarray, spec: InputSpec, n: int, grid) -> DynamicalIndices:
    """Scalar estimators applied independently at every grid time.

    ``y`` holds stacked design outputs, one column per grid time.
    """
    y = np.asarray(y, float)
    yA, yB, yAB = split_outputs(y, n, len(spec.groups))
    v = pooled_variance(yA, yB)
    defined = v > 0.0
    num_f = np.array([first_order_numerator(yA, yB, y_j) for y_j in yAB])
    num_t = np.array([total_numerator(yA, y_j) for y_j in yAB])
    safe_v = np.where(defined, v, 1.0)
    first = np.where(defined, num_f / safe_v, np.nan)
    total = np.where(defined, num_t / safe_v, np.nan)
    return DynamicalIndices(np.asarray(grid, float), spec.group_names, first, total, v, num_f, num_t, defined)


def aggregated_indices(dyn: DynamicalIndices, replication: int = 0) -> list[IndexEstimate]:
    """Trace-ratio indices: sum of per-time numerators over sum of per-time variances."""
    v = float(np.sum(dyn.variance))
    if v <= 0.0:
        raise DegenerateOutputError("degenerate output: zero variance at every grid time")
    out = []
    for k, name in enumerate(dyn.groups):
        num_f = float(np.sum(dyn.numerator_first[k]))
        num_t = float(np.sum(dyn.numerator_total[k]))
        out.append(IndexEstimate(name, num_f / v, num_t / v, v, num_f, num_t, replication))
    return out


Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class Replications:
    """Output of :func:`replicate_indices`: per-replication design outputs' indices."""

    spec: InputSpec
    n: int
    seeds: np.ndarray
    estimates: list[list[IndexEstimate]] = field(default_factory=list)
    dynamical: list[DynamicalIndices] = field(default_factory=list)

    def by_group(self, attr: str = "total") -> dict[str, np.ndarray]:
        return {
            g: np.array([getattr(rep[k], attr) for rep in self.estimates])
            for k, g in enumerate(self.spec.group_names)
        }

    def medians(self, attr: str = "total") -> dict[str, float]:
        return {g: float(np.median(v)) for g, v in self.by_group(attr).items()}


def replicate_indices(
    evaluate: Evaluator,
    spec: InputSpec,
    n: int,
    R: int,
    master: UniformStream,
    n_slots: int,
    grid=None,
) -> Replications:
    """``R`` independent pick-freeze estimates.

    Replication ``r`` builds its design from its own stream, whose seed is the
    ``r``-th of ``R`` seeds drawn up front from ``master``; the result is
    therefore independent of evaluation order.  ``evaluate(thetas, seeds)``
    maps stacked design rows to outputs: a vector, or a (rows, grid) matrix
    when ``grid`` is given.
    """
    if R < 2:
        raise ValueError("replicate_indices needs R >= 2")
    rep_seeds = draw_seeds(master, R)
    result = Replications(spec, n, rep_seeds)
    for r in range(R):
        design = build_pickfreeze(spec, n, UniformStream(int(rep_seeds[r])), n_slots)
        thetas, seeds = design.stacked()
        y = evaluate(thetas, seeds)
        if grid is None:
            result.estimates.append(scalar_indices(y, spec, n, r))
        else:
            dyn = dynamical_indices(y, spec, n, grid)
            result.dynamical.append(dyn)
            result.estimates.append(aggregated_indices(dyn, r))
    return result
