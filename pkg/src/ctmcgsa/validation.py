"""Cross-simulator equivalence suite.

For fixed parameters the four representations must produce the same law
of the path.  Each (model, representation) pair is run on fresh seeds and
every pair of representations is compared with a two-sample KS test on
extinction times and a chi-square test on the final-size distribution.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .model import ModelGraph, build_sir, make_model
from .rng import UniformStream, draw_seeds
from .simulate import RepresentationKind, simulate_batch

ALL_KINDS = tuple(RepresentationKind)


def build_pure_death(n0: int = 10) -> ModelGraph:
    """Single channel I -> R with rate ``gamma * W_I``."""
    return make_model("pure-death", ("I", "R"), ("gamma",), [("I", "R", "gamma * W_I")], (n0, 0))


@dataclass(frozen=True)
class EquivalenceCase:
    model: ModelGraph
    theta: tuple[float, ...]
    empty: tuple[str, ...]     # extinction predicate
    final: str | None          # compartment whose final count is compared (None: deterministic)


def default_cases() -> list[EquivalenceCase]:
    return [
        EquivalenceCase(build_sir(), (2.0, 1.0), ("I",), "R"),
        EquivalenceCase(build_pure_death(), (1.0,), ("I",), None),
    ]


@dataclass(frozen=True)
class EquivalenceTest:
    model: str
    qoi: str
    rep1: str
    rep2: str
    test: str
    statistic: float
    p: float
    reject: bool


def run_case(case: EquivalenceCase, kind: RepresentationKind, runs: int, master: UniformStream):
    """Extinction times and final counts (or None) for ``runs`` independent paths."""
    seeds = draw_seeds(master, (runs, kind.n_streams(case.model)))
    thetas = np.tile(np.asarray(case.theta, dtype=np.float64), (runs, 1))
    grid = np.array([np.finfo(np.float64).max]) if case.final else None
    res = simulate_batch(
        case.model,
        kind,
        thetas,
        seeds,
        math.inf,
        stop_when_empty=case.empty,
        grid=grid,
        grid_compartment=case.final,
    )
    finals = res.grid_values[:, 0].astype(np.int64) if case.final else None
    return res.stop_times, finals


def chi_square_two_sample(a, b, min_count: int = 10):
    """Chi-square homogeneity test on integer samples.

    Adjacent values are merged until every pooled bin holds at least
    ``min_count`` observations, so expected cell counts stay >= 5.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    values = np.union1d(a, b)
    ca = np.array([np.sum(a == v) for v in values])
    cb = np.array([np.sum(b == v) for v in values])
    bins_a, bins_b = [], []
    acc_a = acc_b = 0
    for x, y in zip(ca, cb):
        acc_a += x
        acc_b += y
        if acc_a + acc_b >= min_count:
            bins_a.append(acc_a)
            bins_b.append(acc_b)
            acc_a = acc_b = 0
    if acc_a + acc_b:
        if bins_a:
            bins_a[-1] += acc_a
            bins_b[-1] += acc_b
        else:
            bins_a.append(acc_a)
            bins_b.append(acc_b)
    if len(bins_a) < 2:
        return 0.0, 1.0
    chi2, p, _, _ = stats.chi2_contingency(np.array([bins_a, bins_b]), correction=False)
    return float(chi2), float(p)


def cross_simulator_suite(
    runs: int = 10_000,
    seed: int = 1,
    alpha: float = 0.01,
    kinds=ALL_KINDS,
    cases=None,
) -> list[EquivalenceTest]:
    master = UniformStream(seed)
    cases = default_cases() if cases is None else cases
    results = []
    for case in cases:
        samples = {kind: run_case(case, kind, runs, master) for kind in kinds}
        for k1, k2 in itertools.combinations(kinds, 2):
            ks = stats.ks_2samp(samples[k1][0], samples[k2][0])
            results.append(
                EquivalenceTest(
                    case.model.name, "extinction_time", k1.value, k2.value, "ks",
                    float(ks.statistic), float(ks.pvalue), bool(ks.pvalue < alpha),
                )
            )
            if case.final:
                chi2, p = chi_square_two_sample(samples[k1][1], samples[k2][1])
                results.append(
                    EquivalenceTest(
                        case.model.name, f"final_{case.final}", k1.value, k2.value, "chi2", chi2, p, bool(p < alpha)
                    )
                )
    return results
