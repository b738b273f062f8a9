"""Monte Carlo coverage harness for the interval constructions.

One replication simulates a stream from a model, builds a count table,
computes the requested interval and records whether it contains the exact
adjustment-formula value of the model.  For the anytime regime the
defining property of a confidence sequence is validated: the *running
intersection* of the per-time intervals must contain the truth, which is
checked by evaluating the interval at every time where some dyadic
checkpoint advanced (the interval is constant in between) and at the final
time.  Unbounded intervals realize [0,1] and therefore count as covering.

Replications draw their seeds by spawning one SeedSequence, so results are
reproducible and independent of scheduling; ``workers > 1`` distributes
replications over processes with an associative reduction.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from statistics import median

import numpy as np

from .effects import EffectQuery, effect_interval, true_effect
from .prediction import prediction_set
from .simulator import CausalModel, CptPolicy, Policy, draw_intervened_outcome, \
    sample_adaptive, sample_iid


@dataclass(frozen=True)
class CoverageReport:
    criterion: str
    regime: str
    replications: int
    n: int
    delta: float
    true_value: float
    coverage: float
    mc_se: float
    mean_halfwidth: float
    median_halfwidth: float
    unbounded_fraction: float

    def to_json(self) -> dict:
        def num(v):
            return None if math.isinf(v) or math.isnan(v) else v
        return {
            "format_version": 1,
            "kind": "coverage_report",
            "criterion": self.criterion,
            "regime": self.regime,
            "replications": self.replications,
            "n": self.n,
            "delta": self.delta,
            "true_value": self.true_value,
            "coverage": self.coverage,
            "mc_se": self.mc_se,
            "mean_halfwidth": num(self.mean_halfwidth),
            "median_halfwidth": num(self.median_halfwidth),
            "unbounded_fraction": self.unbounded_fraction,
        }

    def summary(self) -> str:
        hw = "inf" if math.isinf(self.mean_halfwidth) else f"{self.mean_halfwidth:.4f}"
        return (f"{self.criterion}/{self.regime}  R={self.replications} n={self.n} "
                f"delta={self.delta}  coverage={self.coverage:.4f} "
                f"(se={self.mc_se:.4f})  mean_hw={hw} "
                f"unbounded={self.unbounded_fraction:.3f}  truth={self.true_value:.4f}")


def _replicate(model: CausalModel, query: EffectQuery, n: int,
               policy: Policy | None, theta: float, seed) -> tuple[bool, float]:
    """One replication: (covered?, final halfwidth)."""
    rng_seed = np.random.PCG64(seed)
    if query.regime == 'iid':
        stream = sample_iid(model, n, np.random.Generator(rng_seed))
    else:
        stream = sample_adaptive(model, policy or CptPolicy(), n,
                                 np.random.Generator(rng_seed))
    table = model.count_table(track_arrivals=False)
    if query.regime != 'anytime':
        table.ingest_all(stream)
        itv = effect_interval(table, query)
        return itv.contains(theta), itv.halfwidth

    covered = True
    version = -1
    halfwidth = math.inf
    for i, obs in enumerate(stream, start=1):
        table.ingest(obs)
        if table.checkpoint_version != version or i == n:
            version = table.checkpoint_version
            itv = effect_interval(table, query)
            covered = covered and itv.contains(theta)
            halfwidth = itv.halfwidth
    return covered, halfwidth


def _replicate_args(args):
    return _replicate(*args)


def run_coverage(model: CausalModel, query: EffectQuery, n: int,
                 replications: int, seed=0, policy: Policy | None = None,
                 workers: int = 1) -> CoverageReport:
    """Empirical coverage of the queried construction over replications."""
    if replications < 1:
        raise ValueError("need at least one replication")
    if query.regime == 'iid' and policy is not None:
        raise ValueError("a policy only applies to the adaptive regimes")
    theta = true_effect(model, query.x, query.y, query.criterion)
    seeds = np.random.SeedSequence(seed).spawn(replications)
    jobs = [(model, query, n, policy, theta, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate_args, jobs, chunksize=32))
    else:
        results = [_replicate(*job) for job in jobs]

    hits = sum(covered for covered, _ in results)
    halfwidths = [hw for _, hw in results]
    finite = [hw for hw in halfwidths if math.isfinite(hw)]
    coverage = hits / replications
    return CoverageReport(
        criterion=query.criterion,
        regime=query.regime,
        replications=replications,
        n=n,
        delta=query.delta,
        true_value=theta,
        coverage=coverage,
        mc_se=math.sqrt(coverage * (1 - coverage) / replications),
        mean_halfwidth=sum(finite) / len(finite) if finite else math.inf,
        median_halfwidth=median(halfwidths) if halfwidths else math.inf,
        unbounded_fraction=1 - len(finite) / replications,
    )


def run_prediction_coverage(model: CausalModel, x, delta: float, n: int,
                            replications: int, seed=0,
                            policy: Policy | None = None) -> dict:
    """Miss frequency of the prediction set against an outcome drawn from
    the intervened model after each adaptive stream."""
    misses = 0
    sizes = []
    for child in np.random.SeedSequence(seed).spawn(replications):
        stream_seed, outcome_seed = child.spawn(2)
        stream = sample_adaptive(model, policy or CptPolicy(), n,
                                 np.random.Generator(np.random.PCG64(stream_seed)))
        table = model.count_table(track_arrivals=False)
        table.ingest_all(stream)
        gamma = prediction_set(table, x, delta)
        y = draw_intervened_outcome(model, x,
                                    np.random.Generator(np.random.PCG64(outcome_seed)))
        misses += y not in gamma
        sizes.append(len(gamma.members))
    rate = misses / replications
    return {
        "format_version": 1,
        "kind": "prediction_coverage",
        "replications": replications,
        "n": n,
        "delta": delta,
        "miss_rate": rate,
        "mc_se": math.sqrt(rate * (1 - rate) / replications),
        "mean_set_size": sum(sizes) / len(sizes),
    }
