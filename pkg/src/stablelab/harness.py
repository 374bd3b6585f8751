"""Monte Carlo estimates of output distributions and the reports built on them."""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from stablelab.core import (
    FiniteDistribution,
    Hypothesis,
    HypothesisClass,
    Sample,
    class_loss,
    derive_seeds,
    draw_samples,
    numpy_rng,
    population_loss,
    population_losses,
)
from stablelab.learners import Learner

LOSS_TOL = 1e-12
BATCH = 256


@dataclass
class OutputFrequencyTable:
    """Output counts of a learner over independent trials."""

    domain_size: int
    trials: int
    counts: dict[str, int]
    failed_counts: dict[str, int] = field(default_factory=dict)
    failures: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if sum(self.counts.values()) != self.trials:
            raise ValueError("counts must sum to trials")
        for key in self.counts:
            if len(key) != self.domain_size or set(key) - {"0", "1"}:
                raise ValueError(f"invalid hypothesis key {key!r}")
        if not self.failures:
            self.failures = [False] * self.trials

    @classmethod
    def from_counts(cls, counts: dict, domain_size: int | None = None) -> OutputFrequencyTable:
        counts = {str(k): int(v) for k, v in counts.items() if v}
        if domain_size is None:
            domain_size = len(next(iter(counts)))
        return cls(domain_size, sum(counts.values()), dict(sorted(counts.items())))

    @property
    def failure_count(self) -> int:
        return sum(self.failed_counts.values())

    @property
    def failure_rate(self) -> float:
        return self.failure_count / self.trials

    def effective_counts(self, include_failures: bool = False) -> dict[str, int]:
        """Counts entering stability and list mass; failures dropped unless included."""
        if include_failures:
            return dict(self.counts)
        out = {k: v - self.failed_counts.get(k, 0) for k, v in self.counts.items()}
        return {k: v for k, v in out.items() if v}

    def frequencies(self, include_failures: bool = False) -> dict[str, float]:
        eff = self.effective_counts(include_failures)
        total = sum(eff.values())
        if total == 0:
            return {}
        return {k: v / total for k, v in eff.items()}

    def max_frequency(self, include_failures: bool = False) -> float:
        return max(self.frequencies(include_failures).values(), default=0.0)


def output_distribution(
    A: Learner, D: FiniteDistribution, n: int, trials: int, seed: int
) -> OutputFrequencyTable:
    """Run ``A`` on ``trials`` fresh samples of size ``n``.

    Trial ``i`` draws its sample and learner seed from ``(seed, i)`` alone, so
    the first ``m`` trials of a longer run coincide with a run of ``m`` trials.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if A.domain_size != D.domain_size:
        raise ValueError("learner and distribution disagree on the domain")
    sample_seeds = derive_seeds(seed, "sample", trials)
    run_seeds = derive_seeds(seed, "run", trials)
    counts: Counter = Counter()
    failed: Counter = Counter()
    flags: list[bool] = []
    for lo in range(0, trials, BATCH):
        hi = min(trials, lo + BATCH)
        batch = draw_samples(D, n, sample_seeds[lo:hi])
        for out in A.run_batch(batch, run_seeds[lo:hi]):
            key = out.hypothesis.string
            counts[key] += 1
            flags.append(bool(out.failed))
            if out.failed:
                failed[key] += 1
    return OutputFrequencyTable(
        D.domain_size, trials, dict(sorted(counts.items())), dict(sorted(failed.items())), flags
    )


@dataclass(frozen=True)
class StabilityReport:
    epsilon: float
    best_hypothesis: Hypothesis | None
    best_frequency: float
    best_loss: float
    class_loss: float

    @property
    def excess_loss(self) -> float:
        return self.best_loss - self.class_loss


def _low_excess(keys, D, H, epsilon):
    opt = class_loss(H, D)
    out = {}
    for key in keys:
        h = Hypothesis.from_string(key)
        loss = population_loss(h, D)
        if loss <= opt + epsilon + LOSS_TOL:
            out[key] = loss
    return opt, out


def empirical_stability(
    table: OutputFrequencyTable,
    D: FiniteDistribution,
    H: HypothesisClass,
    epsilon: float,
    include_failures: bool = False,
) -> StabilityReport:
    """Most frequent output whose excess loss is at most ``epsilon``."""
    freq = table.frequencies(include_failures)
    opt, good = _low_excess(freq, D, H, epsilon)
    if not good:
        return StabilityReport(epsilon, None, 0.0, math.nan, opt)
    key = min(good, key=lambda k: (-freq[k], k))
    return StabilityReport(epsilon, Hypothesis.from_string(key), freq[key], good[key], opt)


@dataclass(frozen=True)
class ListReport:
    epsilon: float
    delta: float
    hypotheses: tuple[Hypothesis, ...]
    covered_mass: float
    success: bool
    frequencies: tuple[float, ...] = ()

    def __len__(self):
        return len(self.hypotheses)


def empirical_list(
    table: OutputFrequencyTable,
    D: FiniteDistribution,
    H: HypothesisClass,
    epsilon: float,
    delta: float,
    include_failures: bool = False,
) -> ListReport:
    """Greedy list of low-excess outputs, most frequent first, until mass reaches ``1 - delta``."""
    freq = table.frequencies(include_failures)
    _, good = _low_excess(freq, D, H, epsilon)
    ranked = sorted(good, key=lambda k: (-freq[k], k))
    target = 1.0 - delta - LOSS_TOL
    chosen: list[str] = []
    mass = 0.0
    for key in ranked:
        if mass >= target:
            break
        chosen.append(key)
        mass = math.fsum(freq[k] for k in chosen)
    return ListReport(
        epsilon,
        delta,
        tuple(Hypothesis.from_string(k) for k in chosen),
        mass,
        mass >= target,
        tuple(freq[k] for k in chosen),
    )


def uniform_convergence_gap(
    H: HypothesisClass, D: FiniteDistribution, n: int, trials: int, seed: int
) -> np.ndarray:
    """Per trial, the largest gap between empirical and population loss over ``H``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    H.require_nonempty()
    pop = population_losses(H, D)
    seeds = derive_seeds(seed, "uc-sample", trials)
    gaps = np.empty(trials)
    for lo in range(0, trials, BATCH):
        hi = min(trials, lo + BATCH)
        emp = H.mistakes(draw_samples(D, n, seeds[lo:hi])) / n
        gaps[lo:hi] = np.abs(emp - pop).max(axis=1)
    return gaps


def ord_statistic(R, x: int) -> int:
    """``1 + |{r in R : r <= x}|``."""
    pts = sorted(R)
    if not pts:
        raise ValueError("R must be nonempty")
    return 1 + bisect_right(pts, x)


@dataclass(frozen=True)
class JumpProbeReport:
    n: int
    t0: int
    p: np.ndarray
    probes: np.ndarray
    max_adjacent_gap: float
    gap_location: int
    skipped: int
    undersized: bool

    def order(self, k: int) -> float:
        """``p`` at order ``k`` (1-indexed)."""
        return float(self.p[k - 1])


def threshold_sample(R, t: int, domain_size: int) -> Sample:
    """Points of sorted ``R`` labelled 0 before position ``t`` (1-indexed), 1 from it on."""
    counts = np.zeros((domain_size, 2), dtype=np.int64)
    for i, x in enumerate(R):
        counts[x, 0 if i + 1 < t else 1] += 1
    return Sample(domain_size, counts)


def jump_probe(A: Learner, M: int, n: int, trials: int, seed: int) -> JumpProbeReport:
    """Label frequencies of ``A`` at each order cell of a threshold-labelled sample.

    ``p[k-1]`` estimates the chance that ``A`` labels 1 a uniform point whose
    order among the sample points is ``k``.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be even and at least 2")
    if M < n + 1:
        raise ValueError(f"domain size {M} cannot hold {n} sample points and a probe")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if A.domain_size != M:
        raise ValueError("learner domain differs from M")
    t0 = n // 2
    ones = np.zeros(n + 1, dtype=np.int64)
    probes = np.zeros(n + 1, dtype=np.int64)
    skipped = 0
    point_seeds = derive_seeds(seed, "probe-points", trials)
    run_seeds = derive_seeds(seed, "probe-run", trials)
    for i in range(trials):
        rng = numpy_rng(int(point_seeds[i]))
        R = np.sort(rng.choice(M, size=n, replace=False))
        h = A.run(threshold_sample(R, t0, M), int(run_seeds[i]))
        bounds = np.concatenate(([-1], R, [M]))
        for k in range(1, n + 2):
            lo, hi = int(bounds[k - 1]), int(bounds[k])
            width = hi - lo - 1
            if width <= 0:
                skipped += 1
                continue
            x = lo + 1 + int(rng.integers(width))
            probes[k - 1] += 1
            ones[k - 1] += h(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(probes > 0, ones / np.maximum(probes, 1), np.nan)
    diffs = np.abs(np.diff(p))
    if np.all(np.isnan(diffs)):
        gap, loc = 0.0, 0
    else:
        c = int(np.nanargmax(diffs))
        gap, loc = float(diffs[c]), c + 1
    return JumpProbeReport(n, t0, p, probes, gap, loc, skipped, M < 4 * n)
