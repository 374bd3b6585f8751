"""Randomised learning rules over finite classes and their combinators.

Every learner is a pure function of ``(sample, seed)``. Any internal
randomness comes from seeds derived from the caller's seed, so nesting
learners never shares a stream.
"""

from __future__ import annotations

import copy
import math
from collections import Counter
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from stablelab import _kernels
from stablelab.core import (
    Hypothesis,
    HypothesisClass,
    Sample,
    _label_code,
    _mix64_array,
    derive_seed,
    derive_seeds,
    numpy_rng,
)


@dataclass(frozen=True)
class LearnerOutput:
    hypothesis: Hypothesis
    failed: bool = False


@dataclass(frozen=True)
class ListLearnerOutput(LearnerOutput):
    p_hat: float = 0.0


def seed_choices(seeds, label: str, k: int) -> np.ndarray:
    """One value in ``0..k-1`` per seed, independent of other uses of the seed."""
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    z = _mix64_array(seeds ^ np.uint64(_label_code(label)))
    return (z % np.uint64(k)).astype(np.int64)


def majority_vote(hypotheses: Sequence[Hypothesis]) -> Hypothesis:
    """Most frequent hypothesis; ties go to the canonically first."""
    if not hypotheses:
        raise ValueError("majority of an empty list")
    counts = Counter(hypotheses)
    top = max(counts.values())
    return min(h for h, c in counts.items() if c == top)


class Learner:
    """Base class. Subclasses implement ``run_detailed``."""

    domain_size: int
    sample_size: int | None = None

    def run(self, sample: Sample, seed: int) -> Hypothesis:
        return self.run_detailed(sample, seed).hypothesis

    def run_detailed(self, sample: Sample, seed: int) -> LearnerOutput:
        raise NotImplementedError

    def run_batch(self, counts: np.ndarray, seeds) -> list[LearnerOutput]:
        """Run on a stack of count arrays of shape ``(B, N, 2)``."""
        return [
            self.run_detailed(Sample(self.domain_size, c), int(s))
            for c, s in zip(counts, seeds)
        ]

    def sample_complexity(self, epsilon: float) -> int:
        raise NotImplementedError(f"{type(self).__name__} declares no sample complexity")

    def with_sample_size(self, n: int) -> Learner:
        if n < 1:
            raise ValueError("sample size must be at least 1")
        other = copy.copy(self)
        other.sample_size = int(n)
        return other

    def _check(self, sample: Sample):
        if sample.domain_size != self.domain_size:
            raise ValueError(f"sample domain {sample.domain_size} != learner domain {self.domain_size}")
        if sample.size == 0:
            raise ValueError("empty sample")


class ConstantLearner(Learner):
    """Ignores its sample."""

    def __init__(self, h: Hypothesis):
        self.h = h
        self.domain_size = h.domain_size

    def run_detailed(self, sample, seed):
        return LearnerOutput(self.h)

    def sample_complexity(self, epsilon):
        return 1


class ClassLearner(Learner):
    """Learner whose outputs are members of a fixed class ``H``."""

    def __init__(self, H: HypothesisClass):
        H.require_nonempty()
        self.H = H
        self.domain_size = H.domain_size

    def member_indices(self, counts: np.ndarray, seeds) -> np.ndarray:
        raise NotImplementedError

    def run_detailed(self, sample, seed):
        self._check(sample)
        idx = self.member_indices(sample.counts[None], np.array([seed], dtype=np.uint64))
        return LearnerOutput(self.H[int(idx[0])])

    def run_batch(self, counts, seeds):
        idx = self.member_indices(np.asarray(counts), np.asarray(seeds, dtype=np.uint64))
        return [LearnerOutput(self.H[int(i)]) for i in idx]


class ERM(ClassLearner):
    """Empirical risk minimiser with canonical tie-break."""

    def member_indices(self, counts, seeds):
        return np.argmin(self.H.mistakes(counts), axis=-1)

    def sample_complexity(self, epsilon, delta=0.1):
        return math.ceil(2.0 / epsilon**2 * math.log(2 * len(self.H) / delta))


def erm(H: HypothesisClass, S: Sample) -> Hypothesis:
    if S.size == 0:
        raise ValueError("empty sample")
    return ERM(H).run(S, 0)


class RandomThresholdStable(ClassLearner):
    """Canonically first member within a random slack of the empirical optimum.

    The slack is ``eps/4 + j*eps/(4K)`` with ``j`` uniform on ``1..K`` and
    ``K = 2|H|``.
    """

    def __init__(self, H: HypothesisClass, epsilon: float):
        if not 0.0 < epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
        super().__init__(H)
        self.epsilon = float(epsilon)
        self.grid = 2 * len(H)
        self.sample_size = self.sample_complexity(epsilon)

    def sample_complexity(self, epsilon):
        k = len(self.H)
        return math.ceil(512.0 * k * k / epsilon**2 * math.log(8 * k))

    def slack(self, j):
        return self.epsilon / 4 + j * self.epsilon / (4 * self.grid)

    def grid_index(self, seeds) -> np.ndarray:
        return 1 + seed_choices(seeds, "rts-grid", self.grid)

    def member_indices(self, counts, seeds):
        counts = np.asarray(counts)
        mist = self.H.mistakes(counts)
        n = counts.sum(axis=(-2, -1))
        if (n == 0).any():
            raise ValueError("empty sample")
        loss = mist / n[:, None]
        tau = self.slack(self.grid_index(seeds))
        ok = loss <= loss.min(axis=1)[:, None] + tau[:, None]
        return np.argmax(ok, axis=1)


def random_threshold_stable(H: HypothesisClass, epsilon: float) -> RandomThresholdStable:
    return RandomThresholdStable(H, epsilon)


class MajorityBoost(Learner):
    """Most frequent output of ``k`` base runs on disjoint blocks of ``n0``."""

    def __init__(self, base: Learner, k: int, n0: int | None = None):
        if k < 1:
            raise ValueError("k must be at least 1")
        n0 = base.sample_size if n0 is None else n0
        if not n0 or n0 < 1:
            raise ValueError("base sample size n0 must be set")
        self.base = base
        self.k = int(k)
        self.n0 = int(n0)
        self.domain_size = base.domain_size
        self.sample_size = self.k * self.n0

    def sample_complexity(self, epsilon):
        return self.k * self.base.sample_complexity(epsilon)

    def with_sample_size(self, n):
        if n % self.k:
            raise ValueError(f"sample size {n} is not a multiple of k={self.k}")
        return MajorityBoost(self.base, self.k, n // self.k)

    def run_detailed(self, sample, seed):
        self._check(sample)
        if sample.size != self.sample_size:
            raise ValueError(f"sample size {sample.size} != k*n0 = {self.sample_size}")
        blocks = _kernels.split_counts(
            sample.counts.ravel(), [self.n0] * self.k, derive_seed(seed, "boost-split")
        ).reshape(self.k, self.domain_size, 2)
        outs = self.base.run_batch(blocks, derive_seeds(seed, "boost-run", self.k))
        return LearnerOutput(majority_vote([o.hypothesis for o in outs]))


def majority_boost(base: Learner, k: int, n0: int | None = None) -> MajorityBoost:
    return MajorityBoost(base, k, n0)


@dataclass(frozen=True)
class StabilityParams:
    epsilon: float
    rho_value: float
    n0: int
    n1: int
    t: int
    L: int
    alpha: float

    @classmethod
    def derive(
        cls,
        rho: float | Callable[[float], float],
        epsilon: float,
        n0: int,
        delta: float,
        class_size: int,
        t: int | None = None,
        n1: int | None = None,
    ) -> StabilityParams:
        """Fill in ``L``, ``alpha``, ``t`` and ``n1`` from ``rho(epsilon/4)``."""
        if not 0.0 < epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        r = float(rho(epsilon / 4) if callable(rho) else rho)
        if not 0.0 < r <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {r}")
        big_l = math.floor(1.0 / r)
        alpha = r - 1.0 / (big_l + 1)
        if t is None:
            t = math.ceil(32.0 / alpha**2 * math.log(16.0 / delta))
        if n1 is None:
            n1 = math.ceil(32.0 / epsilon**2 * (math.log(class_size) + math.log(8.0 / delta)))
        return cls(float(epsilon), r, int(n0), int(n1), int(t), big_l, alpha)

    def __post_init__(self):
        if self.alpha <= 0 or self.t < 1 or self.n1 < 1 or self.n0 < 1 or self.L < 1:
            raise ValueError(f"inconsistent stability parameters: {self}")


class ListFromStable(Learner):
    """Frequent, low-risk output of ``t`` base runs, checked on a holdout."""

    def __init__(self, base: Learner, params: StabilityParams, H: HypothesisClass, delta: float):
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        H.require_nonempty()
        if base.domain_size != H.domain_size:
            raise ValueError("base learner and class disagree on the domain")
        self.base = base
        self.params = params
        self.H = H
        self.delta = float(delta)
        self.domain_size = H.domain_size
        self.sample_size = params.t * params.n0 + params.n1
        self.frequency_floor = params.rho_value - params.alpha / 2
        self.risk_slack = 3 * params.epsilon / 4

    def sample_complexity(self, epsilon):
        return self.sample_size

    def _base_frequencies(self, blocks, seed) -> dict[Hypothesis, int]:
        seeds = derive_seeds(seed, "list-run", len(blocks))
        if isinstance(self.base, ClassLearner):
            idx = self.base.member_indices(blocks, seeds)
            tally = np.bincount(idx, minlength=len(self.base.H))
            return {self.base.H[i]: int(c) for i, c in enumerate(tally) if c}
        return dict(Counter(o.hypothesis for o in self.base.run_batch(blocks, seeds)))

    def inspect(self, sample: Sample, seed: int) -> tuple[dict[Hypothesis, int], np.ndarray]:
        """Base output counts over the ``t`` blocks, and the holdout counts."""
        self._check(sample)
        p = self.params
        if sample.size != self.sample_size:
            raise ValueError(f"sample size {sample.size} != t*n0 + n1 = {self.sample_size}")
        parts = _kernels.split_counts(
            sample.counts.ravel(), [p.n0] * p.t + [p.n1], derive_seed(seed, "list-split")
        ).reshape(p.t + 1, self.domain_size, 2)
        return self._base_frequencies(parts[:-1], seed), parts[-1]

    def run_detailed(self, sample, seed) -> ListLearnerOutput:
        p = self.params
        freq, holdout = self.inspect(sample, seed)
        best_on_q = int(self.H.mistakes(holdout).min())
        best = None
        for h, c in freq.items():
            p_hat = c / p.t
            if p_hat < self.frequency_floor:
                continue
            lab = h.labels.astype(np.int64)
            wrong = int(holdout[:, 0] @ lab + holdout[:, 1] @ (1 - lab))
            if (wrong - best_on_q) / p.n1 > self.risk_slack:
                continue
            if best is None or c > best[1] or (c == best[1] and h < best[0]):
                best = (h, c)
        if best is not None:
            return ListLearnerOutput(best[0], False, best[1] / p.t)
        h = self.H[int(np.argmin(self.H.mistakes(holdout)))]
        return ListLearnerOutput(h, True, freq.get(h, 0) / p.t)


def list_from_stable(base: Learner, params: StabilityParams, H: HypothesisClass, delta: float) -> ListFromStable:
    return ListFromStable(base, params, H, delta)


class ThreeWayRule(Learner):
    """All-ones, all-zeros or the inner learner, each with probability 1/3."""

    def __init__(self, inner: Learner):
        self.inner = inner
        self.domain_size = inner.domain_size
        self.sample_size = inner.sample_size

    def branch(self, seed: int) -> int:
        """0 = all-ones, 1 = all-zeros, 2 = inner learner."""
        return int(seed_choices([seed], "three-way", 3)[0])

    def run_detailed(self, sample, seed):
        b = self.branch(seed)
        if b < 2:
            return LearnerOutput(Hypothesis.constant(self.domain_size, 1 - b))
        return self.inner.run_detailed(sample, seed)

    def sample_complexity(self, epsilon):
        return self.inner.sample_complexity(epsilon)


def three_way_rule(inner: Learner) -> ThreeWayRule:
    return ThreeWayRule(inner)


class ClassErrorWrapper(Learner):
    """Replace each example by ``(x*, b*)`` with probability ``1 - gamma'`` before learning."""

    def __init__(self, inner: Learner, x_star: int, b_star: int, gamma_prime: float):
        if not 0.0 < gamma_prime <= 1.0:
            raise ValueError(f"gamma_prime must lie in (0, 1], got {gamma_prime}")
        if not 0 <= x_star < inner.domain_size or b_star not in (0, 1):
            raise ValueError(f"invalid replacement example ({x_star}, {b_star})")
        self.inner = inner
        self.x_star = int(x_star)
        self.b_star = int(b_star)
        self.gamma_prime = float(gamma_prime)
        self.domain_size = inner.domain_size
        self.sample_size = inner.sample_size

    def modify(self, sample: Sample, seed: int) -> tuple[Sample, int]:
        """The replaced sample and how many examples were replaced."""
        if self.gamma_prime == 1.0:
            return sample, 0
        rng = numpy_rng(derive_seed(seed, "replace"))
        kept = rng.binomial(sample.counts, self.gamma_prime)
        replaced = int(sample.counts.sum() - kept.sum())
        kept[self.x_star, self.b_star] += replaced
        return Sample(self.domain_size, kept), replaced

    def run_detailed(self, sample, seed):
        self._check(sample)
        modified, _ = self.modify(sample, seed)
        return self.inner.run_detailed(modified, seed)

    def sample_complexity(self, epsilon):
        return self.inner.sample_complexity(epsilon * self.gamma_prime)

    def with_sample_size(self, n):
        return ClassErrorWrapper(self.inner.with_sample_size(n), self.x_star, self.b_star, self.gamma_prime)


def class_error_wrapper(inner: Learner, x_star: int, b_star: int, gamma_prime: float) -> ClassErrorWrapper:
    return ClassErrorWrapper(inner, x_star, b_star, gamma_prime)


def agnostic_rho(d: int, n: int) -> Fraction:
    """``1 / ((d+1) * 2**(2**d + 1) * 4**n)``, exactly."""
    if d < 0 or n < 0:
        raise ValueError("d and n must be nonnegative")
    return Fraction(1, (d + 1) * 2 ** (2**d + 1) * 4**n)


def agnostic_from_realizable(inner: Learner, d: int, epsilon: float) -> tuple[Learner, Fraction]:
    """``inner`` sized for ``epsilon/2`` and its guaranteed agnostic stability."""
    n = inner.sample_complexity(epsilon / 2)
    return inner.with_sample_size(n), agnostic_rho(d, n)
