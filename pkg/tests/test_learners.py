import math
from collections import Counter
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stablelab.core import (
    FiniteDistribution,
    Hypothesis,
    HypothesisClass,
    Sample,
    class_loss,
    derive_seed,
    derive_seeds,
    draw_sample,
    empirical_loss,
    full_cube,
    median_threshold_distribution,
    mix_with_point_mass,
    population_loss,
    threshold_class,
)
from stablelab.harness import output_distribution
from stablelab.learners import (
    ERM,
    ClassErrorWrapper,
    ConstantLearner,
    Learner,
    LearnerOutput,
    ListFromStable,
    MajorityBoost,
    RandomThresholdStable,
    StabilityParams,
    ThreeWayRule,
    agnostic_from_realizable,
    agnostic_rho,
    erm,
    majority_vote,
)

H = Hypothesis.from_string


def C(*strings):
    return HypothesisClass.from_strings(strings)


def S(n, *examples):
    return Sample.from_examples(n, examples)


# -- ERM --------------------------------------------------------------------


def test_erm_examples():
    assert erm(C("00", "11"), S(2, (0, 1), (1, 1))) == H("11")
    assert erm(C("00", "11"), S(2, (0, 0), (0, 1))) == H("00")


def test_erm_rejects_empty_inputs():
    with pytest.raises(ValueError):
        erm(HypothesisClass(2, []), S(2, (0, 1)))
    with pytest.raises(ValueError):
        erm(C("00"), Sample(2, np.zeros((2, 2))))


@given(st.integers(0, 15), st.lists(st.integers(0, 3), min_size=1, max_size=20))
def test_erm_realizable_has_zero_loss(bits, points):
    h = Hypothesis(4, bits)
    sample = S(4, *[(x, h(x)) for x in points])
    assert empirical_loss(erm(full_cube(4), sample), sample) == 0


# -- random threshold learner -----------------------------------------------


def test_rts_sample_complexity_and_grid():
    A = RandomThresholdStable(threshold_class(3), 0.2)
    assert A.sample_complexity(0.2) == math.ceil(512 * 16 / 0.04 * math.log(32))
    assert A.grid == 8
    assert A.slack(A.grid) == pytest.approx(0.1)
    assert A.slack(1) > 0.05
    j = A.grid_index(derive_seeds(5, "t", 4000))
    assert j.min() == 1 and j.max() == A.grid


def test_rts_unique_realizable_target():
    h_star = H("0011")
    Hc = C("0011", "1100", "1111", "0000")
    assert all(population_loss(h, FiniteDistribution.realizable_uniform(h_star)) >= 0.5 for h in Hc if h != h_star)
    D = FiniteDistribution.realizable_uniform(h_star)
    A = RandomThresholdStable(Hc, 0.2).with_sample_size(400)
    table = output_distribution(A, D, 400, 500, 7)
    assert table.counts.get("0011", 0) / 500 >= 0.95


def test_rts_tied_optimum_pair():
    # 01 and 11 both lose 1/4; the constant 00 loses 1/2
    D = FiniteDistribution(2, [((0, 0), 0.25), ((0, 1), 0.25), ((1, 1), 0.5)])
    Hc = C("00", "01", "11")
    assert population_loss(H("01"), D) == population_loss(H("11"), D) == class_loss(Hc, D)
    A = RandomThresholdStable(Hc, 0.2).with_sample_size(2000)
    table = output_distribution(A, D, 2000, 500, 7)
    assert (table.counts.get("01", 0) + table.counts.get("11", 0)) / 500 >= 0.9


def test_rts_batch_matches_single_runs():
    Hc = threshold_class(5)
    A = RandomThresholdStable(Hc, 0.3)
    D = median_threshold_distribution(5)
    seeds = derive_seeds(3, "x", 40)
    counts = np.stack([draw_sample(D, 25, int(s)).counts for s in seeds])
    batch = [o.hypothesis for o in A.run_batch(counts, seeds)]
    single = [A.run(Sample(5, c), int(s)) for c, s in zip(counts, seeds)]
    assert batch == single


# -- majority booster -------------------------------------------------------


def test_majority_vote_examples():
    assert majority_vote([H("11"), H("00"), H("11")]) == H("11")
    assert majority_vote([H("11"), H("00")]) == H("00")
    with pytest.raises(ValueError):
        majority_vote([])


def test_boost_k1_is_the_base():
    base = ERM(full_cube(3)).with_sample_size(9)
    boosted = MajorityBoost(base, 1)
    D = FiniteDistribution.uniform(3, [(0, 1), (1, 0), (2, 1), (2, 0)])
    for seed in range(30):
        sample = draw_sample(D, 9, seed)
        assert boosted.run(sample, seed) == base.run(sample, derive_seed(seed, "boost-run", 0))


def test_boost_tie_goes_canonical():
    # blocks {(0,0)} and {(0,1)} vote 00 and 11 once each
    class Blockwise(Learner):
        domain_size = 2

        def run_detailed(self, sample, seed):
            return LearnerOutput(H("11") if sample.counts[0, 1] else H("00"))

    boosted = MajorityBoost(Blockwise(), 2, 1)
    assert boosted.run(S(2, (0, 0), (0, 1)), 4) == H("00")


def test_boost_size_checked():
    boosted = MajorityBoost(ERM(C("00", "11")).with_sample_size(2), 3)
    assert boosted.sample_size == 6
    with pytest.raises(ValueError):
        boosted.run(S(2, (0, 1)), 0)


# -- stability parameters and the list learner ------------------------------


def test_params_example():
    p = StabilityParams.derive(0.3, 0.2, 100, 0.1, 8)
    assert p.L == 3
    assert p.alpha == pytest.approx(0.05)
    assert p.t == math.ceil(32 / p.alpha**2 * math.log(160))
    assert p.n1 == math.ceil(32 / 0.04 * (math.log(8) + math.log(80)))


@given(st.floats(0.001, 1.0))
def test_params_invariants(rho):
    p = StabilityParams.derive(lambda eps: rho, 0.2, 10, 0.1, 4)
    assert p.L == math.floor(1 / rho)
    assert p.alpha > 0 and p.t >= 1 and p.n1 >= 1


def test_list_from_constant_base():
    Hc = threshold_class(4)
    D = median_threshold_distribution(4)
    h_star = H("0111")
    p = StabilityParams.derive(0.5, 0.2, 5, 0.1, len(Hc), t=20, n1=50)
    A = ListFromStable(ConstantLearner(h_star).with_sample_size(5), p, Hc, 0.1)
    out = A.run_detailed(draw_sample(D, A.sample_size, 1), 2)
    assert out.hypothesis == h_star and not out.failed and out.p_hat == 1.0


def test_list_failure_branch_returns_holdout_erm():
    Hc = threshold_class(4)
    D = median_threshold_distribution(4)
    p = StabilityParams.derive(0.5, 0.2, 5, 0.1, len(Hc), t=20, n1=50)
    # the constant base is far from optimal, so the risk filter rejects it
    A = ListFromStable(ConstantLearner(H("1111")), p, Hc, 0.1)
    sample = draw_sample(D, A.sample_size, 3)
    out = A.run_detailed(sample, 4)
    _, holdout = A.inspect(sample, 4)
    assert out.failed
    assert out.hypothesis == erm(Hc, Sample(4, holdout))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.1, 1.0))
def test_list_contract_when_not_failed(seed, rho):
    Hc = threshold_class(6)
    D = mix_with_point_mass(median_threshold_distribution(6), 0, 1, 0.8)
    base = RandomThresholdStable(Hc, 0.05).with_sample_size(30)
    p = StabilityParams.derive(rho, 0.2, 30, 0.1, len(Hc), t=40, n1=60)
    A = ListFromStable(base, p, Hc, 0.1)
    sample = draw_sample(D, A.sample_size, seed)
    out = A.run_detailed(sample, seed + 1)
    freq, holdout = A.inspect(sample, seed + 1)
    Q = Sample(6, holdout)
    if out.failed:
        assert out.hypothesis == erm(Hc, Q)
        return
    assert out.p_hat == freq[out.hypothesis] / p.t
    assert out.p_hat >= p.rho_value - p.alpha / 2
    best_q = min(empirical_loss(h, Q) for h in Hc)
    assert empirical_loss(out.hypothesis, Q) <= best_q + 3 * 0.2 / 4 + 1e-12


def test_list_size_checked():
    p = StabilityParams.derive(0.5, 0.2, 5, 0.1, 5, t=4, n1=6)
    A = ListFromStable(ConstantLearner(H("0111")), p, threshold_class(4), 0.1)
    assert A.sample_size == 26
    with pytest.raises(ValueError):
        A.run(S(4, (0, 0)), 0)


# -- three-way rule ---------------------------------------------------------


def test_three_way_branch_frequencies():
    A = ThreeWayRule(ConstantLearner(H("010")))
    D = FiniteDistribution.uniform(3, [(0, 1), (1, 0), (2, 1)])
    table = output_distribution(A, D, 5, 3000, 21)
    assert len(table.counts) <= 3
    assert 0.28 <= table.counts.get("000", 0) / 3000 <= 0.39


@given(st.data())
def test_some_constant_has_loss_at_most_half(data):
    n = data.draw(st.integers(1, 5))
    cells = data.draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, 1)), min_size=1))
    D = FiniteDistribution.uniform(n, cells)
    ones, zeros = Hypothesis.constant(n, 1), Hypothesis.constant(n, 0)
    assert min(population_loss(ones, D), population_loss(zeros, D)) <= 0.5 + 1e-12


# -- class-error wrapper ----------------------------------------------------


def test_wrapper_identity_at_gamma_one():
    A = RandomThresholdStable(threshold_class(4), 0.3)
    W = ClassErrorWrapper(A, 1, 0, 1.0)
    D = median_threshold_distribution(4)
    for seed in range(20):
        sample = draw_sample(D, 40, seed)
        assert W.run(sample, seed) == A.run(sample, seed)


def test_wrapper_replacement_count():
    W = ClassErrorWrapper(ERM(full_cube(2)), 0, 1, 0.1)
    D = FiniteDistribution.uniform(2, [(0, 0), (1, 1)])
    replaced = [W.modify(draw_sample(D, 1000, s), s + 1)[1] for s in range(200)]
    assert 880 <= np.mean(replaced) <= 920


def test_wrapper_rejects_bad_gamma():
    for gp in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            ClassErrorWrapper(ERM(full_cube(2)), 0, 1, gp)


def exact_output_distribution(A, D, n):
    """Enumerate every multiset of size n under D and run A on it."""
    cells = [(e.point, e.label) for e, _ in D.atoms]
    out = Counter()
    for combo in product(range(len(cells)), repeat=n):
        prob = math.prod(D.probs[i] for i in combo)
        sample = Sample.from_examples(D.domain_size, [cells[i] for i in combo])
        out[A.run(sample, 0).string] += prob
    return out


def test_wrapper_matches_mixed_distribution():
    D = FiniteDistribution(2, [((0, 0), 0.2), ((0, 1), 0.3), ((1, 0), 0.1), ((1, 1), 0.4)])
    A = ERM(full_cube(2))
    exact = exact_output_distribution(A, mix_with_point_mass(D, 1, 0, 0.3), 3)
    assert sum(exact.values()) == pytest.approx(1.0)
    table = output_distribution(ClassErrorWrapper(A, 1, 0, 0.3), D, 3, 20000, 5)
    keys = set(exact) | set(table.counts)
    tv = 0.5 * sum(abs(exact.get(k, 0.0) - table.counts.get(k, 0) / 20000) for k in keys)
    assert tv <= 0.03


def test_wrapper_sample_complexity_scales_epsilon():
    A = RandomThresholdStable(threshold_class(3), 0.2)
    W = ClassErrorWrapper(A, 0, 1, 0.5)
    assert W.sample_complexity(0.2) == A.sample_complexity(0.1)


# -- agnostic reduction -----------------------------------------------------


class FixedSize(Learner):
    domain_size = 2

    def __init__(self, n):
        self.n = n

    def sample_complexity(self, epsilon):
        return self.n


@pytest.mark.parametrize("d,n,expected", [(0, 1, Fraction(1, 16)), (1, 3, Fraction(1, 1024)), (2, 5, Fraction(1, 98304))])
def test_agnostic_rho_values(d, n, expected):
    learner, rho = agnostic_from_realizable(FixedSize(n), d, 0.1)
    assert rho == expected
    assert learner.sample_size == n


def test_agnostic_rho_factor_and_monotone():
    assert agnostic_rho(0, 0) == Fraction(1, 4)
    assert all(agnostic_rho(2, n + 1) <= agnostic_rho(2, n) for n in range(10))


# -- common contracts -------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 1)), min_size=10, max_size=10), st.randoms(), st.integers(0, 2**63))
def test_learners_ignore_example_order(examples, rnd, seed):
    shuffled = list(examples)
    rnd.shuffle(shuffled)
    Hc = threshold_class(5)
    learners = [
        ERM(Hc),
        RandomThresholdStable(Hc, 0.3),
        MajorityBoost(RandomThresholdStable(Hc, 0.3), 2, 5),
        ThreeWayRule(ERM(Hc)),
        ClassErrorWrapper(ERM(Hc), 2, 1, 0.5),
    ]
    for A in learners:
        a = A.run(Sample.from_examples(5, examples), seed)
        b = A.run(Sample.from_examples(5, shuffled), seed)
        assert a == b
        assert a == A.run(Sample.from_examples(5, examples), seed)
        assert a.domain_size == 5
