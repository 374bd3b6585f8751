import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import classes, distributions, hypotheses
from stablelab.core import (
    DomainError,
    FiniteDistribution,
    Hypothesis,
    HypothesisClass,
    Sample,
    class_loss,
    condition_on_consistency,
    derive_seed,
    derive_seeds,
    draw_sample,
    empirical_loss,
    full_cube,
    median_threshold_distribution,
    mix_with_point_mass,
    population_loss,
    threshold_class,
    threshold_cuts,
)

H = Hypothesis.from_string


def atoms_of(D):
    return {(e.point, e.label): p for e, p in D.atoms}


# -- hypotheses -------------------------------------------------------------


@given(hypotheses())
def test_hypothesis_string_round_trip(h):
    assert Hypothesis.from_string(str(h)) == h
    assert len(str(h)) == h.domain_size


def test_bit_i_labels_point_i():
    h = H("0110")
    assert [h(x) for x in range(4)] == [0, 1, 1, 0]
    assert h.bits == 0b0110


@pytest.mark.parametrize("bad", ["", "012", "1 0"])
def test_bad_strings_rejected(bad):
    with pytest.raises(ValueError):
        Hypothesis.from_string(bad)


def test_class_is_sorted_and_distinct():
    C = HypothesisClass.from_strings(["11", "00", "10"])
    assert [str(h) for h in C] == ["00", "10", "11"]
    with pytest.raises(ValueError):
        HypothesisClass.from_strings(["01", "01"])
    with pytest.raises(DomainError):
        HypothesisClass(2, [H("010")])


def test_class_file_round_trip(tmp_path):
    C = threshold_class(5)
    C.save(tmp_path / "c.txt")
    assert HypothesisClass.load(tmp_path / "c.txt") == C
    assert (tmp_path / "c.txt").read_text().splitlines()[0] == "5"


def test_mistakes_matches_empirical_loss():
    C = full_cube(3)
    S = Sample.from_examples(3, [(0, 1), (0, 1), (1, 0), (2, 1), (2, 0)])
    mist = C.mistakes(S.counts)
    for h, m in zip(C, mist):
        assert m == empirical_loss(h, S) * S.size


# -- population and empirical loss ------------------------------------------


def test_population_loss_examples(three_atoms):
    assert population_loss(H("000"), three_atoms) == pytest.approx(2 / 3, abs=1e-12)
    assert population_loss(H("0111"), median_threshold_distribution(4)) == 0.0
    h = H("101")
    assert population_loss(h, FiniteDistribution.point_mass(3, 2, 1)) == 0.0


def test_population_loss_domain_mismatch(three_atoms):
    with pytest.raises(DomainError):
        population_loss(H("00"), three_atoms)


def test_empirical_loss_examples():
    S = Sample.from_examples(2, [(0, 1), (1, 1)])
    assert empirical_loss(H("11"), S) == 0
    assert empirical_loss(H("00"), S) == 1
    S3 = Sample.from_examples(2, [(0, 0), (0, 1), (1, 1)])
    assert empirical_loss(H("01"), S3) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        empirical_loss(H("01"), Sample(2, np.zeros((2, 2))))


def test_class_loss_examples():
    assert class_loss(threshold_class(4), median_threshold_distribution(4)) == 0.0
    D = FiniteDistribution.uniform(2, [(0, 0), (1, 1)])
    assert class_loss(HypothesisClass.from_strings(["00", "11"]), D) == 0.5
    with pytest.raises(ValueError):
        class_loss(HypothesisClass(2, []), D)


@given(st.data())
def test_loss_bounds_and_flip(data):
    D = data.draw(distributions())
    h = data.draw(hypotheses(min_n=D.domain_size, max_n=D.domain_size))
    loss = population_loss(h, D)
    assert 0.0 <= loss <= 1.0
    assert population_loss(h.flipped(), D) == pytest.approx(1.0 - loss, abs=1e-9)


@given(st.data())
def test_class_loss_is_min(data):
    C = data.draw(classes())
    D = data.draw(distributions(n=C.domain_size))
    opt = class_loss(C, D)
    assert all(opt <= population_loss(h, D) for h in C)


# -- sampling ---------------------------------------------------------------


def test_draw_sample_deterministic(three_atoms):
    assert draw_sample(three_atoms, 50, 9) == draw_sample(three_atoms, 50, 9)
    assert draw_sample(three_atoms, 50, 9).size == 50


def test_draw_sample_point_mass():
    S = draw_sample(FiniteDistribution.point_mass(4, 2, 1), 37, 3)
    assert S.counts[2, 1] == 37 and S.size == 37
    assert empirical_loss(H("0010"), S) == 0


def test_draw_sample_frequencies():
    D = FiniteDistribution.uniform(2, [(0, 0), (1, 1)])
    S = draw_sample(D, 10000, 42)
    assert abs(S.counts[0, 0] / 10000 - 0.5) <= 0.02


def test_draw_sample_rejects_bad_n(three_atoms):
    with pytest.raises(ValueError):
        draw_sample(three_atoms, 0, 1)


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 1)), min_size=1, max_size=30), st.randoms())
def test_sample_order_invariance(examples, rnd):
    shuffled = list(examples)
    rnd.shuffle(shuffled)
    a, b = Sample.from_examples(5, examples), Sample.from_examples(5, shuffled)
    assert a == b
    assert list(a.examples()) == sorted(examples)


def test_seed_derivation():
    assert derive_seed(1, "a", 3) == derive_seed(1, "a", 3)
    assert derive_seed(1, "a", 3) != derive_seed(1, "b", 3)
    assert derive_seed(1, "a", 3) != derive_seed(2, "a", 3)
    arr = derive_seeds(77, "loop", 10)
    assert [int(s) for s in arr] == [derive_seed(77, "loop", i) for i in range(10)]
    assert len(set(arr.tolist())) == 10


# -- distributions ----------------------------------------------------------


def test_distribution_validation():
    with pytest.raises(ValueError):
        FiniteDistribution(2, [((0, 0), 0.5), ((1, 0), 0.4)])
    with pytest.raises(ValueError):
        FiniteDistribution(2, [((0, 0), 0.5), ((0, 0), 0.5)])
    with pytest.raises(ValueError):
        FiniteDistribution(2, [((0, 0), 1.5), ((1, 0), -0.5)])
    with pytest.raises(DomainError):
        FiniteDistribution(2, [((2, 0), 1.0)])


def test_distribution_file_round_trip(tmp_path):
    D = FiniteDistribution(3, [((0, 1), 0.1), ((2, 0), 0.2), ((1, 1), 0.7)])
    D.save(tmp_path / "d.txt")
    assert FiniteDistribution.load(tmp_path / "d.txt") == D
    assert "0 1 0.1" in (tmp_path / "d.txt").read_text()


@given(distributions())
def test_distribution_text_is_bit_exact(D):
    assert FiniteDistribution.from_text(D.to_text()) == D


def test_mix_with_point_mass_examples():
    D = FiniteDistribution.uniform(2, [(0, 1), (1, 0)])
    assert mix_with_point_mass(D, 0, 0, 1.0) == D
    mixed = atoms_of(mix_with_point_mass(D, 0, 0, 0.1))
    assert mixed == pytest.approx({(0, 0): 0.9, (0, 1): 0.05, (1, 0): 0.05})
    with pytest.raises(ValueError):
        mix_with_point_mass(D, 0, 0, 0.0)
    with pytest.raises(ValueError):
        mix_with_point_mass(D, 0, 0, 1.2)


@given(st.data(), st.floats(0.01, 1.0))
def test_mix_normalised_and_class_loss_bound(data, gp):
    D = data.draw(distributions())
    x = data.draw(st.integers(0, D.domain_size - 1))
    b = data.draw(st.integers(0, 1))
    M = mix_with_point_mass(D, x, b, gp)
    assert math.fsum(M.probs) == pytest.approx(1.0, abs=1e-9)
    C = full_cube(D.domain_size)
    assert class_loss(C, M) <= gp + 1e-9


def test_condition_on_consistency_examples():
    D = FiniteDistribution.uniform(2, [(0, 1), (1, 0), (1, 1)])
    got = condition_on_consistency(D, H("11"))
    assert atoms_of(got) == pytest.approx({(0, 1): 0.5, (1, 1): 0.5})
    R = FiniteDistribution.uniform(2, [(0, 1), (1, 1)])
    assert condition_on_consistency(R, H("11")) == R
    with pytest.raises(ValueError):
        condition_on_consistency(FiniteDistribution.point_mass(2, 0, 0), H("11"))


@settings(max_examples=50)
@given(st.data())
def test_conditioned_distribution_is_realized(data):
    D = data.draw(distributions())
    h = data.draw(hypotheses(min_n=D.domain_size, max_n=D.domain_size))
    if population_loss(h, D) >= 1.0 - 1e-12:
        return
    assert population_loss(h, condition_on_consistency(D, h)) == 0.0


# -- constructions ----------------------------------------------------------


def test_threshold_class_examples():
    assert {str(h) for h in threshold_class(3)} == {"111", "011", "001", "000"}
    assert {str(h) for h in threshold_class(1)} == {"1", "0"}
    for n in range(1, 10):
        assert len(threshold_class(n)) == n + 1


def test_threshold_embedding():
    cuts = threshold_cuts(7, 64)
    assert cuts == [1, 10, 19, 28, 38, 47, 56, 65]
    C = threshold_class(7, 64)
    assert C.domain_size == 64 and len(C) == 8
    assert threshold_cuts(5) == [1, 2, 3, 4, 5, 6]


def test_median_distribution_examples():
    D = median_threshold_distribution(4)
    assert atoms_of(D) == pytest.approx({(0, 0): 0.25, (1, 1): 0.25, (2, 1): 0.25, (3, 1): 0.25})
    # median floor(2/2) = 1, so both points sit at or above it
    assert atoms_of(median_threshold_distribution(2)) == pytest.approx({(0, 1): 0.5, (1, 1): 0.5})
    with pytest.raises(ValueError):
        median_threshold_distribution(1)


@pytest.mark.parametrize("m", range(2, 20))
def test_threshold_class_realizes_median(m):
    assert class_loss(threshold_class(m), median_threshold_distribution(m)) == 0.0
