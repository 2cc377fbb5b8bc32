import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkdbounds.errors import DimensionError, DomainError, ValidationError
from qkdbounds.probtools import (
    Distribution, JointDistribution, binary_entropy, binary_entropy_inverse,
    classical_criterion, markov_individual_bound, random_joint, shannon_entropy,
    variational_distance,
)


def prob_vectors(size):
    return st.lists(st.floats(0.0, 1.0), min_size=size, max_size=size).filter(
        lambda v: sum(v) > 1e-3).map(lambda v: np.asarray(v) / sum(v))


def test_distribution_validation():
    with pytest.raises(ValidationError):
        Distribution([0.5, 0.6])
    with pytest.raises(ValidationError):
        Distribution([1.5, -0.5])
    with pytest.raises(ValidationError):
        Distribution([])
    Distribution([1.0])


def test_joint_requires_power_of_two_rows():
    with pytest.raises(ValidationError):
        JointDistribution(np.full((3, 2), 1 / 6), 2)
    j = JointDistribution(np.full((4, 2), 1 / 8), 2)
    assert j.n_keys == 4 and j.n_side == 2


def test_variational_distance_examples():
    p = Distribution([0.7, 0.3])
    assert variational_distance(p, p) == 0.0
    assert variational_distance(p, [0.2, 0.8]) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(DimensionError):
        variational_distance([1.0], [0.5, 0.5])


@settings(max_examples=200, deadline=None)
@given(prob_vectors(6), prob_vectors(6), prob_vectors(6))
def test_variational_distance_is_a_metric(p, q, r):
    pq, qp = variational_distance(p, q), variational_distance(q, p)
    assert pq == qp
    assert 0.0 <= pq <= 1.0 + 1e-12
    assert variational_distance(p, r) <= pq + variational_distance(q, r) + 1e-12
    assert variational_distance(p, p) == 0.0


def test_entropies():
    assert shannon_entropy(np.full(8, 1 / 8)) == pytest.approx(3.0, abs=1e-15)
    assert shannon_entropy([1.0, 0.0, 0.0]) == 0.0
    # -0.25 log2 0.25 - 0.75 log2 0.75
    assert shannon_entropy([0.25, 0.75]) == pytest.approx(0.5 + 0.75 * math.log2(4 / 3), abs=1e-15)
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0 and binary_entropy(1.0) == 0.0
    assert binary_entropy(0.11) == pytest.approx(0.499915958164528, abs=1e-15)
    with pytest.raises(DomainError):
        binary_entropy(1.2)


def test_binary_entropy_inverse_examples():
    assert binary_entropy_inverse(1.0) == 0.5
    assert binary_entropy_inverse(0.0) == 0.0
    assert binary_entropy_inverse(binary_entropy(0.11)) == pytest.approx(0.11, abs=1e-9)
    with pytest.raises(DomainError):
        binary_entropy_inverse(-0.1)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 0.5))
def test_binary_entropy_inverse_round_trip(x):
    assert abs(binary_entropy_inverse(binary_entropy(x)) - x) <= 1e-9


def test_markov_examples():
    excess, fail = markov_individual_bound(1e-9, 2)
    assert excess == pytest.approx(1e-3, rel=1e-12)
    assert fail == pytest.approx(2e-3, rel=1e-12)
    assert markov_individual_bound(1e-6, 2)[0] == pytest.approx(1e-2, rel=1e-12)
    assert markov_individual_bound(0.25, 1) == (0.5, 0.5)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            markov_individual_bound(bad, 1)
    with pytest.raises(DomainError):
        markov_individual_bound(0.1, 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-12, 0.9), st.floats(1.0001, 1.1), st.integers(1, 8))
def test_markov_monotone(eps, factor, m):
    e = markov_individual_bound(eps, m)[0]
    assert markov_individual_bound(eps, m + 1)[0] >= e
    assert markov_individual_bound(min(0.99, eps * factor), m)[0] >= e


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.floats(1e-6, 0.5))
def test_markov_inequality_empirically(seed, support, eps):
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.ones(support))
    values = rng.exponential(size=support)
    values *= eps * rng.uniform(0.05, 1.0) / (probs @ values)
    assert probs @ values <= eps * (1 + 1e-12)
    excess, fail = markov_individual_bound(eps, 1)
    assert probs[values >= excess].sum() <= fail + 1e-12


def test_classical_criterion_of_independent_uniform_is_zero(rng):
    q = rng.dirichlet(np.ones(5))
    j = JointDistribution(np.outer(np.full(4, 0.25), q), 2)
    assert classical_criterion(j) == pytest.approx(0.0, abs=1e-15)


def test_random_joint_valid(rng):
    for _ in range(50):
        j = random_joint(rng, int(rng.integers(0, 5)), int(rng.integers(1, 10)))
        assert abs(j.probs.sum() - 1) < 1e-12
        u = random_joint(rng, 2, 3, uniform_prior=True)
        assert np.allclose(u.key_marginal(), 0.25, atol=1e-12)
