import itertools

import numpy as np
import pytest

from qkdbounds import counterexamples as ce
from qkdbounds.adversary import kpa_guess, kpa_guess_worst_case, optimal_guess_whole
from qkdbounds.errors import DomainError, InfeasibleError
from qkdbounds.probtools import Distribution, JointDistribution, classical_criterion, variational_distance


def test_half_biased_examples():
    p = ce.half_biased_build(4, 0.1)
    assert np.allclose(p.probs, [0.3, 0.3, 0.2, 0.2], atol=1e-15)
    assert variational_distance(p, Distribution.uniform(4)) == pytest.approx(0.1, abs=1e-12)
    assert np.allclose(ce.half_biased_build(2, 0.25).probs, [0.75, 0.25])
    with pytest.raises(DomainError):
        ce.half_biased_build(3, 0.1)
    with pytest.raises(DomainError):
        ce.half_biased_build(4, 0.5)


@pytest.mark.parametrize("n,eps", [(2, 1e-6), (4, 0.1), (1000, 0.01), (64, 0.49), (10, 0.3)])
def test_half_biased_leak(n, eps):
    dist = ce.HalfBiased(n, eps)
    built = dist.distribution()
    assert variational_distance(built, Distribution.uniform(n)) == pytest.approx(eps, abs=1e-12)
    leak = ce.half_biased_leak_probability(built)
    assert leak == pytest.approx((1 + 2 * eps) / 2, abs=1e-12)
    assert ce.half_biased_leak_probability(dist) == pytest.approx(leak, abs=1e-12)
    # the gap to the "failure probability eps" reading is exactly 1/2
    assert leak - eps == pytest.approx(0.5, abs=1e-12)


def test_half_biased_numbers():
    assert ce.half_biased_leak_probability(ce.half_biased_build(4, 0.1)) == pytest.approx(0.6)
    # (1 + 2 eps) / 2 at eps = 0.01
    assert ce.half_biased_leak_probability(ce.half_biased_build(1000, 0.01)) == pytest.approx(0.51)


def test_kpa_spike_acceptance_parameters():
    spike = ce.kpa_spike_build(4, 2, 0.01, 0.99)
    assert classical_criterion(spike.joint) <= 0.01
    worst = kpa_guess_worst_case(spike.joint, spike.split)
    assert worst.prob >= 0.99
    assert worst.event_prob < 0.02
    assert kpa_guess(spike.joint, spike.split) <= 2.0 ** -2 + classical_criterion(spike.joint) + 1e-10


def test_kpa_spike_large_eps_copies():
    spike = ce.kpa_spike_build(2, 1, 0.5, 1.0)
    assert kpa_guess_worst_case(spike.joint, spike.split).prob == 1.0
    assert classical_criterion(spike.joint) <= 0.5


@pytest.mark.parametrize("n,k,eps,delta", [(3, 1, 1e-6, 0.999), (5, 2, 1e-3, 0.5), (6, 3, 0.2, 1.0)])
def test_kpa_spike_properties(n, k, eps, delta):
    spike = ce.kpa_spike_build(n, k, eps, delta)
    d = classical_criterion(spike.joint)
    assert d <= eps
    assert kpa_guess_worst_case(spike.joint, spike.split).prob >= delta
    assert kpa_guess(spike.joint, spike.split) <= 2.0 ** -(n - k) + d + 1e-10


def test_kpa_spike_averaged_mode_infeasible():
    with pytest.raises(InfeasibleError) as info:
        ce.kpa_spike_build(4, 2, 0.01, 0.99, per_outcome=False)
    best = info.value.max_achievable
    assert best == pytest.approx(1 / (4 - 16 * 0.01))
    spike = ce.kpa_spike_build(4, 2, 0.01, best, per_outcome=False)
    assert classical_criterion(spike.joint) <= 0.01 + 1e-12
    assert kpa_guess_worst_case(spike.joint, spike.split, per_outcome=False).prob >= best - 1e-12


def test_averaged_conditional_guess_is_limited(rng):
    """With Y averaged, p1(K2 | K1=k1) <= (1/N + d) / (1/N1 - d) on random joints."""
    for _ in range(300):
        probs = rng.dirichlet(np.full(16 * 3, 5.0)).reshape(16, 3)
        j = JointDistribution(probs, 4)
        d = classical_criterion(j)
        if d >= 0.25:
            continue
        spike = ce._kpa_split(4, 2)
        worst = kpa_guess_worst_case(j, spike, per_outcome=False)
        assert worst.prob <= (1 / 16 + d) / (1 / 4 - d) + 1e-12


def test_tightness_witness():
    for n, eps in [(1, 0.25), (3, 0.1), (4, 0.9), (2, 0.0)]:
        j = ce.tightness_witness_eq6(n, eps)
        assert classical_criterion(j) == pytest.approx(eps, abs=1e-9)
        gap = 2.0 ** -n + eps - optimal_guess_whole(j)
        assert gap == pytest.approx(0.0, abs=1e-12)
        c = ce.tightness_constant(n)
        assert c >= 0.5
        assert optimal_guess_whole(j) >= 2.0 ** -n + eps * (1 - 2.0 ** -n) * c - 1e-12
    with pytest.raises(DomainError):
        ce.tightness_witness_eq6(2, 0.8)


def test_tightness_binary_exhaustive_search():
    """Grid search over 2x2 joints with d <= 1/4: best guess is 3/4, as the witness attains."""
    grid = np.arange(41) / 40
    best = 0.0
    for a, b, c in itertools.product(grid, repeat=3):
        rest = 1 - a - b - c
        if rest < -1e-12:
            continue
        probs = np.array([[a, b], [c, max(rest, 0.0)]])
        py = probs.sum(axis=0)
        d = 0.5 * np.abs(probs - 0.5 * py).sum()
        if d <= 0.25 + 1e-12:
            best = max(best, probs.max(axis=0).sum())
    witness = optimal_guess_whole(ce.tightness_witness_eq6(1, 0.25))
    assert best == pytest.approx(0.75, abs=1e-9)
    assert witness == pytest.approx(best, abs=1e-9)
