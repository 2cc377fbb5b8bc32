"""Explicit constructions that separate the criterion from its misreadings.

* the half-biased distribution: variational distance ``eps`` from uniform,
  yet half the outcomes are favoured;
* the known-plaintext spike: a joint with small criterion value in which one
  conditioning event makes the remaining key bits nearly certain;
* an exact tightness witness for the averaged whole-key bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adversary import KpaSplit, SubsetSpec
from .errors import DomainError, InfeasibleError
from .probtools import Distribution, JointDistribution, classical_criterion


@dataclass(frozen=True)
class HalfBiased:
    n_outcomes: int
    eps: float

    def __post_init__(self):
        if self.n_outcomes < 2 or self.n_outcomes % 2:
            raise DomainError(f"number of outcomes must be even and positive, got {self.n_outcomes!r}")
        if not 0.0 < self.eps < 0.5:
            raise DomainError(f"bias must lie in (0, 1/2), got {self.eps!r}")

    def distribution(self) -> Distribution:
        n, e = self.n_outcomes, self.eps
        probs = np.empty(n)
        probs[: n // 2] = (1 + 2 * e) / n
        probs[n // 2:] = (1 - 2 * e) / n
        return Distribution(probs)


def half_biased_build(n_outcomes: int, eps: float) -> Distribution:
    """``P_i = (1+2eps)/N`` on the first half of the outcomes, ``(1-2eps)/N`` on the rest."""
    return HalfBiased(n_outcomes, eps).distribution()


def half_biased_leak_probability(dist) -> float:
    """Probability mass on outcomes favoured relative to uniform.

    Accepts a :class:`HalfBiased` or any :class:`Distribution`. Outcomes count
    as favoured when ``P_i > 1/N``; treating any deviation as a leak would
    give mass 1 for the half-biased case.
    """
    if isinstance(dist, HalfBiased):
        return (1 + 2 * dist.eps) / 2
    probs = dist.probs if isinstance(dist, Distribution) else np.asarray(dist, dtype=float)
    return float(probs[probs > 1.0 / probs.size].sum())


@dataclass(frozen=True)
class KpaSpike:
    """A spike construction together with what it achieves."""

    joint: JointDistribution
    split: KpaSplit
    known_value: int
    target_value: int
    side: int | None
    spike_mass: float
    d: float


def _kpa_split(n: int, known_bits: int) -> KpaSplit:
    return KpaSplit(SubsetSpec(tuple(range(known_bits))), SubsetSpec(tuple(range(known_bits, n))))


def kpa_spike_build(n: int, known_bits: int, eps: float, spike: float,
                    per_outcome: bool = True) -> KpaSpike:
    """Joint with criterion ``<= eps`` where K2 is guessed with probability ``>= spike``
    once the known segment ``K1 = 0`` is revealed.

    Key bits ``0..known_bits-1`` form K1, the rest form K2.

    ``per_outcome=True`` (default): the key is uniform and independent of a
    typical outcome ``Y = 0``; a rare outcome ``Y = 1`` of mass ``mu`` puts
    weight ``spike`` on ``(k1, k2) = (0, 0)`` and spreads the rest over the
    other K2 values of the same block. Conditioned on ``(K1=0, Y=1)`` Eve
    guesses K2 with probability ``spike``; ``mu`` is solved so that the
    criterion equals ``eps`` (capped at ``mu = 1``).

    ``per_outcome=False``: Y is trivial and the conditional success averaged
    over Y is raised by draining the non-spike entries of block ``K1 = 0``
    into the other blocks. The largest achievable conditional success is
    ``1 / (N2 - N eps)``; requests beyond it raise :class:`InfeasibleError`.
    """
    if not 0 < known_bits < n:
        raise DomainError(f"need 0 < known_bits < n, got known_bits={known_bits!r}, n={n!r}")
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps!r}")
    if not 0.0 < spike <= 1.0:
        raise DomainError(f"spike must lie in (0, 1], got {spike!r}")
    big_n = 1 << n
    n2 = 1 << (n - known_bits)
    split = _kpa_split(n, known_bits)
    # key value with K1 = 0 and K2 = v is v << known_bits
    block = np.arange(n2) << known_bits

    if per_outcome:
        if n2 == 1 and spike < 1.0:
            raise InfeasibleError("empty target", max_achievable=1.0)
        # tiny upward margin so the realised conditional survives rounding
        target = min(1.0, spike * (1.0 + 1e-12))
        column = np.zeros(big_n)
        column[block] = (1.0 - target) / (n2 - 1) if n2 > 1 else 0.0
        column[0] = target
        # criterion is linear in mu: d = mu * v(column, U)
        unit_d = 0.5 * np.abs(column - 1.0 / big_n).sum()
        mu = min(1.0, eps / unit_d) * (1.0 - 1e-12)
        probs = np.column_stack([np.full(big_n, (1.0 - mu) / big_n), mu * column])
        joint = JointDistribution(probs, n)
        d = classical_criterion(joint)
        if d > eps:
            # rounding pushed d just past eps; shrink mu proportionally
            mu *= eps / d * (1.0 - 1e-12)
            probs = np.column_stack([np.full(big_n, (1.0 - mu) / big_n), mu * column])
            joint = JointDistribution(probs, n)
            d = classical_criterion(joint)
        return KpaSpike(joint, split, 0, 0, 1, mu, d)

    max_spike = 1.0 if eps >= (n2 - 1) / big_n else 1.0 / (n2 - big_n * eps)
    if spike > max_spike:
        raise InfeasibleError(
            f"conditional success {spike!r} needs more than eps={eps!r} allows",
            max_achievable=max_spike)
    # keep p(0, 0) = 1/N, lower the other entries of the block to beta
    target = min(max_spike, spike * (1.0 + 1e-12))
    beta = (1.0 - target) / (target * big_n * (n2 - 1)) if n2 > 1 else 0.0
    moved = (n2 - 1) * (1.0 / big_n - beta)
    probs = np.full(big_n, 1.0 / big_n)
    probs[block[1:]] = beta
    others = np.setdiff1d(np.arange(big_n), block)
    probs[others] += moved / others.size
    joint = JointDistribution(probs[:, None] / probs.sum(), n)
    return KpaSpike(joint, split, 0, 0, None, moved, classical_criterion(joint))


def tightness_witness_eq6(n: int, eps: float) -> JointDistribution:
    """Uniform key seen through an erasure channel.

    With probability ``lam`` Eve learns the key, otherwise she sees an
    erasure symbol (last column). The criterion is ``lam (1 - 2**-n)`` and
    the optimal whole-key guess ``2**-n + lam (1 - 2**-n)``; choosing
    ``lam = eps / (1 - 2**-n)`` makes the averaged whole-key bound hold with
    equality, i.e. the attained excess is ``c eps (1 - 2**-n)`` with
    ``c = 1 / (1 - 2**-n)``.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"bit count must be a positive integer, got {n!r}")
    big_n = 1 << n
    if not 0.0 <= eps <= 1.0 - 1.0 / big_n:
        raise DomainError(f"eps must lie in [0, 1 - 2**-n], got {eps!r}")
    lam = eps / (1.0 - 1.0 / big_n)
    probs = np.zeros((big_n, big_n + 1))
    probs[np.arange(big_n), np.arange(big_n)] = lam / big_n
    probs[:, big_n] = (1.0 - lam) / big_n
    return JointDistribution(probs, n)


def tightness_constant(n: int) -> float:
    """Ratio of the attained excess to ``eps (1 - 2**-n)`` for the witness above."""
    return 1.0 / (1.0 - 2.0 ** -n)
