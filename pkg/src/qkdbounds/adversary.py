"""Eve's optimal guessing quantities given classical side information.

All quantities are maximum-a-posteriori (MAP) values computed from a
:class:`~qkdbounds.probtools.JointDistribution`. Ties are broken towards the
lowest key index, which never changes a success probability.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .probtools import JointDistribution


@dataclass(frozen=True)
class SubsetSpec:
    """A set of key bit positions, kept sorted."""

    positions: tuple[int, ...]

    def __post_init__(self):
        pos = tuple(int(i) for i in self.positions)
        if not pos:
            raise ValidationError("subset must be non-empty")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValidationError(f"positions {pos} are not strictly increasing")
        if pos[0] < 0:
            raise ValidationError("negative bit position")
        object.__setattr__(self, "positions", pos)

    def __len__(self):
        return len(self.positions)

    def check(self, key_bits: int) -> None:
        if self.positions[-1] >= key_bits:
            raise ValidationError(
                f"position {self.positions[-1]} out of range for a {key_bits}-bit key")


@dataclass(frozen=True)
class KpaSplit:
    """Known segment ``known`` (K1) and the bits to be estimated ``target`` (K2*)."""

    known: SubsetSpec
    target: SubsetSpec

    def __post_init__(self):
        if set(self.known.positions) & set(self.target.positions):
            raise ValidationError("known and target positions overlap")

    def check(self, key_bits: int) -> None:
        self.known.check(key_bits)
        self.target.check(key_bits)


def subset(*positions: int) -> SubsetSpec:
    return SubsetSpec(tuple(sorted(positions)))


def _as_subset(s) -> SubsetSpec:
    return s if isinstance(s, SubsetSpec) else SubsetSpec(tuple(sorted(s)))


def bit_tensor(joint: JointDistribution, groups: Sequence[Sequence[int]]) -> np.ndarray:
    """Marginalise ``p(k, y)`` onto groups of key bits.

    Returns an array of shape ``(2**len(g0), 2**len(g1), ..., |Y|)`` where the
    index along axis ``j`` is ``sum_i bit(k, groups[j][i]) << i``. Bits not in
    any group are summed out.
    """
    n = joint.key_bits
    # C-order reshape puts the most significant bit first.
    t = joint.probs.reshape([2] * n + [joint.n_side])
    keep = [b for g in groups for b in g]
    drop = tuple(n - 1 - b for b in range(n) if b not in keep)
    if drop:
        t = t.sum(axis=drop)
    remaining = [b for b in reversed(range(n)) if b in keep]
    order = []
    for g in groups:
        # highest listed bit first so that position i carries weight 2**i
        order.extend(remaining.index(b) for b in reversed(list(g)))
    order.append(len(remaining))
    t = np.transpose(t, order)
    shape = [1 << len(g) for g in groups] + [joint.n_side]
    return t.reshape(shape)


def subset_marginal(joint: JointDistribution, positions) -> np.ndarray:
    """``p(k*, y)`` for the bits in ``positions``."""
    spec = _as_subset(positions)
    spec.check(joint.key_bits)
    return bit_tensor(joint, [spec.positions])


def optimal_guess_whole(joint: JointDistribution) -> float:
    """``sum_y max_k p(k, y)``."""
    return float(joint.probs.max(axis=0).sum())


def optimal_guess_subset(joint: JointDistribution, positions) -> float:
    return float(subset_marginal(joint, positions).max(axis=0).sum())


def _kpa_tensor(joint: JointDistribution, split: KpaSplit) -> np.ndarray:
    split.check(joint.key_bits)
    return bit_tensor(joint, [split.known.positions, split.target.positions])


def kpa_guess(joint: JointDistribution, split: KpaSplit) -> float:
    """Average over K1 and Y of Eve's MAP success on K2* when K1 is revealed.

    Equals ``sum_{k1, y} max_{k2} p(k1, k2, y)``; conditioning events of zero
    probability contribute nothing.
    """
    t = _kpa_tensor(joint, split)
    return float(t.max(axis=1).sum())


@dataclass(frozen=True)
class WorstCaseKpa:
    """Largest conditional success on K2* over the conditioning events.

    ``side`` is the side-information index when conditioning on the pair
    ``(K1, Y)`` and ``None`` when Y is averaged over. ``event_prob`` is the
    probability of the maximising conditioning event.
    """

    known_value: int
    prob: float
    side: int | None
    event_prob: float


def kpa_guess_worst_case(joint: JointDistribution, split: KpaSplit,
                         per_outcome: bool = True) -> WorstCaseKpa:
    """Find the known-segment value that makes K2* easiest to guess.

    With ``per_outcome=True`` the conditioning event is ``(K1=k1, Y=y)``, i.e.
    Eve's complete knowledge, and the success is ``max_k2 p(k2 | k1, y)``.
    With ``per_outcome=False`` Y is averaged:
    ``sum_y max_k2 p(k1, k2, y) / p(k1)``.
    """
    t = _kpa_tensor(joint, split)
    if per_outcome:
        mass = t.sum(axis=1)
        best = t.max(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(mass > 0, best / np.where(mass > 0, mass, 1.0), -1.0)
        flat = int(np.argmax(cond))
        k1, y = np.unravel_index(flat, cond.shape)
        return WorstCaseKpa(int(k1), float(cond[k1, y]), int(y), float(mass[k1, y]))
    pk1 = t.sum(axis=(1, 2))
    num = t.max(axis=1).sum(axis=1)
    cond = np.where(pk1 > 0, num / np.where(pk1 > 0, pk1, 1.0), -1.0)
    k1 = int(np.argmax(cond))
    return WorstCaseKpa(k1, float(cond[k1]), None, float(pk1[k1]))


def map_estimates(marginal: np.ndarray) -> np.ndarray:
    """MAP estimate of the key segment for every side-information outcome."""
    return np.argmax(marginal, axis=0)


def bit_error_rate(joint: JointDistribution, positions, per_bit_map: bool = False) -> float:
    """Average over the bits of K* of the probability that Eve's estimate is wrong.

    By default Eve uses the sequence-MAP estimate of K* and each of its bits
    is scored. ``per_bit_map=True`` lets her estimate each bit separately by
    its own MAP rule, which can only lower the error rate.
    """
    spec = _as_subset(positions)
    marg = subset_marginal(joint, spec)
    width = len(spec)
    values = np.arange(marg.shape[0])
    if per_bit_map:
        total = 0.0
        for i in range(width):
            bit = (values >> i) & 1
            p0 = marg[bit == 0].sum(axis=0)
            p1 = marg[bit == 1].sum(axis=0)
            total += np.minimum(p0, p1).sum()
        return float(total / width)
    est = map_estimates(marg)
    wrong_bits = np.zeros_like(marg)
    for i in range(width):
        wrong_bits += ((values[:, None] >> i) & 1) != ((est[None, :] >> i) & 1)
    return float((marg * wrong_bits).sum() / width)


@dataclass(frozen=True)
class PosteriorDecomposition:
    """Per-outcome posterior deviations and their average.

    ``epsilons[y]`` is the variational distance of ``p(.|y)`` from the
    reference key distribution (zero where ``p(y) = 0``), ``mean`` is
    ``sum_y p(y) epsilons[y]`` and ``reference`` is the same quantity computed
    directly on the joint, ``v(p(k, y), r(k) p(y))``.
    """

    epsilons: np.ndarray
    mean: float
    reference: float

    @property
    def consistent(self) -> bool:
        return abs(self.mean - self.reference) <= 1e-10


def posterior_decomposition_check(joint: JointDistribution,
                                  against_uniform: bool = False) -> PosteriorDecomposition:
    """Split the distance of the joint from a product into per-outcome pieces.

    The reference key distribution is the prior ``p(k)`` by default, or the
    uniform distribution with ``against_uniform=True``, in which case
    ``reference`` is the classical criterion ``d``. For a uniform prior the
    two coincide.
    """
    pk = joint.key_marginal()
    if against_uniform:
        pk = np.full(joint.n_keys, 1.0 / joint.n_keys)
    py = joint.side_marginal()
    eps = np.zeros(joint.n_side)
    live = py > 0
    post = joint.probs[:, live] / py[live]
    eps[live] = 0.5 * np.abs(post - pk[:, None]).sum(axis=0)
    mean = float((py * eps).sum())
    reference = float(0.5 * np.abs(joint.probs - np.outer(pk, py)).sum())
    return PosteriorDecomposition(eps, mean, reference)
