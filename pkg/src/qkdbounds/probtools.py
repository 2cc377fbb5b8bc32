"""Classical probability utilities.

Distributions over key and side-information alphabets, variational distance,
Shannon and binary entropies (in bits), the inverse binary entropy, and the
Markov-inequality conversion of an averaged guarantee into an individual one.

Key values are integers ``k`` in ``[0, 2**n)``; bit position ``i`` of a key is
``(k >> i) & 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, ValidationError

PROB_TOL = 1e-12
ROOT_TOL = 1e-12


@dataclass(frozen=True)
class Distribution:
    """Probability vector over an alphabet of size ``len(probs)``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValidationError("distribution must be a non-empty vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValidationError("distribution entries must be finite and non-negative")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValidationError(f"distribution sums to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def size(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, size: int) -> "Distribution":
        return cls(np.full(size, 1.0 / size))


@dataclass(frozen=True)
class JointDistribution:
    """Joint law ``p(k, y)``; rows are key values, columns side-information outcomes."""

    probs: np.ndarray
    key_bits: int

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2 or p.shape[1] < 1:
            raise ValidationError("joint distribution must be a 2-D array with >= 1 column")
        if self.key_bits < 0 or p.shape[0] != 1 << self.key_bits:
            raise ValidationError(
                f"{p.shape[0]} rows do not match key_bits={self.key_bits}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValidationError("joint entries must be finite and non-negative")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValidationError(f"joint distribution sums to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n_keys(self) -> int:
        return self.probs.shape[0]

    @property
    def n_side(self) -> int:
        return self.probs.shape[1]

    def key_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def side_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=0)


def _as_probs(p) -> np.ndarray:
    if isinstance(p, (Distribution, JointDistribution)):
        return p.probs
    return np.asarray(p, dtype=float)


def variational_distance(p, q) -> float:
    """Return ``0.5 * sum |p_i - q_i|`` for two distributions on the same alphabet."""
    a, b = _as_probs(p), _as_probs(q)
    if a.shape != b.shape:
        raise DimensionError(f"alphabet sizes differ: {a.shape} vs {b.shape}")
    return float(0.5 * np.abs(a - b).sum())


def shannon_entropy(p) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``."""
    a = _as_probs(p).ravel()
    nz = a[a > 0]
    return float(max(0.0, -(nz * np.log2(nz)).sum()))


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy undefined at {x!r}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def binary_entropy_inverse(h: float, tol: float = ROOT_TOL) -> float:
    """Return the unique ``x`` in ``[0, 1/2]`` with ``binary_entropy(x) == h``.

    Bisection on the increasing branch, to absolute tolerance ``tol`` in ``x``.
    """
    if not 0.0 <= h <= 1.0:
        raise DomainError(f"binary entropy inverse undefined at {h!r}")
    if h == 0.0:
        return 0.0
    if h == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < h:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def markov_individual_bound(avg_excess: float, num_averages: int = 2) -> tuple[float, float]:
    """Convert an averaged excess into an individual one by repeated Markov steps.

    Each step turns an average bound with excess ``delta`` into an individual
    bound with excess ``delta**(1/2)`` that fails with probability at most
    ``delta**(1/2)``. Splitting the exponent evenly over ``num_averages``
    averages gives excess ``eps**(1/(m+1))`` and a union-bounded failure
    probability ``m * eps**(1/(m+1))``.

    Returns ``(excess, failure_prob)``; ``failure_prob`` may exceed 1, in which
    case the guarantee is vacuous.
    """
    if not 0.0 < avg_excess < 1.0:
        raise DomainError(f"average excess must lie in (0, 1), got {avg_excess!r}")
    if int(num_averages) != num_averages or num_averages < 1:
        raise DomainError(f"number of averages must be a positive integer, got {num_averages!r}")
    m = int(num_averages)
    excess = avg_excess ** (1.0 / (m + 1))
    return excess, m * excess


def classical_criterion(joint: JointDistribution) -> float:
    """Classical trace-distance criterion ``v(p(k, y), U(k) p(y))``."""
    ref = np.outer(np.full(joint.n_keys, 1.0 / joint.n_keys), joint.side_marginal())
    return variational_distance(joint.probs, ref)


def random_distribution(rng: np.random.Generator, size: int, concentration: float = 1.0) -> np.ndarray:
    return rng.dirichlet(np.full(size, concentration))


def random_joint(rng: np.random.Generator, key_bits: int, n_side: int,
                 concentration: float | None = None, uniform_prior: bool = False) -> JointDistribution:
    """Draw a random joint distribution.

    With ``concentration=None`` the Dirichlet concentration itself is drawn
    log-uniformly from ``[0.05, 5]`` so that both near-deterministic and
    near-independent joints are sampled.
    """
    if concentration is None:
        concentration = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
    n_keys = 1 << key_bits
    if uniform_prior:
        cond = rng.dirichlet(np.full(n_side, concentration), size=n_keys)
        probs = cond / n_keys
    else:
        probs = rng.dirichlet(np.full(n_keys * n_side, concentration)).reshape(n_keys, n_side)
    probs = probs / probs.sum()
    return JointDistribution(probs, key_bits)
