"""Small dense Hermitian operators and classical-quantum states.

Operators are plain ``numpy`` complex arrays; the helpers here validate them.
The trace-distance criterion of a cq-state is evaluated in its per-key
decomposed form, which equals the trace norm of the block-diagonal
``rho_KE - rho_U (x) rho_E``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .probtools import PROB_TOL, JointDistribution

HERM_TOL = 1e-10


def check_hermitian(a, tol: float = HERM_TOL) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > tol:
        raise ValidationError("matrix is not Hermitian")
    return m


def check_density(rho, tol: float = HERM_TOL) -> np.ndarray:
    m = check_hermitian(rho, tol)
    if abs(np.trace(m).real - 1.0) > tol:
        raise ValidationError(f"density operator has trace {np.trace(m).real!r}")
    if np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() < -tol:
        raise ValidationError("density operator is not positive semidefinite")
    return m


def trace_norm(a) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    m = check_hermitian(a)
    return float(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T))).sum())


def pure_state(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class CQState:
    """``rho_KE = sum_k p(k) |k><k| (x) rho_E^k`` stored as ``(p, [rho_E^k])``."""

    probs: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        rhos = np.asarray(self.states, dtype=complex)
        if p.ndim != 1 or p.size < 1 or p.size & (p.size - 1):
            raise ValidationError("number of key values must be a power of two")
        if rhos.ndim != 3 or rhos.shape[0] != p.size or rhos.shape[1] != rhos.shape[2]:
            raise DimensionError(
                f"expected {p.size} square Eve states of equal dimension, got shape {rhos.shape}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
            raise ValidationError("key probabilities must be non-negative and sum to 1")
        for rho in rhos:
            check_density(rho)
        p.setflags(write=False)
        rhos.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "states", rhos)

    @property
    def key_bits(self) -> int:
        return self.probs.size.bit_length() - 1

    @property
    def n_keys(self) -> int:
        return self.probs.size

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def eve_state(self) -> np.ndarray:
        """Eve's reduced state ``rho_E = sum_k p(k) rho_E^k``."""
        return np.einsum("k,kij->ij", self.probs, self.states)

    def full_operator(self, key_probs=None) -> np.ndarray:
        """Explicit ``sum_k q(k) |k><k| (x) rho_E^k`` as an ``(N*dim, N*dim)`` matrix."""
        q = self.probs if key_probs is None else np.asarray(key_probs, dtype=float)
        out = np.zeros((self.n_keys * self.dim,) * 2, dtype=complex)
        for k in range(self.n_keys):
            ket = np.zeros((self.n_keys, self.n_keys))
            ket[k, k] = 1.0
            out += np.kron(ket, q[k] * self.states[k])
        return out

    def ideal_operator(self) -> np.ndarray:
        """``rho_U (x) rho_E`` as an explicit matrix."""
        return np.kron(np.eye(self.n_keys) / self.n_keys, self.eve_state())


def trace_distance_criterion(state: CQState) -> float:
    """``d = 1/2 sum_k || p(k) rho_E^k - rho_E / N ||_1``."""
    rho_e = state.eve_state()
    total = 0.0
    for p, rho in zip(state.probs, state.states):
        total += trace_norm(p * rho - rho_e / state.n_keys)
    return 0.5 * total


def trace_distance_criterion_full(state: CQState) -> float:
    """Same criterion from the explicit ``1/2 ||rho_KE - rho_U (x) rho_E||_1``."""
    return 0.5 * trace_norm(state.full_operator() - state.ideal_operator())


def helstrom_success(p0: float, rho0, p1: float, rho1) -> float:
    """Optimal probability of correctly identifying which of two states was sent.

    Uses the standard form ``(1 + ||p0 rho0 - p1 rho1||_1) / 2``.
    """
    if abs(p0 + p1 - 1.0) > PROB_TOL or p0 < 0 or p1 < 0:
        raise ValidationError(f"priors {p0!r}, {p1!r} do not form a distribution")
    a, b = check_density(rho0), check_density(rho1)
    if a.shape != b.shape:
        raise DimensionError("states have different dimensions")
    return 0.5 * (1.0 + trace_norm(p0 * a - p1 * b))


def classical_embed(joint: JointDistribution) -> CQState:
    """Embed ``p(k, y)`` as ``rho_E^k = diag(p(y|k))``.

    Key values of zero probability get the maximally mixed state; they carry
    zero weight in the criterion.
    """
    pk = joint.key_marginal()
    n_side = joint.n_side
    states = np.empty((joint.n_keys, n_side, n_side), dtype=complex)
    for k in range(joint.n_keys):
        if pk[k] > 0:
            cond = joint.probs[k] / pk[k]
        else:
            cond = np.full(n_side, 1.0 / n_side)
        states[k] = np.diag(cond)
    return CQState(pk / pk.sum(), states)


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    """Random density matrix ``G G^dagger / tr`` with complex Gaussian ``G``."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def random_cq_state(rng: np.random.Generator, key_bits: int, dim: int) -> CQState:
    n = 1 << key_bits
    probs = rng.dirichlet(np.ones(n))
    states = np.stack([random_density(rng, dim, rank=int(rng.integers(1, dim + 1)))
                       for _ in range(n)])
    return CQState(probs, states)
