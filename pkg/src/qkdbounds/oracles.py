"""Independent brute-force oracles.

These deliberately avoid the code paths they check: guessing probabilities
by exhaustive search over deterministic guessing functions, eigenvalues by
cyclic Jacobi rotations, Helstrom success by grid search over projective
qubit measurements. Everything here is exponential or slow and only meant
for small instances.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

MAX_FUNCTIONS = 1 << 22


def _bits_of(k: int, positions) -> int:
    return sum(((k >> p) & 1) << i for i, p in enumerate(positions))


def _all_functions(domain: int, codomain: int) -> np.ndarray:
    """Every map ``range(domain) -> range(codomain)`` as rows of a table."""
    count = codomain ** domain
    if count > MAX_FUNCTIONS:
        raise ValueError(f"{count} guessing functions exceed the brute-force limit")
    return np.array(list(itertools.product(range(codomain), repeat=domain)), dtype=np.int64).reshape(count, domain)


def brute_guess(probs: np.ndarray, positions=None) -> float:
    """``max_g sum_{k, y} p(k, y) [g(y) = k*]`` over every guessing function ``g``."""
    probs = np.asarray(probs, dtype=float)
    n_keys, n_side = probs.shape
    if positions is None:
        positions = list(range(n_keys.bit_length() - 1))
    width = 1 << len(positions)
    # score[v, y] = probability mass of (k, y) pairs whose segment equals v
    score = np.zeros((width, n_side))
    for k in range(n_keys):
        score[_bits_of(k, positions)] += probs[k]
    funcs = _all_functions(n_side, width)
    values = score[funcs, np.arange(n_side)].sum(axis=1)
    return float(values.max())


def brute_kpa_guess(probs: np.ndarray, known, target) -> float:
    """Exhaustive maximisation over guessing functions ``g(k1, y) -> k2*``."""
    probs = np.asarray(probs, dtype=float)
    n_keys, n_side = probs.shape
    n1, n2 = 1 << len(known), 1 << len(target)
    score = np.zeros((n1 * n_side, n2))
    for k in range(n_keys):
        k1, k2 = _bits_of(k, known), _bits_of(k, target)
        for y in range(n_side):
            score[k1 * n_side + y, k2] += probs[k, y]
    funcs = _all_functions(n1 * n_side, n2)
    values = score[np.arange(n1 * n_side), funcs].sum(axis=1)
    return float(values.max())


def brute_bit_error_rate(probs: np.ndarray, positions) -> float:
    """Enumerate (k, y, estimate) triples with the lowest-index MAP estimator."""
    probs = np.asarray(probs, dtype=float)
    n_keys, n_side = probs.shape
    width = 1 << len(positions)
    total = 0.0
    for y in range(n_side):
        post = [0.0] * width
        for k in range(n_keys):
            post[_bits_of(k, positions)] += probs[k, y]
        best = 0
        for v in range(width):
            if post[v] > post[best]:
                best = v
        for k in range(n_keys):
            v = _bits_of(k, positions)
            errors = sum(((v >> i) & 1) != ((best >> i) & 1) for i in range(len(positions)))
            total += probs[k, y] * errors
    return total / len(positions)


def jacobi_eigenvalues_symmetric(a: np.ndarray, tol: float = 1e-13, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, (a ** 2).sum() - (np.diag(a) ** 2).sum()))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def jacobi_eigenvalues_hermitian(h: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix via its real symmetric embedding.

    ``[[Re, -Im], [Im, Re]]`` has every eigenvalue of ``h`` twice.
    """
    h = np.asarray(h, dtype=complex)
    emb = np.block([[h.real, -h.imag], [h.imag, h.real]])
    return jacobi_eigenvalues_symmetric(emb)[::2]


def jacobi_trace_norm(h: np.ndarray) -> float:
    return float(np.abs(jacobi_eigenvalues_hermitian(h)).sum())


def _bloch(rho: np.ndarray) -> np.ndarray:
    return np.array([2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real])


def grid_search_helstrom(p0: float, rho0: np.ndarray, p1: float, rho1: np.ndarray,
                         coarse: int = 181, resolution: float = 1e-4, refine: int = 20) -> float:
    """Best success probability over projective qubit measurements.

    The rank-one projector ``(1 + n.sigma)/2`` is swept over Bloch directions
    ``n`` on a coarse grid, then on successively finer local grids down to
    ``resolution`` radians. Success is ``p0 tr(P rho0) + p1 tr((1-P) rho1)``.
    The trivial measurements (always guess 0 / always guess 1) are included.
    """
    r0 = _bloch(np.asarray(rho0, dtype=complex))
    r1 = _bloch(np.asarray(rho1, dtype=complex))

    def evaluate(th, ph):
        tt, pp = np.meshgrid(th, ph, indexing="ij")
        n = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], axis=-1)
        vals = p0 * 0.5 * (1 + n @ r0) + p1 * 0.5 * (1 - n @ r1)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        return float(vals[i, j]), th[i], ph[j]

    step = math.pi / (coarse - 1)
    best, t0, f0 = evaluate(np.linspace(0.0, math.pi, coarse),
                            np.linspace(0.0, 2 * math.pi, 2 * coarse - 1))
    while step > resolution:
        step = max(resolution, step / refine)
        offsets = step * np.arange(-refine, refine + 1)
        val, t0, f0 = evaluate(t0 + offsets, f0 + offsets)
        best = max(best, val)
    return max(best, p0, p1)
