"""Randomised property suites behind ``qkdbounds verify``.

Each suite draws its own instances from a generator seeded by
``(seed, suite index)``, so a suite's outcome does not depend on which other
suites run. A suite reports its worst instance as one :class:`Check`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import adversary, oracles, quantstates
from .bounds import eq6_bound, eq7_bound, subset_bound
from .probtools import classical_criterion, markov_individual_bound, random_joint

BOUND_TOL = 1e-10


@dataclass(frozen=True)
class Check:
    """``lhs relation rhs`` up to ``tolerance``; relation is ``"<="`` or ``"=="``."""

    name: str
    passed: bool
    lhs: float
    rhs: float
    tolerance: float
    relation: str = "<="
    trials: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


def check_le(name, lhs, rhs, tol, trials=1) -> Check:
    return Check(name, bool(lhs <= rhs + tol), float(lhs), float(rhs), tol, "<=", trials)


def check_eq(name, lhs, rhs, tol, trials=1) -> Check:
    return Check(name, bool(abs(lhs - rhs) <= tol), float(lhs), float(rhs), tol, "==", trials)


def _worst_le(name, pairs, tol, fault=0.0) -> Check:
    """Worst slack over ``(lhs, rhs)`` pairs; ``fault`` is subtracted from every rhs."""
    pairs = [(lhs, rhs - fault) for lhs, rhs in pairs]
    lhs, rhs = min(pairs, key=lambda p: p[1] - p[0])
    return check_le(name, lhs, rhs, tol, trials=len(pairs))


def _worst_eq(name, pairs, tol, fault=0.0) -> Check:
    pairs = [(lhs, rhs + fault) for lhs, rhs in pairs]
    lhs, rhs = max(pairs, key=lambda p: abs(p[1] - p[0]))
    return check_eq(name, lhs, rhs, tol, trials=len(pairs))


def _random_positions(rng, n, size=None):
    size = int(rng.integers(1, n + 1)) if size is None else size
    return tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))


def _random_split(rng, n) -> adversary.KpaSplit:
    perm = rng.permutation(n).tolist()
    a = int(rng.integers(1, n))
    b = int(rng.integers(1, n - a + 1))
    return adversary.KpaSplit(adversary.SubsetSpec(tuple(sorted(perm[:a]))),
                              adversary.SubsetSpec(tuple(sorted(perm[a:a + b]))))


def suite_eq6(rng, trials, fault=0.0, max_bits=4, max_side=32):
    pairs = []
    for _ in range(trials):
        j = random_joint(rng, int(rng.integers(1, max_bits + 1)), int(rng.integers(1, max_side + 1)))
        pairs.append((adversary.optimal_guess_whole(j), eq6_bound(j.key_bits, classical_criterion(j))))
    return [_worst_le("eq6: whole-key guess <= 2^-n + d", pairs, BOUND_TOL, fault)]


def suite_eq1(rng, trials, fault=0.0, max_bits=4, max_side=32):
    pairs = []
    for _ in range(trials):
        j = random_joint(rng, int(rng.integers(1, max_bits + 1)), int(rng.integers(1, max_side + 1)))
        pos = _random_positions(rng, j.key_bits)
        pairs.append((adversary.optimal_guess_subset(j, pos), subset_bound(len(pos), classical_criterion(j))))
    return [_worst_le("eq1: subset guess <= 2^-|K*| + d", pairs, BOUND_TOL, fault)]


def suite_eq7(rng, trials, fault=0.0, max_bits=4, max_side=32):
    pairs = []
    for _ in range(trials):
        j = random_joint(rng, int(rng.integers(2, max_bits + 1)), int(rng.integers(1, max_side + 1)))
        split = _random_split(rng, j.key_bits)
        pairs.append((adversary.kpa_guess(j, split), eq7_bound(len(split.target), classical_criterion(j))))
    return [_worst_le("eq7: known-plaintext guess <= 2^-|K2*| + d", pairs, BOUND_TOL, fault)]


def suite_posterior(rng, trials, fault=0.0, max_bits=4, max_side=32):
    pairs = []
    for _ in range(trials):
        j = random_joint(rng, int(rng.integers(1, max_bits + 1)), int(rng.integers(1, max_side + 1)),
                         uniform_prior=True)
        dec = adversary.posterior_decomposition_check(j, against_uniform=True)
        pairs.append((dec.mean, classical_criterion(j)))
    return [_worst_eq("posterior: sum_y p(y) v(p(.|y), U) == d", pairs, BOUND_TOL, fault)]


def suite_helstrom(rng, trials, fault=0.0):
    pairs = []
    for _ in range(trials):
        r0 = quantstates.random_density(rng, 2, rank=int(rng.integers(1, 3)))
        r1 = quantstates.random_density(rng, 2, rank=int(rng.integers(1, 3)))
        p0 = float(rng.uniform())
        pairs.append((quantstates.helstrom_success(p0, r0, 1 - p0, r1),
                      oracles.grid_search_helstrom(p0, r0, 1 - p0, r1)))
    return [_worst_eq("helstrom: closed form == grid search over projective measurements",
                      pairs, 1e-3, fault)]


def suite_markov(rng, trials, fault=0.0):
    """Empirical Markov step plus monotonicity of the split exponent."""
    pairs = []
    for _ in range(trials):
        support = int(rng.integers(1, 50))
        probs = rng.dirichlet(np.ones(support))
        values = rng.exponential(size=support) * (rng.uniform(size=support) < 0.5)
        eps = float(rng.uniform(1e-6, 0.5))
        mean = float(probs @ values)
        if mean > 0:
            values = values * (eps * rng.uniform(0.1, 1.0) / mean)
        excess, fail = markov_individual_bound(eps, 1)
        pairs.append((float(probs[values >= excess].sum()), fail))
    checks = [_worst_le("markov: Pr[X >= sqrt(eps)] <= sqrt(eps) when E[X] <= eps", pairs, 1e-12, fault)]
    mono = []
    for _ in range(trials):
        eps = float(rng.uniform(1e-9, 0.9))
        m = int(rng.integers(1, 6))
        mono.append((markov_individual_bound(eps, m)[0], markov_individual_bound(eps, m + 1)[0]))
        mono.append((markov_individual_bound(eps, m)[0], markov_individual_bound(min(0.95, eps * 1.05), m)[0]))
    checks.append(_worst_le("markov: excess monotone in eps and in number of averages", mono, 0.0, fault))
    return checks


def suite_trace(rng, trials, fault=0.0):
    pairs = []
    for _ in range(trials):
        state = quantstates.random_cq_state(rng, int(rng.integers(1, 4)), int(rng.integers(1, 5)))
        pairs.append((quantstates.trace_distance_criterion(state),
                      quantstates.trace_distance_criterion_full(state)))
    return [_worst_eq("trace: decomposed d == block-diagonal trace distance", pairs, 1e-9, fault)]


SUITES = {
    "eq1": suite_eq1,
    "eq6": suite_eq6,
    "eq7": suite_eq7,
    "posterior": suite_posterior,
    "helstrom": suite_helstrom,
    "markov": suite_markov,
    "trace": suite_trace,
}


def run_suites(names, trials: int, seed: int, fault_suite: str | None = None) -> list[Check]:
    """Run the named suites (``"all"`` expands to every suite) in a fixed order."""
    if "all" in names:
        names = list(SUITES)
    out: list[Check] = []
    for idx, name in enumerate(SUITES):
        if name not in names:
            continue
        rng = np.random.default_rng([seed, idx])
        fault = 0.5 if fault_suite in (name, "all") else 0.0
        out.extend(SUITES[name](rng, trials, fault))
    return out
