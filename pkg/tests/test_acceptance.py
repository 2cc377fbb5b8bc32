"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the terminal
summary and also to stdout (visible with ``-s``).
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from qkdbounds import adversary, bb84sim, bounds, checks, counterexamples, oracles, quantstates
from qkdbounds.probtools import Distribution, classical_criterion, random_joint, variational_distance

SEED = 20240611


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _cli(*argv):
    return subprocess.run([sys.executable, "-m", "qkdbounds", *argv], capture_output=True)


def _suite(name, trials, seed):
    start = time.perf_counter()
    result = checks.SUITES[name](np.random.default_rng(seed), trials)
    return result, time.perf_counter() - start


def test_01_whole_key_bound():
    (c,), elapsed = _suite("eq6", 1000, SEED + 1)
    ok = c.passed and c.trials == 1000 and c.rhs - c.lhs >= -1e-10 and elapsed < 30
    record(1, "whole-key guess <= 2^-n + d on 1000 joints", ok,
           f"min slack {c.rhs - c.lhs:.3e}, {elapsed:.2f}s")


def test_02_known_plaintext_bound():
    (c,), elapsed = _suite("eq7", 1000, SEED + 2)
    ok = c.passed and c.trials == 1000 and c.rhs - c.lhs >= -1e-10 and elapsed < 60
    record(2, "known-plaintext guess <= 2^-|K2*| + d on 1000 joints", ok,
           f"min slack {c.rhs - c.lhs:.3e}, {elapsed:.2f}s")


def test_03_subset_bound():
    (c,), elapsed = _suite("eq1", 1000, SEED + 3)
    ok = c.passed and c.trials == 1000 and c.rhs - c.lhs >= -1e-10
    record(3, "subset guess <= 2^-|K*| + d on 1000 joints", ok,
           f"min slack {c.rhs - c.lhs:.3e}, {elapsed:.2f}s")


def test_04_brute_force_oracle():
    rng = np.random.default_rng(SEED + 4)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 4))
        j = random_joint(rng, n, int(rng.integers(1, 5)))
        worst = max(worst, abs(adversary.optimal_guess_whole(j) - oracles.brute_guess(j.probs)))
        pos = tuple(sorted(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist()))
        worst = max(worst, abs(adversary.optimal_guess_subset(j, pos) - oracles.brute_guess(j.probs, pos)))
        if n >= 2:
            split = checks._random_split(rng, n)
            worst = max(worst, abs(adversary.kpa_guess(j, split)
                                   - oracles.brute_kpa_guess(j.probs, split.known.positions,
                                                             split.target.positions)))
    record(4, "MAP formulas equal exhaustive search over guessing functions", worst < 1e-12,
           f"max diff {worst:.1e} over 200 joints")


def test_05_half_biased():
    rng = np.random.default_rng(SEED + 5)
    eps_values = np.concatenate([[1e-6, 1e-4, 0.01, 0.1, 0.49], rng.uniform(1e-6, 0.5, 45)])
    worst_v, worst_leak = 0.0, 0.0
    for k, eps in enumerate(eps_values):
        n = 2 * int(rng.integers(1, 600)) if k >= 5 else 1000
        dist = counterexamples.half_biased_build(n, float(eps))
        worst_v = max(worst_v, abs(variational_distance(dist, Distribution.uniform(n)) - eps))
        leak = counterexamples.half_biased_leak_probability(dist)
        worst_leak = max(worst_leak, abs(leak - (1 + 2 * eps) / 2), abs(leak - eps - 0.5))
    ok = worst_v <= 1e-12 and worst_leak <= 1e-12
    record(5, "half-biased: v = eps and leak mass (1+2eps)/2 on 50 pairs", ok,
           f"v err {worst_v:.1e}, leak err {worst_leak:.1e}")


def test_06_kpa_spike():
    spike = counterexamples.kpa_spike_build(4, 2, 0.01, 0.99)
    d = classical_criterion(spike.joint)
    worst = adversary.kpa_guess_worst_case(spike.joint, spike.split)
    avg = adversary.kpa_guess(spike.joint, spike.split)
    rhs = bounds.eq7_bound(2, d)
    ok = d <= 0.01 and worst.prob >= 0.99 and avg <= rhs + 1e-10
    record(6, "known-plaintext spike with d <= 0.01", ok,
           f"d={d:.6g}, worst-case {worst.prob:.6g}, averaged {avg:.4f} <= {rhs:.4f}")


def _sig2(x, target):
    return float(f"{x:.2g}") == float(f"{target:.2g}")


def test_07_case_studies():
    fk = bounds.case_study_report("finite-key-bb84")
    nec = bounds.case_study_report("nec-decoy")
    fk_ind = fk.individual_bound_after_markov[0]
    nec_ind = nec.individual_bound_after_markov[0]
    eps_prime = bounds.ber_epsilon_prime_from_d(1e-9)
    ok = (_sig2(fk_ind, 1e-3) and _sig2(fk.effective_protected_bits, 10)
          and _sig2(nec_ind, 1e-2) and _sig2(eps_prime, 2.3e-3))
    record(7, "case-study arithmetic to 2 significant figures", ok,
           f"{fk_ind:.3g}, {fk.effective_protected_bits:.3g} bits, {nec_ind:.3g}, eps'={eps_prime:.3g}; "
           f"quoted BER {fk.quoted['ber']}/{nec.quoted['ber']}, formula {fk.ber_lower:.4f}/{nec.ber_lower:.4f}")


def test_08_helstrom():
    (c,), elapsed = _suite("helstrom", 100, SEED + 8)
    up, down = quantstates.pure_state([1, 0]), quantstates.pure_state([0, 1])
    rng = np.random.default_rng(SEED + 80)
    exact = all(quantstates.helstrom_success(p, up, 1 - p, down) == 1.0 for p in rng.uniform(size=20))
    record(8, "Helstrom closed form vs grid search on 100 qubit pairs", c.passed and exact,
           f"max diff {abs(c.lhs - c.rhs):.1e} (tol 1e-3), orthogonal case exact={exact}, {elapsed:.2f}s")


def test_09_trace_forms():
    rng = np.random.default_rng(SEED + 9)
    worst = 0.0
    for _ in range(100):
        state = quantstates.random_cq_state(rng, int(rng.integers(1, 4)), int(rng.integers(1, 5)))
        worst = max(worst, abs(quantstates.trace_distance_criterion(state)
                               - quantstates.trace_distance_criterion_full(state)))
    record(9, "block-diagonal trace distance equals decomposed sum", worst <= 1e-9,
           f"max diff {worst:.1e} over 100 states")


def test_10_posterior():
    (c,), _ = _suite("posterior", 200, SEED + 10)
    record(10, "sum_y p(y) v(p(.|y), U) equals d on 200 uniform-prior joints", c.passed,
           f"max diff {abs(c.lhs - c.rhs):.1e}")


def test_11_simulator():
    start = time.perf_counter()
    proc = _cli("simulate", "--m", "16", "--q", "1.0", "--l", "4", "--exact", "--seed", "1")
    elapsed = time.perf_counter() - start
    env = json.loads(proc.stdout)
    rows_ok = proc.returncode == 0 and len(env["checks"]) >= 3 and all(c["passed"] for c in env["checks"])

    cfg = bb84sim.ProtocolConfig(m_qubits=12, intercept_fraction=0.0, final_key_bits=4, rng_seed=0)
    joint = bb84sim.exact_joint(cfg, bb84sim.run_protocol(cfg))
    d0, p0 = classical_criterion(joint), adversary.optimal_guess_whole(joint)
    clean = d0 == 0.0 and p0 == 2.0 ** -4

    mc = bb84sim.ProtocolConfig(m_qubits=42_000, intercept_fraction=1.0, qber_sample_fraction=0.5,
                                qber_abort_threshold=0.9, rng_seed=3)
    t = bb84sim.run_protocol(mc, with_eve_view=False)
    n = t.sample_positions.size
    sigma = math.sqrt(0.25 * 0.75 / n)
    qber_ok = n >= 10_000 and abs(t.qber_estimate - 0.25) <= 3 * sigma
    ok = rows_ok and elapsed < 120 and clean and qber_ok
    record(11, "exact simulator end to end", ok,
           f"{elapsed:.2f}s, row checks {rows_ok}, q=0 d={d0} p1={p0}, "
           f"QBER {t.qber_estimate:.4f} over {n} (3 sigma {3 * sigma:.4f})")


@pytest.mark.parametrize("argv", [
    ("report", "--preset", "finite-key-bb84"),
    ("verify", "--suite", "all", "--trials", "10", "--seed", "3"),
    ("counterexample", "--kind", "kpa-spike", "--bits", "4", "--known", "2", "--eps", "0.01", "--spike", "0.99"),
    ("simulate", "--m", "16", "--q", "1.0", "--l", "4", "--exact", "--seed", "1"),
    ("simulate", "--sweep", "q=0:0.5:1,l=2:2:4", "--m", "14", "--exact", "--format", "csv"),
    ("simulate", "--m", "2000", "--q", "0.5", "--seed", "9"),
])
def test_12_determinism(argv):
    a, b = _cli(*argv), _cli(*argv)
    ok = a.stdout == b.stdout and a.returncode == b.returncode and bool(a.stdout)
    record(12, f"byte-identical repeat: {argv[0]} {' '.join(argv[1:3])}", ok, f"{len(a.stdout)} bytes")
