"""Toy single-photon BB84 with intercept-resend eavesdropping, analysed exactly.

Qubit states are real: bit ``b`` in basis ``a`` (0 = Z, 1 = X) is the state
at angle ``a*pi/4 + b*pi/2``. Eve measures an intercepted qubit in a basis at
angle ``phi`` (0, pi/4 or the Breidbart angle pi/8), reads outcome ``o`` as
her guess of the bit and resends the state at ``phi + o*pi/2``.

Error correction is idealised: Bob ends up with Alice's sifted key, and the
leakage is modelled as random GF(2) parities of that key disclosed to Eve.
Privacy amplification is a Toeplitz hash.

Eve's view is classical. Given the public transcript, Alice's remaining
sifted bits are uniform, so the joint law of (final key, Eve's view) is
obtained exactly by enumerating them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .adversary import KpaSplit, SubsetSpec, kpa_guess, optimal_guess_subset, optimal_guess_whole
from .bounds import eq6_bound, eq7_bound, subset_bound
from .errors import CapacityError, DomainError, ValidationError
from .probtools import JointDistribution, binary_entropy, classical_criterion

STRATEGIES = ("random-bb84-basis", "fixed-basis", "breidbart")
EXACT_MAX_QUBITS = 24
EXACT_MAX_ENUM_BITS = 24
BOUND_TOL = 1e-10
BREIDBART_ANGLE = math.pi / 8


@dataclass(frozen=True)
class ProtocolConfig:
    m_qubits: int = 16
    intercept_fraction: float = 0.0
    eve_basis_strategy: str = "random-bb84-basis"
    qber_sample_fraction: float = 0.25
    qber_abort_threshold: float = 0.5
    ec_efficiency: float = 1.16
    final_key_bits: int = 2
    rng_seed: int = 0
    pa_margin: int = 0

    def __post_init__(self):
        if self.m_qubits < 1:
            raise ValidationError("m_qubits must be positive")
        if not 0.0 <= self.intercept_fraction <= 1.0:
            raise ValidationError("intercept_fraction must lie in [0, 1]")
        if self.eve_basis_strategy not in STRATEGIES:
            raise ValidationError(f"unknown Eve strategy {self.eve_basis_strategy!r}; choose from {STRATEGIES}")
        if not 0.0 < self.qber_sample_fraction < 1.0:
            raise ValidationError("qber_sample_fraction must lie in (0, 1)")
        if not 0.0 < self.qber_abort_threshold < 1.0:
            raise ValidationError("qber_abort_threshold must lie in (0, 1)")
        if self.ec_efficiency < 1.0:
            raise ValidationError("ec_efficiency must be >= 1")
        if self.final_key_bits < 1:
            raise ValidationError("final_key_bits must be >= 1")
        if self.pa_margin < 0:
            raise ValidationError("pa_margin must be >= 0")


@dataclass(frozen=True)
class Abort:
    """Protocol run that stopped before producing a key."""

    reason: str
    qber_estimate: float | None = None

    def to_dict(self) -> dict:
        return {"status": "abort", "reason": self.reason, "qber_estimate": self.qber_estimate}


@dataclass(frozen=True)
class ProtocolTranscript:
    config: ProtocolConfig
    alice_bits: np.ndarray
    alice_bases: np.ndarray
    bob_bases: np.ndarray
    bob_bits: np.ndarray
    eve_intercept_mask: np.ndarray
    eve_bases: np.ndarray  # measurement angle in units of pi/8: 0 (Z), 2 (X), 1 (Breidbart)
    eve_outcomes: np.ndarray
    sift_mask: np.ndarray
    sample_positions: np.ndarray
    key_positions: np.ndarray
    qber_estimate: float
    ec_leak_bits: int
    parity_rows: np.ndarray
    toeplitz_seed: np.ndarray
    final_key: int
    secure_length_ok: bool
    eve_view: np.ndarray | None = field(default=None)

    @property
    def sifted_key_length(self) -> int:
        return int(self.key_positions.size)

    def to_dict(self) -> dict:
        def bits(a):
            return "".join(str(int(v)) for v in a)
        return {
            "status": "ok",
            "alice_bits": bits(self.alice_bits),
            "alice_bases": bits(self.alice_bases),
            "bob_bases": bits(self.bob_bases),
            "bob_bits": bits(self.bob_bits),
            "eve_intercept_mask": bits(self.eve_intercept_mask),
            "eve_bases": bits(self.eve_bases),
            "eve_outcomes": bits(self.eve_outcomes),
            "sift_mask": bits(self.sift_mask),
            "sample_positions": [int(i) for i in self.sample_positions],
            "key_positions": [int(i) for i in self.key_positions],
            "qber_estimate": self.qber_estimate,
            "ec_leak_bits": self.ec_leak_bits,
            "parity_rows": [bits(r) for r in self.parity_rows],
            "toeplitz_seed": bits(self.toeplitz_seed),
            "final_key": format(self.final_key, f"0{self.config.final_key_bits}b"),
            "secure_length_ok": self.secure_length_ok,
            "eve_view": None if self.eve_view is None else [float(v) for v in self.eve_view],
        }


def bits_to_int(bits) -> int:
    """Pack a bit vector, element ``i`` carrying weight ``2**i``."""
    return int(sum(int(b) << i for i, b in enumerate(bits)))


def toeplitz_matrix(seed, in_bits: int, out_bits: int) -> np.ndarray:
    """``T[j, i] = seed[j - i + in_bits - 1]``."""
    seed = np.asarray(seed, dtype=np.uint8)
    if seed.size != in_bits + out_bits - 1:
        raise DomainError(f"seed length {seed.size} != {in_bits} + {out_bits} - 1")
    j = np.arange(out_bits)[:, None]
    i = np.arange(in_bits)[None, :]
    return seed[j - i + in_bits - 1]


def toeplitz_hash(data, seed, out_bits: int) -> np.ndarray:
    """GF(2) product of the Toeplitz matrix built from ``seed`` with ``data``."""
    data = np.asarray(data, dtype=np.uint8)
    t = toeplitz_matrix(seed, data.size, out_bits)
    return (t.astype(np.int64) @ data.astype(np.int64)) % 2


def gf2_rank(rows) -> int:
    """Rank over GF(2) of a 0/1 matrix."""
    basis: list[int] = []
    for r in np.asarray(rows, dtype=np.uint8):
        v = bits_to_int(r)
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
    return len(basis)


def ec_leak_model(sifted_len: int, qber: float, efficiency: float) -> int:
    """``ceil(f * s * H(qber))`` bits disclosed by error correction."""
    if not 0.0 <= qber < 0.5:
        raise DomainError(f"qber must lie in [0, 1/2), got {qber!r}")
    if efficiency < 1.0:
        raise DomainError(f"efficiency must be >= 1, got {efficiency!r}")
    if sifted_len < 0:
        raise DomainError("negative sifted length")
    return int(math.ceil(efficiency * sifted_len * binary_entropy(qber) - 1e-9))


def _snap(p: np.ndarray) -> np.ndarray:
    # cos^2 at multiples of pi/4 should be exactly 0, 1/2 or 1
    out = np.asarray(p, dtype=float).copy()
    for v in (0.0, 0.5, 1.0):
        out[np.abs(out - v) < 1e-12] = v
    return out


def _cos2(x) -> np.ndarray:
    return _snap(np.cos(x) ** 2)


def eve_correct_probability(alice_basis, eve_basis) -> np.ndarray:
    """Probability that Eve's outcome equals Alice's bit (angles as stored in transcripts)."""
    return _cos2(np.asarray(alice_basis) * math.pi / 4 - np.asarray(eve_basis) * math.pi / 8)


def run_protocol(cfg: ProtocolConfig, with_eve_view: bool = True):
    """Execute one seeded run; returns a :class:`ProtocolTranscript` or :class:`Abort`."""
    rng = np.random.default_rng(cfg.rng_seed)
    m = cfg.m_qubits
    alice_bits = rng.integers(0, 2, m).astype(np.uint8)
    alice_bases = rng.integers(0, 2, m).astype(np.uint8)
    bob_bases = rng.integers(0, 2, m).astype(np.uint8)
    intercept = rng.random(m) < cfg.intercept_fraction
    eve_coin = rng.integers(0, 2, m).astype(np.uint8)
    u_eve = rng.random(m)
    u_bob = rng.random(m)

    if cfg.eve_basis_strategy == "fixed-basis":
        eve_bases = np.zeros(m, dtype=np.uint8)
    elif cfg.eve_basis_strategy == "breidbart":
        eve_bases = np.ones(m, dtype=np.uint8)
    else:
        eve_bases = (2 * eve_coin).astype(np.uint8)
    eve_bases = np.where(intercept, eve_bases, 0).astype(np.uint8)

    state = alice_bases * math.pi / 4 + alice_bits * math.pi / 2
    phi = eve_bases * math.pi / 8
    eve_out = (u_eve >= _cos2(state - phi)).astype(np.uint8)
    eve_out = np.where(intercept, eve_out, 0).astype(np.uint8)
    arriving = np.where(intercept, phi + eve_out * math.pi / 2, state)
    bob_bits = (u_bob >= _cos2(arriving - bob_bases * math.pi / 4)).astype(np.uint8)

    sift = alice_bases == bob_bases
    sifted = np.flatnonzero(sift)
    if sifted.size < 2:
        return Abort("too few sifted positions")
    n_sample = min(sifted.size - 1, max(1, int(round(cfg.qber_sample_fraction * sifted.size))))
    sample = np.sort(rng.choice(sifted, size=n_sample, replace=False))
    key_pos = np.setdiff1d(sifted, sample)
    qber = float(np.mean(alice_bits[sample] != bob_bits[sample]))
    if qber > cfg.qber_abort_threshold:
        return Abort("qber above threshold", qber)

    s = key_pos.size
    ell = cfg.final_key_bits
    if ell > s:
        return Abort(f"final key length {ell} exceeds sifted key length {s}", qber)
    if qber < 0.5:
        leak = ec_leak_model(s, qber, cfg.ec_efficiency)
    else:
        leak = int(math.ceil(cfg.ec_efficiency * s - 1e-9))
    n_par = min(leak, s)
    parity_rows = rng.integers(0, 2, (n_par, s)).astype(np.uint8)
    seed = rng.integers(0, 2, s + ell - 1).astype(np.uint8)
    for _ in range(64):
        if gf2_rank(toeplitz_matrix(seed, s, ell)) == ell:
            break
        seed = rng.integers(0, 2, s + ell - 1).astype(np.uint8)
    key_bits = alice_bits[key_pos]
    final_key = bits_to_int(toeplitz_hash(key_bits, seed, ell))

    transcript = ProtocolTranscript(
        config=cfg, alice_bits=alice_bits, alice_bases=alice_bases, bob_bases=bob_bases,
        bob_bits=bob_bits, eve_intercept_mask=intercept.astype(np.uint8), eve_bases=eve_bases,
        eve_outcomes=eve_out, sift_mask=sift.astype(np.uint8), sample_positions=sample,
        key_positions=key_pos, qber_estimate=qber, ec_leak_bits=leak, parity_rows=parity_rows,
        toeplitz_seed=seed, final_key=final_key,
        secure_length_ok=ell <= s - leak - cfg.pa_margin,
    )
    if with_eve_view and m <= EXACT_MAX_QUBITS and _enumeration_bits(transcript) <= EXACT_MAX_ENUM_BITS:
        joint, labels, realised = _enumerate(transcript)
        col = joint[:, int(np.searchsorted(labels, realised))]
        transcript = replace(transcript, eve_view=col / col.sum())
    return transcript


def _channel_split(t: ProtocolTranscript):
    """Classify key positions by what Eve's outcome reveals.

    Returns ``(exact, flipped, noisy, noisy_c)``: indices into the sifted key
    where the outcome equals the bit, equals its complement, or agrees with
    probability ``noisy_c``. Positions where the outcome is independent of the
    bit are dropped, as they carry no information.
    """
    kp = t.key_positions
    hit = t.eve_intercept_mask[kp].astype(bool)
    c = eve_correct_probability(t.alice_bases[kp], t.eve_bases[kp])
    idx = np.arange(kp.size)
    exact = idx[hit & (c == 1.0)]
    flipped = idx[hit & (c == 0.0)]
    noisy_mask = hit & (c != 1.0) & (c != 0.0) & (c != 0.5)
    return exact, flipped, idx[noisy_mask], c[noisy_mask]


def _enumeration_bits(t: ProtocolTranscript) -> int:
    _, _, noisy, _ = _channel_split(t)
    return t.sifted_key_length + noisy.size


def _row_masks(rows) -> np.ndarray:
    return np.array([bits_to_int(r) for r in rows], dtype=np.uint64)


def _parity(xs: np.ndarray, mask) -> np.ndarray:
    return (np.bitwise_count(xs & np.uint64(mask)) & 1).astype(np.uint64)


def _enumerate(t: ProtocolTranscript):
    """Exact ``p(final key, Eve's view)``.

    Eve's view is packed as ``revealed bits | noisy outcomes | parities``;
    returns the ``(2**l, #views)`` matrix, the sorted view labels, and the
    label Eve actually observed.
    """
    s = t.sifted_key_length
    ell = t.config.final_key_bits
    exact, flipped, noisy, noisy_c = _channel_split(t)
    revealed = np.concatenate([exact, flipped])
    flip_revealed = np.concatenate([np.zeros(exact.size, np.uint64), np.ones(flipped.size, np.uint64)])
    n_rev, n_noisy = revealed.size, noisy.size

    xs = np.arange(1 << s, dtype=np.uint64)
    keys = np.zeros_like(xs)
    for j, mask in enumerate(_row_masks(toeplitz_matrix(t.toeplitz_seed, s, ell))):
        keys |= _parity(xs, mask) << np.uint64(j)
    view = np.zeros_like(xs)
    for a, (pos, fl) in enumerate(zip(revealed, flip_revealed)):
        view |= (((xs >> np.uint64(pos)) & np.uint64(1)) ^ fl) << np.uint64(a)
    shift = n_rev + n_noisy
    for r, mask in enumerate(_row_masks(t.parity_rows)):
        view |= _parity(xs, mask) << np.uint64(shift + r)
    noisy_bits = np.zeros_like(xs)
    for b, pos in enumerate(noisy):
        noisy_bits |= ((xs >> np.uint64(pos)) & np.uint64(1)) << np.uint64(b)

    all_keys, all_views, all_w = [], [], []
    base = 1.0 / (1 << s)
    for f in range(1 << n_noisy):
        w = base
        for b in range(n_noisy):
            w *= (1.0 - noisy_c[b]) if (f >> b) & 1 else noisy_c[b]
        if w == 0.0:
            continue
        all_keys.append(keys)
        all_views.append(view | ((noisy_bits ^ np.uint64(f)) << np.uint64(n_rev)))
        all_w.append(np.full(xs.size, w))
    keys_c = np.concatenate(all_keys)
    views_c = np.concatenate(all_views)
    labels, inverse = np.unique(views_c, return_inverse=True)
    flat = np.bincount(inverse.astype(np.int64) * (1 << ell) + keys_c.astype(np.int64),
                       weights=np.concatenate(all_w), minlength=labels.size << ell)
    joint = flat.reshape(labels.size, 1 << ell).T
    joint = joint / joint.sum()

    # Eve's realised view
    kp = t.key_positions
    x_real = bits_to_int(t.alice_bits[kp])
    eve_real = t.eve_outcomes[kp]
    real = 0
    for a, pos in enumerate(revealed):
        real |= int(eve_real[pos]) << a
    for b, pos in enumerate(noisy):
        real |= int(eve_real[pos]) << (n_rev + b)
    for r, row in enumerate(t.parity_rows):
        real |= (bin(x_real & bits_to_int(row)).count("1") & 1) << (shift + r)
    return joint, labels, np.uint64(real)


def exact_joint(cfg: ProtocolConfig, transcript: ProtocolTranscript) -> JointDistribution:
    """Exact joint law of the final key and Eve's view given the public transcript."""
    if cfg.m_qubits > EXACT_MAX_QUBITS:
        raise CapacityError(
            f"exact mode is capped at {EXACT_MAX_QUBITS} qubits, got {cfg.m_qubits}",
            cap=EXACT_MAX_QUBITS)
    bits = _enumeration_bits(transcript)
    if bits > EXACT_MAX_ENUM_BITS:
        raise CapacityError(
            f"exact enumeration needs 2**{bits} states, cap is 2**{EXACT_MAX_ENUM_BITS}",
            cap=EXACT_MAX_ENUM_BITS)
    joint, _, _ = _enumerate(transcript)
    return JointDistribution(joint, cfg.final_key_bits)


def _subsets(n: int):
    for mask in range(1, 1 << n):
        yield tuple(i for i in range(n) if (mask >> i) & 1)


def kpa_splits(n: int, rng: np.random.Generator | None = None, exhaustive_up_to: int = 4,
               samples: int = 32) -> list[KpaSplit]:
    """Known/target splits to check on an ``n``-bit key.

    Every disjoint pair of non-empty sets for ``n <= exhaustive_up_to``;
    otherwise each single-bit target against all other bits, the low/high
    halves, and ``samples`` random splits.
    """
    if n < 2:
        return []
    if n <= exhaustive_up_to:
        out = []
        for known in _subsets(n):
            rest = [i for i in range(n) if i not in known]
            for tmask in range(1, 1 << len(rest)):
                target = tuple(rest[i] for i in range(len(rest)) if (tmask >> i) & 1)
                out.append(KpaSplit(SubsetSpec(known), SubsetSpec(target)))
        return out
    out = [KpaSplit(SubsetSpec(tuple(i for i in range(n) if i != b)), SubsetSpec((b,)))
           for b in range(n)]
    out.append(KpaSplit(SubsetSpec(tuple(range(n // 2))), SubsetSpec(tuple(range(n // 2, n)))))
    rng = rng or np.random.default_rng(0)
    for _ in range(samples):
        labels = rng.integers(0, 3, n)
        if not (labels == 1).any():
            labels[rng.integers(n)] = 1
        if not (labels == 2).any():
            choices = np.flatnonzero(labels != 1)
            labels[choices[0] if choices.size else 0] = 2
        if not (labels == 1).any():
            continue
        out.append(KpaSplit(SubsetSpec(tuple(np.flatnonzero(labels == 1).tolist())),
                            SubsetSpec(tuple(np.flatnonzero(labels == 2).tolist()))))
    return out


def bound_checks(joint: JointDistribution, tol: float = BOUND_TOL) -> dict:
    """Evaluate the averaged whole-key, subset and known-plaintext bounds on ``joint``."""
    n = joint.key_bits
    d = classical_criterion(joint)
    p1 = optimal_guess_whole(joint)
    eq6_rhs = eq6_bound(n, min(1.0, d))
    eq1_slack = min(subset_bound(len(s), min(1.0, d)) - optimal_guess_subset(joint, s)
                    for s in _subsets(n))
    splits = kpa_splits(n)
    eq7_slack = min((eq7_bound(len(sp.target), min(1.0, d)) - kpa_guess(joint, sp) for sp in splits),
                    default=float("inf"))
    row = {"d": d, "p1": p1, "eq6_rhs": eq6_rhs, "eq6_slack": eq6_rhs - p1,
           "eq1_min_slack": eq1_slack, "eq7_min_slack": eq7_slack, "kpa_splits": len(splits)}
    if n >= 2:
        canon = KpaSplit(SubsetSpec(tuple(range(n // 2))), SubsetSpec(tuple(range(n // 2, n))))
        row["kpa_guess"] = kpa_guess(joint, canon)
        row["eq7_rhs"] = eq7_bound(len(canon.target), min(1.0, d))
    else:
        row["kpa_guess"] = None
        row["eq7_rhs"] = None
    row["eq6_ok"] = row["eq6_slack"] >= -tol
    row["eq1_ok"] = eq1_slack >= -tol
    row["eq7_ok"] = eq7_slack >= -tol
    return row


SWEEP_COLUMNS = ("q", "l", "status", "qber", "sifted", "leak", "d", "p1", "eq6_rhs",
                 "eq6_slack", "eq1_min_slack", "kpa_guess", "eq7_rhs", "eq7_min_slack",
                 "eq6_ok", "eq1_ok", "eq7_ok")


def exact_row(cfg: ProtocolConfig) -> dict:
    """Run one configuration in exact mode and check the bounds on its joint."""
    row = {"q": cfg.intercept_fraction, "l": cfg.final_key_bits}
    outcome = run_protocol(cfg, with_eve_view=False)
    if isinstance(outcome, Abort):
        row.update(status=f"abort: {outcome.reason}", qber=outcome.qber_estimate)
        return row
    row.update(status="ok", qber=outcome.qber_estimate, sifted=outcome.sifted_key_length,
               leak=outcome.ec_leak_bits)
    try:
        joint = exact_joint(cfg, outcome)
    except CapacityError as exc:
        row["status"] = f"capacity: {exc}"
        return row
    row.update(bound_checks(joint))
    return row


def sweep_and_check(cfg: ProtocolConfig, q_values, l_values) -> list[dict]:
    """Exact rows over the grid, in row-major ``(q, l)`` order, all sharing ``cfg.rng_seed``.

    Sharing the seed fixes the bases and Alice's bits across the grid; Eve's
    intercept set grows monotonically with ``q``.
    """
    rows = []
    for q in q_values:
        for ell in l_values:
            rows.append(exact_row(replace(cfg, intercept_fraction=float(q), final_key_bits=int(ell))))
    return rows
