"""Guarantees implied by a trace-distance criterion ``d <= eps``.

Averaged guessing bounds for the whole key, for key subsets and under a
known-plaintext split; the Fano-based and the packaged bit-error-rate
guarantees; and reports for named case studies.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .errors import DomainError
from .probtools import binary_entropy_inverse, markov_individual_bound

LOG2_E = math.log2(math.e)

CSV_COLUMNS = (
    "n", "d", "markov_applications", "avg_whole_key_bound", "avg_subset_bound_1",
    "kpa_bound_1", "individual_excess", "individual_failure_prob",
    "ber_epsilon_prime", "ber_lower", "effective_protected_bits",
)


def _check_d(d: float) -> None:
    if not 0.0 <= d <= 1.0:
        raise DomainError(f"criterion value must lie in [0, 1], got {d!r}")


def _check_bits(n: int) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"bit count must be a positive integer, got {n!r}")


def eq6_bound(n: int, d: float) -> float:
    """Averaged whole-key guessing bound ``2**-n + d``."""
    _check_bits(n)
    _check_d(d)
    return math.ldexp(1.0, -int(n)) + d


def subset_bound(subset_bits: int, d: float) -> float:
    """Averaged bound ``2**-|K*| + d`` for any fixed subset of key bits."""
    return eq6_bound(subset_bits, d)


def eq7_bound(target_bits: int, d: float) -> float:
    """Bound ``2**-|K2*| + d`` on guessing K2* averaged over the known segment."""
    return eq6_bound(target_bits, d)


def ber_bound_from_fano(n: int, key_entropy: float, i_ac: float) -> float:
    """Smallest bit error rate consistent with ``n H(p_b) >= H(K) - I_ac``."""
    _check_bits(n)
    if not 0.0 <= i_ac <= key_entropy <= n:
        raise DomainError(
            f"need 0 <= I_ac <= H(K) <= n, got I_ac={i_ac!r}, H(K)={key_entropy!r}, n={n!r}")
    return binary_entropy_inverse(min(1.0, (key_entropy - i_ac) / n))


def ber_epsilon_prime_from_d(d: float) -> float:
    """Deviation ``d**(1/4) / (2 sqrt(log2 e))`` below 1/2 of the guaranteed bit error rate."""
    if not 0.0 <= d < 1.0:
        raise DomainError(f"criterion value must lie in [0, 1), got {d!r}")
    return d ** 0.25 / (2.0 * math.sqrt(LOG2_E))


@dataclass(frozen=True)
class SecurityReport:
    n: int
    d: float
    markov_applications: int
    avg_whole_key_bound: float
    avg_subset_bound: dict[int, float]
    kpa_bound: dict[int, float]
    individual_bound_after_markov: tuple[float, float]
    ber_epsilon_prime: float
    ber_lower: float
    effective_protected_bits: float
    label: str = "custom"
    quoted: dict[str, float] = field(default_factory=dict)

    @property
    def individual_whole_key_bound(self) -> float:
        return math.ldexp(1.0, -self.n) + self.individual_bound_after_markov[0]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["avg_subset_bound"] = {str(k): v for k, v in self.avg_subset_bound.items()}
        out["kpa_bound"] = {str(k): v for k, v in self.kpa_bound.items()}
        out["individual_bound_after_markov"] = {
            "excess": self.individual_bound_after_markov[0],
            "failure_prob": self.individual_bound_after_markov[1],
        }
        out["individual_whole_key_bound"] = self.individual_whole_key_bound
        return out

    def csv_row(self) -> dict:
        excess, fail = self.individual_bound_after_markov
        return {
            "n": self.n, "d": self.d, "markov_applications": self.markov_applications,
            "avg_whole_key_bound": self.avg_whole_key_bound,
            "avg_subset_bound_1": self.avg_subset_bound.get(1, subset_bound(1, self.d)),
            "kpa_bound_1": self.kpa_bound.get(1, eq7_bound(1, self.d)),
            "individual_excess": excess, "individual_failure_prob": fail,
            "ber_epsilon_prime": self.ber_epsilon_prime, "ber_lower": self.ber_lower,
            "effective_protected_bits": self.effective_protected_bits,
        }


@dataclass(frozen=True)
class Preset:
    n: int
    d: float | None = None
    avg_guess: float | None = None
    markov_applications: int = 2
    quoted: dict[str, float] = field(default_factory=dict)
    note: str = ""


PRESETS: dict[str, Preset] = {
    "finite-key-bb84": Preset(
        n=100_000, d=1e-9,
        quoted={"individual_guarantee": 1e-3, "protected_bits": 10.0, "ber": 0.49,
                "extra_known_bits": 1000.0, "key_length_in_prose": 10_000.0},
        note="single-photon BB84 finite-key analysis at 5% QBER, block length ~1e5; "
             "the same passage also speaks of a 10,000 bit key"),
    "nec-decoy": Preset(
        n=4000, avg_guess=1e-6,
        quoted={"individual_guarantee": 1e-2, "ber": 0.4},
        note="decoy-state system with averaged whole-key guessing probability ~1e-6"),
}


def _default_sizes(n: int) -> list[int]:
    return sorted({s for s in (1, 8, 64, n) if s <= n})


def security_report(n: int, d: float, markov_applications: int = 2,
                    sizes=None, label: str = "custom", quoted=None) -> SecurityReport:
    """Evaluate every guarantee for an ``n``-bit key with criterion ``d``."""
    _check_bits(n)
    _check_d(d)
    sizes = _default_sizes(n) if sizes is None else sorted(set(sizes))
    if d > 0:
        excess, fail = markov_individual_bound(min(d, 1 - 1e-16), markov_applications)
    else:
        excess, fail = 0.0, 0.0
    individual = math.ldexp(1.0, -n) + excess
    eps_prime = ber_epsilon_prime_from_d(d) if d < 1 else 0.5
    return SecurityReport(
        n=n, d=d, markov_applications=markov_applications,
        avg_whole_key_bound=eq6_bound(n, d),
        avg_subset_bound={s: subset_bound(s, d) for s in sizes},
        kpa_bound={s: eq7_bound(s, d) for s in sizes},
        individual_bound_after_markov=(excess, fail),
        ber_epsilon_prime=eps_prime,
        ber_lower=max(0.0, 0.5 - eps_prime),
        effective_protected_bits=-math.log2(min(1.0, individual)),
        label=label, quoted=dict(quoted or {}),
    )


def d_from_avg_guess(n: int, avg_guess: float) -> float:
    """Excess of an averaged whole-key guessing probability over ``2**-n``."""
    return max(0.0, avg_guess - math.ldexp(1.0, -n))


def case_study_report(preset: str | None = None, *, n: int | None = None, d: float | None = None,
                      avg_guess: float | None = None, markov_applications: int | None = None,
                      sizes=None) -> SecurityReport:
    """Report for a named preset or for explicit ``(n, d)`` / ``(n, avg_guess)``.

    When only an averaged guessing probability is known, its excess over
    ``2**-n`` is used as the criterion value before the Markov conversion.
    """
    if preset is not None:
        if preset not in PRESETS:
            raise DomainError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        p = PRESETS[preset]
        n, d, avg_guess = p.n, p.d, p.avg_guess
        m = p.markov_applications if markov_applications is None else markov_applications
        quoted, label = p.quoted, preset
    else:
        if n is None or (d is None) == (avg_guess is None):
            raise DomainError("give n and exactly one of d / avg_guess")
        m = 2 if markov_applications is None else markov_applications
        quoted, label = {}, "custom"
    if d is None:
        d = d_from_avg_guess(n, avg_guess)
    return security_report(n, d, m, sizes=sizes, label=label, quoted=quoted)
