"""Command-line interface.

Every command prints one JSON envelope (or CSV for tabular payloads)::

    {"command", "version", "seed", "params", "results", "checks"}

Exit codes: 0 success, 1 check failure, 2 usage error, 3 capacity error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__, adversary, bb84sim, bounds, checks, counterexamples
from .errors import CapacityError, DomainError, InfeasibleError, ValidationError
from .probtools import Distribution, classical_criterion, variational_distance

SEED_ENV = "QKDBOUNDS_SEED"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _format_number(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_number(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        cells = []
        for c in columns:
            v = row.get(c)
            if v is None:
                cells.append("")
            elif isinstance(v, (bool, np.bool_)):
                cells.append("true" if v else "false")
            elif isinstance(v, (float, np.floating)):
                cells.append(_format_number(float(v)) if math.isfinite(v) else "")
            else:
                cells.append(str(v))
        writer.writerow(cells)
    return buf.getvalue()


def envelope(command, seed, params, results, check_list) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "params": params,
        "results": results,
        "checks": [c.to_dict() if isinstance(c, checks.Check) else c for c in check_list],
    }


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; dashes and underscores are interchangeable."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _resolve(args, name, default, cast, config):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        try:
            return cast(config[name])
        except ValueError as exc:
            raise UsageError(f"bad config value for {name}: {config[name]!r}") from exc
    return default


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from exc


def parse_range(spec: str) -> list[float]:
    """``start:step:stop`` (inclusive) or a comma-free single value."""
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) != 3:
            raise ValueError
        start, step, stop = map(float, parts)
    except ValueError as exc:
        raise UsageError(f"bad range {spec!r}; expected start:step:stop") from exc
    if step <= 0 or stop < start:
        raise UsageError(f"bad range {spec!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def parse_sweep(spec: str) -> dict[str, list[float]]:
    """``q=0:0.25:1,l=2:2:8`` -> ``{"q": [...], "l": [...]}``."""
    grid = {}
    for item in spec.split(","):
        if "=" not in item:
            raise UsageError(f"bad sweep item {item!r}; expected name=start:step:stop")
        key, rng = item.split("=", 1)
        key = key.strip()
        if key not in ("q", "l"):
            raise UsageError(f"sweep supports q and l, got {key!r}")
        grid[key] = parse_range(rng.strip())
    return grid


# ---------------------------------------------------------------- commands

def cmd_report(args, config):
    preset = _resolve(args, "preset", None, str, config)
    n = _resolve(args, "n", None, int, config)
    d = _resolve(args, "d", None, float, config)
    avg = _resolve(args, "avg_guess", None, float, config)
    m = _resolve(args, "markov", None, int, config)
    try:
        if preset is not None:
            report = bounds.case_study_report(preset, markov_applications=m)
        else:
            if n is None or (d is None) == (avg is None):
                raise UsageError("report needs --preset, or --n with exactly one of --d / --avg-guess")
            report = bounds.case_study_report(n=n, d=d, avg_guess=avg, markov_applications=m)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    results = report.to_dict()
    if preset is not None:
        results["note"] = bounds.PRESETS[preset].note
    excess, _ = report.individual_bound_after_markov
    individual = math.ldexp(1.0, -report.n) + excess
    check_list = [
        checks.check_le("effective protected bits <= n", report.effective_protected_bits, report.n, 0.0),
        checks.check_eq("effective protected bits == -log2(individual whole-key bound)",
                        report.effective_protected_bits, -math.log2(min(1.0, individual)), 0.0),
    ]
    params = {"preset": preset, "n": report.n, "d": report.d, "markov_applications": report.markov_applications}
    return envelope("report", None, params, results, check_list), [report.csv_row()], bounds.CSV_COLUMNS


def cmd_verify(args, config):
    suite = _resolve(args, "suite", "all", str, config)
    trials = _resolve(args, "trials", 100, int, config)
    seed = _resolve(args, "seed", _default_seed(), int, config)
    fault = _resolve(args, "inject_fault", None, str, config)
    valid = set(checks.SUITES) | {"all"}
    if suite not in valid:
        raise UsageError(f"unknown suite {suite!r}; choose from {sorted(valid)}")
    if fault is not None and fault not in valid:
        raise UsageError(f"unknown suite for fault injection {fault!r}")
    if trials < 1:
        raise UsageError("--trials must be positive")
    check_list = checks.run_suites([suite], trials, seed, fault)
    params = {"suite": suite, "trials": trials, "inject_fault": fault}
    results = {"passed": all(c.passed for c in check_list),
               "failed": [c.name for c in check_list if not c.passed]}
    rows = [c.to_dict() for c in check_list]
    return envelope("verify", seed, params, results, check_list), rows, \
        ("name", "passed", "lhs", "rhs", "tolerance", "relation", "trials")


def cmd_counterexample(args, config):
    kind = _resolve(args, "kind", None, str, config)
    eps = _resolve(args, "eps", None, float, config)
    if kind is None or eps is None:
        raise UsageError("counterexample needs --kind and --eps")
    check_list = []
    try:
        if kind == "half-biased":
            n = _resolve(args, "n", None, int, config)
            if n is None:
                raise UsageError("half-biased needs --n")
            dist = counterexamples.half_biased_build(n, eps)
            v = variational_distance(dist, Distribution.uniform(n))
            leak = counterexamples.half_biased_leak_probability(dist)
            results = {"distribution": dist.probs.tolist(), "v_to_uniform": v, "eps": eps,
                       "leak_mass": leak, "leak_minus_eps": leak - eps}
            check_list = [checks.check_eq("v(P, U) == eps", v, eps, 1e-12),
                          checks.check_eq("leak mass == (1 + 2 eps) / 2", leak, (1 + 2 * eps) / 2, 1e-12)]
            params = {"kind": kind, "n": n, "eps": eps}
        elif kind == "kpa-spike":
            bits = _resolve(args, "bits", 4, int, config)
            known = _resolve(args, "known", 2, int, config)
            spike = _resolve(args, "spike", 0.99, float, config)
            averaged = bool(getattr(args, "averaged", False))
            params = {"kind": kind, "bits": bits, "known": known, "eps": eps, "spike": spike,
                      "averaged_over_side_info": averaged}
            try:
                built = counterexamples.kpa_spike_build(bits, known, eps, spike, per_outcome=not averaged)
            except InfeasibleError as exc:
                results = {"infeasible": True, "reason": str(exc), "max_achievable": exc.max_achievable}
                check_list = [checks.check_le("requested spike <= max achievable", spike,
                                              exc.max_achievable, 0.0)]
                return envelope("counterexample", None, params, results, check_list), None, None
            worst = adversary.kpa_guess_worst_case(built.joint, built.split, per_outcome=not averaged)
            avg = adversary.kpa_guess(built.joint, built.split)
            d = classical_criterion(built.joint)
            rhs = bounds.eq7_bound(len(built.split.target), min(1.0, d))
            results = {"joint": built.joint.probs.tolist(), "known_positions": list(built.split.known.positions),
                       "target_positions": list(built.split.target.positions), "d": d,
                       "worst_case": {"known_value": worst.known_value, "side": worst.side,
                                      "prob": worst.prob, "event_prob": worst.event_prob},
                       "averaged_kpa_guess": avg, "eq7_rhs": rhs}
            check_list = [checks.check_le("recomputed d <= eps", d, eps, 0.0),
                          checks.check_le("requested spike <= worst-case conditional guess", spike, worst.prob, 0.0),
                          checks.check_le("averaged known-plaintext guess <= 2^-|K2*| + d", avg, rhs, 1e-10)]
        elif kind == "tightness":
            bits = _resolve(args, "bits", 1, int, config)
            joint = counterexamples.tightness_witness_eq6(bits, eps)
            d = classical_criterion(joint)
            guess = adversary.optimal_guess_whole(joint)
            rhs = bounds.eq6_bound(bits, min(1.0, d))
            results = {"joint": joint.probs.tolist(), "d": d, "whole_key_guess": guess, "eq6_rhs": rhs,
                       "gap": rhs - guess, "constant_c": counterexamples.tightness_constant(bits)}
            check_list = [checks.check_eq("d == eps", d, eps, 1e-9),
                          checks.check_le("whole-key guess <= 2^-n + d", guess, rhs, 1e-10)]
            params = {"kind": kind, "bits": bits, "eps": eps}
        else:
            raise UsageError(f"unknown kind {kind!r}; choose half-biased, kpa-spike or tightness")
    except (DomainError, ValidationError) as exc:
        raise UsageError(str(exc)) from exc
    return envelope("counterexample", None, params, results, check_list), None, None


def _sim_config(args, config) -> bb84sim.ProtocolConfig:
    d = bb84sim.ProtocolConfig()
    try:
        return bb84sim.ProtocolConfig(
            m_qubits=_resolve(args, "m", d.m_qubits, int, config),
            intercept_fraction=_resolve(args, "q", d.intercept_fraction, float, config),
            eve_basis_strategy=_resolve(args, "strategy", d.eve_basis_strategy, str, config),
            qber_sample_fraction=_resolve(args, "sample_fraction", d.qber_sample_fraction, float, config),
            qber_abort_threshold=_resolve(args, "abort_threshold", d.qber_abort_threshold, float, config),
            ec_efficiency=_resolve(args, "ec_efficiency", d.ec_efficiency, float, config),
            final_key_bits=_resolve(args, "l", d.final_key_bits, int, config),
            rng_seed=_resolve(args, "seed", _default_seed(), int, config),
            pa_margin=_resolve(args, "pa_margin", d.pa_margin, int, config),
        )
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc


def _row_checks(row) -> list:
    if row.get("status") != "ok":
        return []
    tag = f"q={row['q']:g},l={row['l']}"
    out = [checks.check_le(f"{tag} eq6: whole-key guess <= 2^-l + d", row["p1"], row["eq6_rhs"], bb84sim.BOUND_TOL),
           checks.check_le(f"{tag} eq1: min subset slack >= 0", -row["eq1_min_slack"], 0.0, bb84sim.BOUND_TOL)]
    if row["kpa_splits"]:
        out.append(checks.check_le(f"{tag} eq7: min known-plaintext slack >= 0",
                                   -row["eq7_min_slack"], 0.0, bb84sim.BOUND_TOL))
    return out


def cmd_simulate(args, config):
    cfg = _sim_config(args, config)
    exact = bool(getattr(args, "exact", False)) or str(config.get("exact", "")).lower() in ("1", "true", "yes")
    sweep = _resolve(args, "sweep", None, str, config)
    params = {k: v for k, v in vars(cfg).items() if k != "rng_seed"}
    params.update(exact=exact, sweep=sweep)
    seed = cfg.rng_seed
    if sweep is not None:
        if not exact:
            raise UsageError("--sweep requires --exact")
        grid = parse_sweep(sweep)
        q_values = grid.get("q", [cfg.intercept_fraction])
        l_values = [int(v) for v in grid.get("l", [cfg.final_key_bits])]
        if cfg.m_qubits > bb84sim.EXACT_MAX_QUBITS:
            raise CapacityError(f"exact mode is capped at {bb84sim.EXACT_MAX_QUBITS} qubits",
                                cap=bb84sim.EXACT_MAX_QUBITS)
        rows = bb84sim.sweep_and_check(cfg, q_values, l_values)
        check_list = [c for r in rows for c in _row_checks(r)]
        results = {"rows": rows, "columns": list(bb84sim.SWEEP_COLUMNS)}
        return envelope("simulate", seed, params, results, check_list), rows, bb84sim.SWEEP_COLUMNS
    if exact:
        if cfg.m_qubits > bb84sim.EXACT_MAX_QUBITS:
            raise CapacityError(f"exact mode is capped at {bb84sim.EXACT_MAX_QUBITS} qubits",
                                cap=bb84sim.EXACT_MAX_QUBITS)
        outcome = bb84sim.run_protocol(cfg)
        if isinstance(outcome, bb84sim.Abort):
            row = {"q": cfg.intercept_fraction, "l": cfg.final_key_bits,
                   "status": f"abort: {outcome.reason}", "qber": outcome.qber_estimate}
            results = {"transcript": outcome.to_dict(), "row": row}
            return envelope("simulate", seed, params, results, []), [row], bb84sim.SWEEP_COLUMNS
        joint = bb84sim.exact_joint(cfg, outcome)
        row = {"q": cfg.intercept_fraction, "l": cfg.final_key_bits, "status": "ok",
               "qber": outcome.qber_estimate, "sifted": outcome.sifted_key_length,
               "leak": outcome.ec_leak_bits}
        row.update(bb84sim.bound_checks(joint))
        results = {"transcript": outcome.to_dict(), "row": row}
        return envelope("simulate", seed, params, results, _row_checks(row)), [row], bb84sim.SWEEP_COLUMNS
    outcome = bb84sim.run_protocol(cfg)
    results = {"transcript": outcome.to_dict()}
    if isinstance(outcome, bb84sim.ProtocolTranscript):
        sample = outcome.sample_positions
        results["qber_sample_size"] = int(sample.size)
        hit = outcome.eve_intercept_mask.astype(bool)
        results["eve_bit_success"] = (float(np.mean(outcome.eve_outcomes[hit] == outcome.alice_bits[hit]))
                                      if hit.any() else None)
    return envelope("simulate", seed, params, results, []), None, None


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write output here instead of stdout")

    parser = argparse.ArgumentParser(prog="qkdbounds", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("report", parents=[common], help="security guarantees for given (n, d)")
    p.add_argument("--preset", choices=sorted(bounds.PRESETS))
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=float)
    p.add_argument("--avg-guess", dest="avg_guess", type=float)
    p.add_argument("--markov", type=int, help="number of averaging steps removed by Markov's inequality")

    p = sub.add_parser("verify", parents=[common], help="randomised property suites")
    p.add_argument("--suite", help="one of: " + ", ".join(list(checks.SUITES) + ["all"]))
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--inject-fault", dest="inject_fault", help=argparse.SUPPRESS)

    p = sub.add_parser("counterexample", parents=[common], help="explicit constructions")
    p.add_argument("--kind", choices=("half-biased", "kpa-spike", "tightness"))
    p.add_argument("--n", type=int, help="number of outcomes (half-biased)")
    p.add_argument("--bits", type=int, help="key bits (kpa-spike, tightness)")
    p.add_argument("--known", type=int, help="known key bits (kpa-spike)")
    p.add_argument("--eps", type=float)
    p.add_argument("--spike", type=float)
    p.add_argument("--averaged", action="store_true",
                   help="kpa-spike: condition on K1 only, averaging over Eve's outcome")

    p = sub.add_parser("simulate", parents=[common], help="toy BB84 run, optionally exact")
    p.add_argument("--m", type=int, help="raw qubits")
    p.add_argument("--q", type=float, help="intercept fraction")
    p.add_argument("--l", type=int, help="final key bits")
    p.add_argument("--strategy", choices=bb84sim.STRATEGIES)
    p.add_argument("--sample-fraction", dest="sample_fraction", type=float)
    p.add_argument("--abort-threshold", dest="abort_threshold", type=float)
    p.add_argument("--ec-efficiency", dest="ec_efficiency", type=float)
    p.add_argument("--pa-margin", dest="pa_margin", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--sweep", help="grid such as q=0:0.25:1,l=2:2:8")
    return parser


COMMANDS = {
    "report": cmd_report,
    "verify": cmd_verify,
    "counterexample": cmd_counterexample,
    "simulate": cmd_simulate,
}


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        config = read_config(args.config) if args.config else {}
        env, rows, columns = COMMANDS[args.command](args, config)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"qkdbounds {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"qkdbounds: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        seed = getattr(args, "seed", None)
        if seed is None and args.command in ("simulate", "verify"):
            seed = _default_seed()
        env = envelope(args.command, seed, {}, {"error": str(exc), "cap": exc.cap}, [])
        _emit(dumps(env) + "\n", args.out)
        return EXIT_CAPACITY
    if args.format == "csv":
        if rows is None:
            print(f"qkdbounds {args.command}: --format csv needs a tabular payload", file=sys.stderr)
            return EXIT_USAGE
        _emit(to_csv(rows, columns), args.out)
    else:
        _emit(dumps(env) + "\n", args.out)
    return EXIT_OK if all(c["passed"] for c in env["checks"]) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
