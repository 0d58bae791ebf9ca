"""``multiswap`` command line.

Structured outputs are JSON objects of the form::

    {"format_version": 1, "manifest": {...}, "result": {...}}

Circuit and label-table outputs are text; their manifest sits in a leading
``# manifest {...}`` comment line, which the circuit parser ignores.
Floats are written with 12 significant digits.  The manifest timestamp is the
only field allowed to differ between two runs with the same parameters.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .core import FORMAT_VERSION, CircuitFormatError, Hadamard, bits_to_str, read_circuit, to_text, validate
from .estimate import RNG_ALGORITHM, error_norm, estimate_overlaps, run_replications, sample_shots
from .evolve import PUBLISHED_SCALE, GAConfig, success_rate, to_circuit
from .pairing import PadToPowerOfTwo, StrategyError, build_pairing, parse_strategy, predict_counts, with_swap_test
from .permlab import DEFAULT_MAX_ANCILLAS, EnumerationTooLarge, label_table
from .simvec import (
    EXACT_TOL,
    IncompleteLabeling,
    ancilla_distribution,
    direct_overlaps,
    exact_overlaps,
    haar_states,
    pad_states,
    read_states,
    run,
    with_register_width,
    write_states,
)

logger = logging.getLogger("multiswap")

THREADS_ENV = "MULTISWAP_THREADS"
SIG_DIGITS = 12
# Verify runs the simulation spot check only below this many qubits.
VERIFY_MAX_QUBITS = 22


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int | None
    version: str = __version__
    inputs: dict = field(default_factory=dict)
    timestamp: str = ""
    format_version: int = FORMAT_VERSION

    def to_dict(self) -> dict:
        return asdict(self)


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return "sha256:" + h.hexdigest()


def make_manifest(command: str, args: argparse.Namespace, seed=None, input_paths=()) -> RunManifest:
    skip = {"func", "command", "out"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return RunManifest(
        command=command,
        params=params,
        seed=seed,
        inputs={str(p): _digest(p) for p in input_paths if p},
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def _round(obj):
    if isinstance(obj, float):
        return float(format(obj, f".{SIG_DIGITS}g"))
    if isinstance(obj, (np.floating,)):
        return _round(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def result_object(manifest: RunManifest, result: dict) -> dict:
    return {"format_version": FORMAT_VERSION, "manifest": manifest.to_dict(), "result": _round(result)}


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj: dict, out: str | None):
    _emit(json.dumps(obj, indent=1, sort_keys=True) + "\n", out)


def _manifest_comment(manifest: RunManifest) -> str:
    return "# manifest " + json.dumps(manifest.to_dict(), sort_keys=True) + "\n"


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _rate(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {value}")
    return value


def _default_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        return 1


def _load_states(args, circuit):
    if args.states:
        states = read_states(args.states)
        return states, int(np.log2(states[0].size))
    states = haar_states(circuit.n_inputs, args.q, args.haar)
    return states, args.q


# -- commands ----------------------------------------------------------------

def cmd_build(args) -> int:
    strategy = parse_strategy(args.strategy, args.m)
    circuit = build_pairing(args.m, strategy, args.q)
    if args.swap_test:
        circuit = with_swap_test(circuit)
    pred = predict_counts(args.m, strategy)
    manifest = make_manifest("build", args)
    _emit(_manifest_comment(manifest) + to_text(circuit), args.out)
    summary = {
        "m": args.m,
        "registers": circuit.layout.m,
        "cswaps": circuit.cswap_count,
        "ancillas": circuit.layout.d,
        "predicted": {"cswaps": pred.c, "ancillas": pred.d},
    }
    if args.out:
        print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_labels(args) -> int:
    circuit = read_circuit(args.circuit).pairing_part()
    table = label_table(circuit, args.max_ancillas)
    manifest = make_manifest("labels", args, input_paths=[args.circuit])
    _emit(_manifest_comment(manifest) + table.format() + "\n", args.out)
    return 0


def cmd_states(args) -> int:
    states = haar_states(args.m, args.q, args.seed)
    write_states(states, args.out)
    return 0


def cmd_simulate(args) -> int:
    circuit = read_circuit(args.circuit)
    states, q = _load_states(args, circuit)
    circuit = with_register_width(circuit, q)
    pairing = circuit.pairing_part()
    full = circuit if circuit.layout.has_test_ancilla else with_swap_test(pairing)
    dist = ancilla_distribution(run(full, states))
    table = label_table(pairing)
    result = {
        "d": full.layout.d,
        "distribution": [
            {"test": t, "bits": bits_to_str(b, dist.d), "p": float(p)}
            for (t, b), p in np.ndenumerate(dist.probs)
        ],
        "coverage": table.coverage,
        "complete": table.complete,
    }
    if table.complete:
        exact = exact_overlaps(full, states)
        direct = direct_overlaps(pad_states(states, circuit))
        result["overlaps"] = [
            {"pair": list(p), "exact": v, "direct": direct[p], "padded": table.is_padded(p),
             "labels": [bits_to_str(b, table.d) for b in table.labels_by_pair[p]]}
            for p, v in sorted(exact.items())
        ]
    else:
        result["missing"] = [list(p) for p in table.missing]
    manifest = make_manifest("simulate", args, seed=args.haar, input_paths=[args.circuit, args.states])
    _emit_json(result_object(manifest, result), args.out)
    return 0 if table.complete else 1


def cmd_estimate(args) -> int:
    circuit = read_circuit(args.circuit)
    states, q = _load_states(args, circuit)
    circuit = with_register_width(circuit, q)
    report = run_replications(circuit, states, args.shots, args.reps, seed=args.seed)
    pairing = circuit.pairing_part()
    table = label_table(pairing)
    full = circuit if circuit.layout.has_test_ancilla else with_swap_test(pairing)
    # One extra, separately seeded draw shown as a sample estimate.
    dist = ancilla_distribution(run(full, states))
    sample_seed = np.random.SeedSequence([args.seed, args.reps])
    est = estimate_overlaps(sample_shots(dist, args.shots, sample_seed), table)
    result = {
        "rng": RNG_ALGORITHM,
        "shots": args.shots,
        "reps": args.reps,
        "d": table.d,
        "mse": report.mse,
        "bound": report.bound,
        "within_bound": report.mse <= report.bound,
        "errors": report.errors,
        "pairs": [
            {"pair": list(p), "truth": report.truth[p], "mean_estimate": report.mean_estimate[p],
             "bias": report.bias[p], "sample_raw": est.raw[p], "sample_clamped": est.clamped[p],
             "sample_was_clamped": est.was_clamped[p], "padded": p in est.padded}
            for p in sorted(report.truth)
        ],
        "sample_error": error_norm(report.truth, {p: est.raw[p] for p in report.truth}),
    }
    manifest = make_manifest("estimate", args, seed=args.seed, input_paths=[args.circuit, args.states])
    _emit_json(result_object(manifest, result), args.out)
    return 0


def _trace_summary(results, every: int) -> list[dict]:
    length = max(len(r.cost_trace) for r in results)
    rows = []
    for it in list(range(0, length, every)) + ([length - 1] if (length - 1) % every else []):
        vals = np.array([r.cost_trace[min(it, len(r.cost_trace) - 1)] for r in results], dtype=float)
        rows.append({"iteration": it, "mean_missed": float(vals.mean()),
                     "q25": float(np.quantile(vals, 0.25)), "q75": float(np.quantile(vals, 0.75))})
    return rows


def cmd_search(args) -> int:
    pop, iters, rate = args.pop, args.iters, args.mutation
    if args.paper_scale:
        pop = PUBLISHED_SCALE["population_size"]
        iters = PUBLISHED_SCALE["iterations"]
        rate = PUBLISHED_SCALE["mutation_rate"]
        msg = (f"published-scale parameters L={pop}, M={iters}, p={rate}: expect hours per trial "
               "and several GB of memory")
        warnings.warn(msg, RuntimeWarning, stacklevel=1)
        print("warning: " + msg, file=sys.stderr)
    config = GAConfig(args.m, args.cswaps, args.ancillas, pop, rate, iters)
    report = success_rate(config, args.trials, seed=args.seed, workers=args.workers)
    trials = [
        {"seed": r.config.seed, "best_cost": r.best_cost, "iterations": r.iterations_run,
         "best": [list(g) for g in r.best]}
        for r in report.results
    ]
    result = {
        "config": {"m": config.m, "cswaps": config.c, "ancillas": config.d, "population": pop,
                   "iterations": iters, "mutation_rate": rate, "trials": args.trials},
        "success_rate": report.rate,
        "mean_missed": report.mean_missed,
        "missed_q25": report.missed_q25,
        "missed_q75": report.missed_q75,
        "mean_labelled": report.mean_labelled,
        "trials": trials,
        "trace": _trace_summary(report.results, args.trace_every),
    }
    if args.export_best:
        best = min(report.results, key=lambda r: r.best_cost)
        circuit = to_circuit(best.best, config.m, config.d)
        comment = f"# best GA chromosome, {best.best_cost} missed pairs, trial seed {best.config.seed}\n"
        _emit(comment + to_text(circuit), args.export_best)
        result["exported"] = {"path": args.export_best, "best_cost": best.best_cost}
    params = dict(vars(args))
    params.update(pop=pop, iters=iters, mutation=rate)
    args = argparse.Namespace(**params)
    manifest = make_manifest("search", args, seed=args.seed)
    manifest.params.pop("workers", None)  # does not affect results
    _emit_json(result_object(manifest, result), args.out)
    return 0


def _check(name, ok, detail):
    return {"check": name, "status": ok, "detail": detail}


def cmd_verify(args) -> int:
    try:
        circuit = read_circuit(args.circuit)
    except CircuitFormatError as exc:
        print(f"FAIL parse {exc}")
        return 2
    checks = []
    problems = validate(circuit)
    checks.append(_check("structure", "PASS" if not problems else "FAIL", "; ".join(problems) or "gates fit layout"))

    pairing = circuit.pairing_part()
    lay = pairing.layout
    first_use = {}
    for pos, g in enumerate(pairing.gates):
        if not isinstance(g, Hadamard):
            first_use.setdefault(g.control, pos)
    h_pos = {}
    for pos, g in enumerate(pairing.gates):
        if isinstance(g, Hadamard):
            h_pos.setdefault(g.ancilla, pos)
    unprepared = [k + 1 for k in range(lay.d) if k not in h_pos or h_pos[k] > first_use.get(k, lay.d + len(pairing.gates))]
    checks.append(_check("ancillas", "PASS" if not unprepared else "FAIL",
                         "every ancilla gets H before use" if not unprepared
                         else "no leading H on " + " ".join(f"a{k}" for k in unprepared)))

    try:
        table = label_table(pairing, args.max_ancillas)
    except EnumerationTooLarge as exc:
        checks.append(_check("coverage", "FAIL", str(exc)))
        table = None
    if table is not None:
        total = table.n_inputs * (table.n_inputs - 1) // 2
        detail = f"coverage {table.coverage}/{total}"
        if table.missing:
            detail += "; missing " + " ".join(f"({i},{j})" for i, j in table.missing)
        checks.append(_check("coverage", "PASS" if table.complete else "FAIL", detail))

    strategy = PadToPowerOfTwo() if circuit.padded else None
    pred = predict_counts(circuit.n_inputs, strategy)
    c, d = pairing.cswap_count, lay.d
    within = c <= pred.c and d <= pred.d
    checks.append(_check("counts", "PASS" if within else "WARN",
                         f"counts {c}/{pred.c} cswaps, {d}/{pred.d} ancillas (circuit/construction)"))

    if table is None or not table.complete:
        checks.append(_check("simulation", "SKIP", "labeling incomplete"))
    elif lay.n_qubits + 1 > VERIFY_MAX_QUBITS:
        checks.append(_check("simulation", "SKIP", f"{lay.n_qubits + 1} qubits exceed {VERIFY_MAX_QUBITS}"))
    else:
        worst = 0.0
        law = 0.0
        full = with_swap_test(pairing)
        for states in (haar_states(circuit.n_inputs, lay.q, s) for s in np.random.SeedSequence(args.seed).spawn(args.samples)):
            exact = exact_overlaps(full, states)
            direct = direct_overlaps(pad_states(states, pairing))
            worst = max(worst, max(abs(exact[p] - direct[p]) for p in exact))
            probs = ancilla_distribution(run(full, states)).probs
            law = max(law, float(np.max(np.abs(probs.sum(axis=0) - 2.0 ** -lay.d))))
        ok = worst <= EXACT_TOL and law <= EXACT_TOL
        checks.append(_check("simulation", "PASS" if ok else "FAIL",
                             f"{args.samples} random input sets; overlap error {worst:.3g}, branch-weight error {law:.3g}"))

    for ch in checks:
        print(f"{ch['status']} {ch['check']}: {ch['detail']}")
    if args.out:
        manifest = make_manifest("verify", args, seed=args.seed, input_paths=[args.circuit])
        _emit_json(result_object(manifest, {"checks": checks}), args.out)
    return 0 if all(ch["status"] != "FAIL" for ch in checks) else 1


# -- parser ------------------------------------------------------------------

def _add_state_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--states", help="states file (JSON, see README)")
    src.add_argument("--haar", type=int, metavar="SEED", help="use Haar-random states drawn with SEED")
    p.add_argument("--q", type=_positive_int, default=1, help="qubits per register with --haar (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multiswap", description="Recursive multi-state SWAP test toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct the pairing circuit for m states")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--q", type=_positive_int, default=1)
    p.add_argument("--strategy", default="middle", help="middle | pad | explicit:g1+g2 | explicit:n=g1+g2,...")
    p.add_argument("--swap-test", action="store_true", help="append the SWAP test on registers 1 and 2")
    p.add_argument("--out", "-o", help="circuit file (default stdout)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("labels", help="print the label table of a circuit")
    p.add_argument("circuit")
    p.add_argument("--max-ancillas", type=int, default=DEFAULT_MAX_ANCILLAS)
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_labels)

    p = sub.add_parser("states", help="write a file of Haar-random states")
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--q", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_states)

    p = sub.add_parser("simulate", help="exact ancilla statistics and overlaps")
    p.add_argument("circuit")
    _add_state_source(p)
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="sampled overlap estimates and MSE report")
    p.add_argument("circuit")
    _add_state_source(p)
    p.add_argument("--shots", type=_positive_int, required=True)
    p.add_argument("--reps", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("search", help="genetic search for pairing circuits")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--cswaps", type=_positive_int, required=True)
    p.add_argument("--ancillas", type=_positive_int, required=True)
    p.add_argument("--pop", type=_positive_int, default=10_000)
    p.add_argument("--iters", type=_positive_int, default=100_000)
    p.add_argument("--mutation", type=_rate, default=0.5)
    p.add_argument("--trials", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive_int, default=None,
                   help=f"parallel trials (default ${THREADS_ENV} or 1)")
    p.add_argument("--trace-every", type=_positive_int, default=1000)
    p.add_argument("--paper-scale", action="store_true", help="use the published population and budget")
    p.add_argument("--export-best", metavar="PATH", help="write the best chromosome as a circuit file")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("verify", help="check a circuit file")
    p.add_argument("circuit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=_positive_int, default=3)
    p.add_argument("--max-ancillas", type=int, default=DEFAULT_MAX_ANCILLAS)
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", 0) is None:
        args.workers = _default_workers()
    try:
        return args.func(args)
    except CircuitFormatError as exc:
        print(f"error: parse error: {exc}", file=sys.stderr)
        return 2
    except (StrategyError, UsageError) as exc:
        parser.error(str(exc))
    except (IncompleteLabeling, EnumerationTooLarge, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
