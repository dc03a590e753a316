"""``rebit`` command-line front end.

Data goes to stdout (or ``--output``); a short human-readable summary goes to
stderr. Exit codes: 0 success, 1 a requested verification failed, 2 bad
usage or input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .contextuality import WitnessSpec, classify, sweep, witness_value_dense, witness_value_wigner
from .css import StabilizerGroup, hudson_verify
from .dense import DenseDensity, DenseState, MAX_N
from .injection import LogicalCircuit, run_encoded, verify_circuit
from .sim import dense_distribution, exact_distribution, parse_circuit, run, tv_distance
from .wigner import complete_graph_state, negativity, one_rebit_family, two_rebit_family, wigner_of

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
FAMILIES = {"one-rebit-xz": ("x", "z"), "two-rebit-ab": ("a", "b")}


class UsageError(Exception):
    pass


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return p


def _emit(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _threads(args) -> int:
    if args.threads:
        return args.threads
    return int(os.environ.get("REBIT_THREADS", "1") or 1)


# ---------------------------------------------------------------------------
# State input


def _add_state_options(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--stabilizer", metavar="FILE", help="stabilizer generators, one signed Pauli per line")
    g.add_argument("--state", metavar="NAME", help="named state: k<n> (complete graph state)")
    g.add_argument("--mixed", metavar="n=K", help="maximally mixed state on K rebits")
    g.add_argument("--density", metavar="FILE", help="JSON with a real 'matrix' or real 'amplitudes'")
    g.add_argument("--point", metavar="FAMILY:P,Q", help="family member, e.g. one-rebit-xz:0.5,0.4")


def _load_state(args):
    if args.stabilizer:
        return StabilizerGroup.parse(_existing(args.stabilizer).read_text()).state()
    if args.state:
        m = re.fullmatch(r"[kK](\d+)", args.state)
        if not m or not 1 <= int(m.group(1)) <= MAX_N:
            raise UsageError(f"unknown state {args.state!r}; expected k1..k{MAX_N}")
        return complete_graph_state(int(m.group(1)))
    if args.mixed:
        m = re.fullmatch(r"n=(\d+)", args.mixed)
        if not m or not 1 <= int(m.group(1)) <= MAX_N:
            raise UsageError(f"--mixed expects n=K with 1 <= K <= {MAX_N}")
        return DenseDensity.maximally_mixed(int(m.group(1)))
    if args.density:
        text = _existing(args.density).read_text()
        data = json.loads(text)
        return DenseDensity.from_json(text) if "matrix" in data else DenseState.from_json(text)
    family, _, params = args.point.partition(":")
    try:
        p, q = (float(v) for v in params.split(","))
    except ValueError:
        raise UsageError("--point expects FAMILY:P,Q") from None
    if family == "one-rebit-xz":
        return one_rebit_family(p, q)
    if family == "two-rebit-ab":
        return two_rebit_family(p, q)
    raise UsageError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_wigner(args) -> int:
    w = wigner_of(_load_state(args))
    neg = negativity(w)
    n = w.n
    mask = (1 << n) - 1
    rows = [
        (format(i >> n, f"0{n}b"), format(i & mask, f"0{n}b"), float(v), bool(v < -1e-10))
        for i, v in enumerate(w.values)
    ]
    if args.format == "json":
        out = {
            "n": n,
            "table": [{"u_Z": z, "u_X": x, "value": v, "negative": f} for z, x, v, f in rows],
            "min": neg.min_value,
            "negativity_mass": neg.neg_mass,
        }
        _emit(args, json.dumps(out, indent=1) + "\n")
    else:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["u_Z", "u_X", "value", "negative"])
        for z, x, v, f in rows:
            wr.writerow([z, x, repr(v), int(f)])
        buf.write(f"# min,{neg.min_value!r}\n# negativity_mass,{neg.neg_mass!r}\n")
        _emit(args, buf.getvalue())
    flagged = sum(r[3] for r in rows)
    _say(f"n={n}: min {neg.min_value:.6g}, negativity mass {neg.neg_mass:.6g}, {flagged} negative entries")
    return EXIT_OK


def cmd_classify(args) -> int:
    result = classify(_load_state(args))
    report = result.as_dict()
    if result.verdict.value == "NONCONTEXTUAL" and not args.full:
        report.pop("certificate", None)
    report["recheck"] = result.recheck()
    if args.format == "json":
        _emit(args, json.dumps(report, indent=1) + "\n")
    else:
        cert = report.get("certificate", {})
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["verdict", "min_value", "subspace", "nu_Z", "nu_X", "coset_sum"])
        nu = cert.get("nu", {})
        wr.writerow([
            report["verdict"], repr(report["min_value"]), " ".join(cert.get("subspace", [])),
            nu.get("u_Z", ""), nu.get("u_X", ""), repr(cert["coset_sum"]) if "coset_sum" in cert else "",
        ])
        _emit(args, buf.getvalue())
    _say(f"verdict: {result.verdict.value}")
    return EXIT_OK if report["recheck"] else EXIT_FAILED


def cmd_sweep(args) -> int:
    if not 2 <= args.resolution <= 2001:
        raise UsageError("--resolution must be between 2 and 2001")
    rows = sweep(args.family, args.resolution)
    p_name, q_name = FAMILIES[args.family]
    if args.format == "json":
        data = [
            {p_name: r.params[0], q_name: r.params[1], "physical": r.physical, "min_w": r.min_w, "verdict": r.verdict.value}
            for r in rows
        ]
        _emit(args, json.dumps(data) + "\n")
    else:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow([p_name, q_name, "physical", "min_w", "verdict"])
        for r in rows:
            wr.writerow([repr(r.params[0]), repr(r.params[1]), int(r.physical), repr(r.min_w), r.verdict.value])
        _emit(args, buf.getvalue())
    tally: dict[str, int] = {}
    for r in rows:
        if r.physical:
            tally[r.verdict.value] = tally.get(r.verdict.value, 0) + 1
    _say(f"{args.family} at {args.resolution}x{args.resolution}, physical points: {tally}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    path = _existing(args.circuit)
    circuit = parse_circuit(path.read_text(), base_dir=path.parent)
    result = run(circuit, args.samples, args.seed, threads=_threads(args))
    freqs = result.frequencies()
    report = {"samples": args.samples, "seed": args.seed, "counts": dict(sorted(result.counts.items()))}
    status = EXIT_OK
    if args.compare_dense:
        dense = dense_distribution(circuit)
        exact = exact_distribution(circuit)
        tv = tv_distance(freqs, dense)
        table_gap = tv_distance(exact, dense)
        report.update(dense=dense, tv_distance=tv, table_vs_dense=table_gap, tv_threshold=args.tv_threshold)
        if tv >= args.tv_threshold or table_gap > 1e-9:
            status = EXIT_FAILED
    if args.format == "json":
        _emit(args, json.dumps(report, indent=1) + "\n")
    else:
        text = result.to_csv()
        if args.compare_dense:
            text += f"# tv_distance,{report['tv_distance']!r}\n"
        _emit(args, text)
    if args.compare_dense:
        _say(f"TV distance to dense Born distribution: {report['tv_distance']:.6f}")
    _say(f"{len(result.counts)} distinct outcomes over {args.samples} samples")
    return status


def cmd_hudson(args) -> int:
    if not 1 <= args.n <= 3:
        raise UsageError("--n must be 1, 2 or 3")
    report = hudson_verify(args.n, samples=args.samples, seed=args.seed)
    data = report.as_dict()
    if args.format == "json":
        _emit(args, json.dumps(data, indent=1) + "\n")
    else:
        keys = [k for k in data if k != "failures"]
        _emit(args, ",".join(keys) + "\n" + ",".join(str(data[k]) for k in keys) + "\n")
    if report.ok:
        _say(f"n={args.n}: all CSS nonnegative; all non-CSS real stabilizer states negative "
             f"({report.num_css} CSS of {report.num_states})")
    else:
        _say(f"n={args.n}: FAILED for {len(report.failures)} states")
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_witness(args) -> int:
    if args.state.endswith(".stab") or Path(args.state).is_file():
        state = StabilizerGroup.parse(_existing(args.state).read_text()).state()
    else:
        m = re.fullmatch(r"[kK](\d+)", args.state)
        if not m:
            raise UsageError(f"--state expects a .stab file or k<n>, got {args.state!r}")
        state = complete_graph_state(int(m.group(1)))
    labels = [s for s in args.basis.split(",") if s.strip()]
    if labels and len(labels[0].lstrip("+-")) < state.n:
        labels = [s + "I" * (state.n - len(s.lstrip("+-"))) for s in labels]
    spec = WitnessSpec.from_labels(labels)
    dense = witness_value_dense(state, spec, args.x)
    via_w = witness_value_wigner(wigner_of(state), spec, args.x)
    agree = abs(dense - via_w) <= 1e-9
    report = {"basis": labels, "x": args.x, "value": dense, "wigner_route": via_w, "routes_agree": agree}
    if args.format == "json":
        _emit(args, json.dumps(report, indent=1) + "\n")
    else:
        _emit(args, f"basis,x,value,wigner_route\n{' '.join(labels)},{args.x},{dense!r},{via_w!r}\n")
    _say(f"witness value {dense:.10g}" + ("" if agree else " (routes DISAGREE)"))
    return EXIT_OK if agree else EXIT_FAILED


def _logical_input(spec: str, n: int) -> DenseState:
    if re.fullmatch(r"[01]+", spec):
        if len(spec) != n:
            raise UsageError(f"--input has {len(spec)} bits, circuit has {n} qubits")
        vec = np.zeros(1 << n, dtype=complex)
        vec[int(spec, 2)] = 1
        return DenseState(vec, complex_mode=True)
    state = DenseState.from_json(_existing(spec).read_text())
    return DenseState(state.amplitudes, complex_mode=True)


def cmd_inject(args) -> int:
    if args.circuit:
        text = _existing(args.circuit).read_text()
    else:
        text = args.ops.replace(";", "\n")
    circuit = LogicalCircuit.parse(text, data_count=args.qubits)
    psi = _logical_input(args.input or "0" * circuit.data_count, circuit.data_count)
    checks = verify_circuit(circuit, psi, rng=args.seed)
    result = run_encoded(circuit, psi, seed=args.seed)
    ok = all(c.ok for c in checks)
    report = {
        "circuit": circuit.to_text().strip().splitlines(),
        "seed": args.seed,
        "steps": [
            {"op": c.op, "branches": c.branches, "total_probability": c.total_probability,
             "min_fidelity": c.min_overlap, "audit_problems": list(c.audit_problems), "ok": c.ok}
            for c in checks
        ],
        "run": {
            "logical_outcomes": list(result.logical_outcomes),
            "final_real": result.final.amplitudes.real.tolist(),
            "final_imag": result.final.amplitudes.imag.tolist(),
            "primitives": len(result.log),
            "peak_rebits": result.peak_rebits,
        },
        "ok": ok,
    }
    if args.log:
        Path(args.log).write_text(result.log_json() + "\n")
    if args.format == "json":
        _emit(args, json.dumps(report, indent=1) + "\n")
    else:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["op", "branches", "total_probability", "min_fidelity", "audit_problems", "ok"])
        for s in report["steps"]:
            wr.writerow([s["op"], s["branches"], repr(s["total_probability"]), repr(s["min_fidelity"]),
                         len(s["audit_problems"]), int(s["ok"])])
        _emit(args, buf.getvalue())
    _say(f"{len(checks)} logical steps, all branches verified: {ok}; "
         f"{len(result.log)} primitives, peak {result.peak_rebits} rebits")
    return EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rebit", description="Rebit phase-space toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--output", "-o", metavar="FILE")
    common.add_argument("--threads", type=int, default=None, help="worker threads (fallback: REBIT_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wigner", parents=[common], help="Wigner table of a state")
    _add_state_options(p)
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("classify", parents=[common], help="contextuality verdict with certificate")
    _add_state_options(p)
    p.add_argument("--full", action="store_true", help="include the full table for nonnegative states")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", parents=[common], help="classify a two-parameter state family on a grid")
    p.add_argument("--family", choices=sorted(FAMILIES), required=True)
    p.add_argument("--resolution", type=int, default=201)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", parents=[common], help="sample a CSS circuit in phase space")
    p.add_argument("--circuit", required=True, metavar="FILE")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--compare-dense", action="store_true")
    p.add_argument("--tv-threshold", type=float, default=0.02)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("hudson", parents=[common], help="exhaustive nonnegativity check of real stabilizer states")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=1000, help="random real states for negativity statistics")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_hudson)

    p = sub.add_parser("witness", parents=[common], help="evaluate a contextuality witness")
    p.add_argument("--state", required=True, help="stabilizer file or k<n>")
    p.add_argument("--basis", required=True, help="comma-separated Pauli labels, e.g. XZ,ZX")
    p.add_argument("--x", required=True, help="bit string selecting the witness")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("inject", parents=[common], help="run a logical circuit through the encoded gadgets")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--circuit", metavar="FILE", help="one op per line: H i, T i, TDG i, CNOT i j, MEASZ i")
    src.add_argument("--ops", help="ops separated by ';', e.g. 'H 0;T 0;H 0'")
    p.add_argument("--qubits", type=int, default=None)
    p.add_argument("--input", help="basis bit string or JSON state file (default all zeros)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log", metavar="FILE", help="write the primitive log as JSON")
    p.set_defaults(func=cmd_inject)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be positive")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"rebit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"rebit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
