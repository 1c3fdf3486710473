"""Command-line front end.

Usage:
    qsrg flow --preset aklt --steps 8 --out trace.csv
    qsrg classify --preset ghz
    qsrg state --preset w --params 0 --m 4 --format amplitudes
    qsrg observe --preset aklt --m 8 --kind entropy --block 3
    qsrg spectrum --model ising --field 0.5 --out spec.csv
    qsrg ed-crosscheck --field 0.25 --sites 16

Exit codes: 0 success, 1 numerical failure, 2 invalid input or flags,
3 non-convergent (periodic) flow.
"""

from __future__ import annotations

import argparse
from concurrent.futures import ThreadPoolExecutor
import datetime as _dt
import json
import sys
import time

import numpy as np

from . import __version__
from .classify import DEFAULT_FIT_TOL, DEFAULT_TOL, classify
from .errors import DomainError, NonConvergentError, NumericalFailure, QsrgError
from .flow import CSV_COLUMNS, flow
from .io import InputError, csv_text, digest, dump_mps, dumps_json, load_mps
from .models import (
    DEFAULT_J_MAX,
    PAULI,
    PRESET_PARAMS,
    half_chain_spectrum,
    ising_dimer_spectrum,
    ising_epsilon,
    ising_ground_state_ed,
    make_preset,
    random_mps,
    xxz_dimer_spectrum,
)
from .mps import block_entropy, connected_correlator, expectation_local, schmidt_decompose, state_vector
from .rg import DEFAULT_DROP_TOL

__all__ = ["main", "run_command", "build_parser"]

EXIT_OK, EXIT_NUMERICAL, EXIT_INPUT, EXIT_NONCONVERGENT = 0, 1, 2, 3

FLOW_EPILOG = """\
trace CSV columns (header row always present):
  step          RG step (0 = normalized input)
  d_eff         physical dimension of the coarse site after the step
  abs_lambda_k  k-th largest |eigenvalue| of the normalized transfer matrix
                (k = 1..4, zero padded)
  entropy_bits  entropy of one coarse site, realized on --entropy-sites sites
  residual      Frobenius distance between consecutive canonical transfer
                matrices (nan at step 0)
  xi            correlation length -1/ln|lambda_2/lambda_1| (inf if degenerate)
with --sweep a leading column sweep_value holds the swept parameter.
"""

SPECTRUM_EPILOG = """\
spectrum CSV columns:
  rank    position in the descending list (0 = largest)
  level   occupation cost in units of epsilon
  weight  normalized reduced-density eigenvalue
"""

STATE_EPILOG = """\
amplitude CSV columns: index, basis (site 0 first), re, im
"""


class _Output:
    """Collects the payload and writes it with a manifest sidecar."""

    def __init__(self, command, args):
        self.command = command
        self.args = args
        self.started = time.perf_counter()
        self.stamp = _dt.datetime.now(_dt.timezone.utc).isoformat()

    def manifest(self, input_digest):
        params = {k: v for k, v in vars(self.args).items() if k not in ("func", "out", "summary")}
        return {
            "command": self.command,
            "params": params,
            "input_digest": input_digest,
            "version": __version__,
        }

    def write(self, path, text, input_digest):
        if path is None or path == "-":
            sys.stdout.write(text)
            return
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        full = dict(self.manifest(input_digest))
        full["payload_digest"] = digest(text)
        full["wall_clock_seconds"] = time.perf_counter() - self.started
        full["started_utc"] = self.stamp
        with open(f"{path}.manifest.json", "w", encoding="utf-8") as fh:
            fh.write(dumps_json(full))


def _parse_floats(text):
    if text is None or text == "":
        return ()
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise InputError(f"cannot parse numbers from {text!r}") from exc


def _source(args, params=None):
    """Build the MPS named by the flags, plus a digest of what defined it."""
    if args.input:
        mps = load_mps(args.input)
        with open(args.input, "rb") as fh:
            return mps, digest(fh.read())
    if args.preset is None:
        raise InputError("give --preset or --in")
    if args.preset == "random":
        rng = np.random.default_rng(args.seed)
        mps = random_mps(args.phys_dim, args.bond_dim, rng)
        spec = {"preset": "random", "d": args.phys_dim, "D": args.bond_dim, "seed": args.seed}
    else:
        p = _parse_floats(args.params) if params is None else params
        mps = make_preset(args.preset, p, raw=args.raw)
        spec = {"preset": args.preset, "params": list(p), "raw": args.raw}
    return mps, digest(json.dumps(spec, sort_keys=True))


def _add_source(p):
    p.add_argument("--preset", choices=sorted(PRESET_PARAMS) + ["random"], help="named preset state")
    p.add_argument("--params", default="", help="comma-separated preset parameters (w: theta; domain_wall: alpha,beta,theta)")
    p.add_argument("--raw", action="store_true", help="drop the cluster/AKLT normalization factors")
    p.add_argument("--in", dest="input", metavar="FILE", help="MPS JSON file (d, D, tensors[p][row][col] as [re,im], optional boundary)")
    p.add_argument("--seed", type=int, default=0, help="seed for --preset random")
    p.add_argument("--phys-dim", type=int, default=2, help="d for --preset random")
    p.add_argument("--bond-dim", type=int, default=2, help="D for --preset random")


def _add_flow_flags(p):
    p.add_argument("--steps", type=int, default=8, help="maximum RG steps (default 8)")
    p.add_argument("--conv-tol", type=float, default=1e-10, help="residual threshold for convergence")
    p.add_argument("--drop-tol", type=float, default=DEFAULT_DROP_TOL, help="relative singular-value cutoff")
    p.add_argument("--entropy-sites", type=int, default=4, help="chain length for the per-step entropy")


def _trace_rows(trace, prefix=()):
    return [list(prefix) + r.csv_row() for r in trace.records]


def _flow_summary(trace):
    fin = trace.final
    return {
        "steps_run": fin.step,
        "converged": trace.converged,
        "periodic": trace.periodic,
        "final_d_eff": fin.d_eff,
        "final_top_eigenvalues": list(fin.top_eigenvalues),
        "final_entropy_bits": fin.entropy_bits,
        "final_residual": fin.residual,
        "final_xi": fin.correlation_length,
        "params": trace.params,
    }


def _sweep_values(text):
    try:
        start, stop, num = text.split(":")
        return np.linspace(float(start), float(stop), int(num))
    except ValueError as exc:
        raise InputError(f"--sweep expects START:STOP:NUM, got {text!r}") from exc


def cmd_flow(args, out):
    fkw = dict(max_steps=args.steps, conv_tol=args.conv_tol, drop_tol_rel=args.drop_tol, entropy_sites=args.entropy_sites)
    if args.sweep:
        if args.input or args.preset in (None, "random") or not PRESET_PARAMS[args.preset]:
            raise InputError("--sweep needs a preset with at least one parameter")
        base = list(_parse_floats(args.params)) or [0.0] * len(PRESET_PARAMS[args.preset])
        values = _sweep_values(args.sweep)

        def one(v):
            p = tuple([float(v)] + base[1:])
            return flow(make_preset(args.preset, p, raw=args.raw), **fkw)

        with ThreadPoolExecutor() as pool:
            traces = list(pool.map(one, values))
        rows = [row for v, t in zip(values, traces) for row in _trace_rows(t, (float(v),))]
        text = csv_text(("sweep_value",) + CSV_COLUMNS, rows)
        summary = {"sweep": [dict(_flow_summary(t), sweep_value=float(v)) for v, t in zip(values, traces)]}
        src_digest = digest(json.dumps({"preset": args.preset, "base": base, "sweep": args.sweep}))
        periodic = any(t.periodic for t in traces)
    else:
        mps, src_digest = _source(args)
        trace = flow(mps, **fkw)
        text = csv_text(CSV_COLUMNS, _trace_rows(trace))
        summary = _flow_summary(trace)
        if args.save_state:
            with open(args.save_state, "w", encoding="utf-8") as fh:
                fh.write(dumps_json(dump_mps(trace.final_state)))
        periodic = trace.periodic
    out.write(args.out, text, src_digest)
    summary_path = args.summary
    if summary_path is None and args.out not in (None, "-"):
        summary_path = args.out.rsplit(".", 1)[0] + ".json"
    if summary_path:
        payload = dict(summary, manifest=out.manifest(src_digest))
        out.write(summary_path, dumps_json(payload), src_digest)
    return EXIT_NONCONVERGENT if periodic else EXIT_OK


def cmd_classify(args, out):
    mps, src_digest = _source(args)
    trace = flow(mps, max_steps=args.steps, conv_tol=args.conv_tol, drop_tol_rel=args.drop_tol, entropy_sites=args.entropy_sites)
    report = classify(trace.final_transfer(), tol=args.tol, fit_tol=args.fit_tol)
    payload = report.to_dict()
    payload["flow"] = _flow_summary(trace)
    payload["manifest"] = out.manifest(src_digest)
    out.write(args.out, dumps_json(payload), src_digest)
    return EXIT_NONCONVERGENT if trace.periodic else EXIT_OK


def cmd_state(args, out):
    mps, src_digest = _source(args)
    st = state_vector(mps, args.m)
    if args.format == "amplitudes":
        rows = []
        for idx in np.flatnonzero(np.abs(st.amplitudes) > args.cutoff):
            basis = np.base_repr(idx, base=st.local_dim).rjust(st.m, "0") if st.local_dim <= 36 else str(idx)
            a = st.amplitudes[idx]
            rows.append([int(idx), basis, float(a.real), float(a.imag)])
        out.write(args.out, csv_text(("index", "basis", "re", "im"), rows), src_digest)
        return EXIT_OK
    payload = {
        "m": st.m,
        "d": st.local_dim,
        "D": mps.D,
        "nonzero_amplitudes": int(np.count_nonzero(np.abs(st.amplitudes) > args.cutoff)),
        "block_entropy_bits": [block_entropy(st, L) for L in range(1, st.m)],
        "manifest": out.manifest(src_digest),
    }
    out.write(args.out, dumps_json(payload), src_digest)
    return EXIT_OK


def _operator(name, path, d):
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                arr = np.array(json.load(fh), dtype=float)
        except (OSError, ValueError, TypeError) as exc:
            raise InputError(f"cannot read operator from {path}: {exc}") from exc
        if arr.ndim != 3 or arr.shape[-1] != 2:
            raise InputError("operator file must hold [row][col] -> [re, im]")
        return arr[..., 0] + 1j * arr[..., 1]
    if name in ("sx", "sy", "sz"):
        if d != 2:
            raise InputError(f"{name} needs d = 2, the state has d = {d}")
        return PAULI[name[1]]
    if name == "n":
        return np.diag(np.arange(d, dtype=complex))
    if name.startswith("proj"):
        k = int(name[4:])
        if not 0 <= k < d:
            raise InputError(f"{name} outside 0..{d - 1}")
        op = np.zeros((d, d), dtype=complex)
        op[k, k] = 1.0
        return op
    raise InputError(f"unknown operator {name!r}")


def cmd_observe(args, out):
    mps, src_digest = _source(args)
    st = state_vector(mps, args.m)
    payload = {"kind": args.kind, "m": args.m}
    if args.kind == "expect":
        op = _operator(args.op, args.op_file, st.local_dim)
        payload.update(site=args.site, value=expectation_local(st, op, args.site))
    elif args.kind == "corr":
        op = _operator(args.op, args.op_file, st.local_dim)
        op2 = _operator(args.op2 or args.op, args.op_file, st.local_dim)
        payload.update(site=args.site, site2=args.site2, value=connected_correlator(st, op, args.site, op2, args.site2))
    elif args.kind == "entropy":
        payload.update(block=args.block, entropy_bits=block_entropy(st, args.block))
    else:
        sd = schmidt_decompose(st, args.block)
        payload.update(cut=args.block, coefficients=sd.coefficients, entropy_bits=sd.entropy_bits)
    payload["manifest"] = out.manifest(src_digest)
    out.write(args.out, dumps_json(payload), src_digest)
    return EXIT_OK


def cmd_spectrum(args, out):
    if args.model == "ising":
        if args.field is None:
            raise InputError("--model ising needs --field")
        spec = ising_dimer_spectrum(args.field, args.jmax)
    else:
        if args.delta is None:
            raise InputError("--model xxz needs --delta")
        spec = xxz_dimer_spectrum(args.delta, args.jmax)
    top = min(args.top, spec.weights.size)
    rows = [[i, int(spec.levels[i]), float(spec.weights[i])] for i in range(top)]
    src = digest(json.dumps({"model": args.model, "field": args.field, "delta": args.delta, "jmax": args.jmax}))
    out.write(args.out, csv_text(("rank", "level", "weight"), rows), src)
    if args.summary:
        payload = {
            "epsilon": spec.epsilon,
            "branch": spec.branch,
            "j_max": spec.j_max,
            "entropy_bits": spec.entropy_bits,
            "manifest": out.manifest(src),
        }
        out.write(args.summary, dumps_json(payload), src)
    return EXIT_OK


def cmd_ed(args, out):
    st = ising_ground_state_ed(args.field, args.sites)
    ed = half_chain_spectrum(st).coefficients ** 2
    pred = ising_dimer_spectrum(args.field, args.jmax).weights
    eps = ising_epsilon(args.field)
    ed_ratio = float(ed[1] / ed[0]) if ed.size > 1 else 0.0
    pred_ratio = float(pred[1] / pred[0])
    rel = abs(ed_ratio - pred_ratio) / pred_ratio
    payload = {
        "field": args.field,
        "sites": args.sites,
        "epsilon": eps,
        "predicted_ratio": pred_ratio,
        "ed_ratio": ed_ratio,
        "relative_error": rel,
        "tolerance": args.rtol,
        "within_tolerance": bool(rel <= args.rtol),
        "ed_top_weights": ed[: args.top],
        "predicted_top_weights": pred[: args.top],
    }
    src = digest(json.dumps({"field": args.field, "sites": args.sites, "jmax": args.jmax}))
    payload["manifest"] = out.manifest(src)
    out.write(args.out, dumps_json(payload), src)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def build_parser():
    fmt = argparse.RawDescriptionHelpFormatter
    parser = _Parser(prog="qsrg", description="Exact RG flows and fixed-point classification for translationally invariant MPS.")
    parser.add_argument("--version", action="version", version=f"qsrg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("state", help="realize a state vector", epilog=STATE_EPILOG, formatter_class=fmt)
    _add_source(p)
    p.add_argument("--m", type=int, required=True, help="number of sites")
    p.add_argument("--format", choices=("summary", "amplitudes"), default="summary")
    p.add_argument("--cutoff", type=float, default=1e-14, help="amplitudes at or below this magnitude are omitted")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("flow", help="run the RG flow, write a CSV trace and JSON summary", epilog=FLOW_EPILOG, formatter_class=fmt)
    _add_source(p)
    _add_flow_flags(p)
    p.add_argument("--sweep", metavar="START:STOP:NUM", help="sweep the first preset parameter")
    p.add_argument("--out", help="trace CSV path (default stdout)")
    p.add_argument("--summary", help="summary JSON path (default: next to --out)")
    p.add_argument("--save-state", metavar="FILE", help="write the final coarse MPS as JSON")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("classify", help="flow to convergence and classify the fixed point")
    _add_source(p)
    _add_flow_flags(p)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="rank and multiplicity tolerance")
    p.add_argument("--fit-tol", type=float, default=DEFAULT_FIT_TOL, help="Jordan-family pattern fit tolerance")
    p.add_argument("--out", help="report JSON path (default stdout)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("observe", help="expectation values, correlators and entropies")
    _add_source(p)
    p.add_argument("--m", type=int, required=True, help="number of sites")
    p.add_argument("--kind", choices=("expect", "corr", "entropy", "schmidt"), default="expect")
    p.add_argument("--op", default="sz", help="sx, sy, sz (d=2), n, or projK")
    p.add_argument("--op2", help="second operator for corr (default: --op)")
    p.add_argument("--op-file", help="operator JSON [row][col] -> [re, im]")
    p.add_argument("--site", type=int, default=0)
    p.add_argument("--site2", type=int, default=1)
    p.add_argument("--block", type=int, default=1, help="block length / cut position")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("spectrum", help="dimer Schmidt spectrum of the Ising or XXZ chain", epilog=SPECTRUM_EPILOG, formatter_class=fmt)
    p.add_argument("--model", choices=("ising", "xxz"), required=True)
    p.add_argument("--field", type=float, help="Ising coupling-to-field ratio (not 1)")
    p.add_argument("--delta", type=float, help="XXZ anisotropy (> 1)")
    p.add_argument("--jmax", type=int, default=DEFAULT_J_MAX, help="highest mode index kept")
    p.add_argument("--top", type=int, default=64, help="number of weights written")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--summary", help="optional JSON with epsilon, branch and entropy")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("ed-crosscheck", help="compare exact diagonalization with the analytic spectrum")
    p.add_argument("--field", type=float, default=0.25)
    p.add_argument("--sites", type=int, default=16)
    p.add_argument("--jmax", type=int, default=DEFAULT_J_MAX)
    p.add_argument("--rtol", type=float, default=0.10, help="relative tolerance on the leading ratio")
    p.add_argument("--top", type=int, default=8)
    p.add_argument("--out", help="JSON path (default stdout)")
    p.set_defaults(func=cmd_ed)
    return parser


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    out = _Output(args.command, args)
    try:
        return args.func(args, out)
    except NonConvergentError as exc:
        print(f"qsrg: non-convergent: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENT
    except NumericalFailure as exc:
        print(f"qsrg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, InputError) as exc:
        print(f"qsrg: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except QsrgError as exc:
        print(f"qsrg: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
