"""Command-line front end.

Every command writes a metadata header (tool version, RNG algorithm and the
resolved configuration) ahead of its payload: a ``meta`` object in JSON,
``# key: value`` lines in CSV and text, and a first ``{"meta": ...}``
record in JSON-lines archives.  Execution-only settings (``--threads``,
output paths) are left out so reruns produce identical bytes.

Exit codes: 0 success, 2 configuration error, 3 infeasible (Lambda <= 1),
4 statistically insufficient data for a fit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

import numpy as np

from . import __version__
from .codes import CodeKind, build_code, repetition_truth_table
from .decoder import Decoder, build_decoding_graph
from .errors import InfeasibleError, InsufficientStatisticsError, LambdaForgeError
from .metrology import fit_lambda, noise_for, read_sweep_csv, run_sweep, write_sweep_csv
from .noise_sim import RNG_ALGORITHM, Circuit, NoiseParams, shot_seed
from .pauli_algebra import commutator_report
from .resources import budget_report, lambda_from_eps, required_order

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_STATS = 0, 2, 3, 4
SEED_ENV = "LAMBDAFORGE_SEED"
_EXECUTION_ONLY = {"threads", "out", "config", "func", "checkpoint", "progress"}
_SIM_CHUNK = 4096


class ConfigError(LambdaForgeError):
    pass


def _meta(args: argparse.Namespace) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in _EXECUTION_ONLY}
    return {"tool": "lambdaforge", "version": __version__, "rng": RNG_ALGORITHM, "config": config}


def _open_out(args):
    if getattr(args, "out", None):
        return open(args.out, "w", newline="")
    return sys.stdout


def _emit_json(args, payload) -> None:
    fh = _open_out(args)
    try:
        json.dump({"meta": _meta(args), "result": payload}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _text_header(args) -> str:
    return "".join(f"# {k}: {json.dumps(v, sort_keys=True)}\n" for k, v in _meta(args).items())


def _noise_from_args(args) -> NoiseParams:
    if getattr(args, "data_flip", None):
        return NoiseParams.code_capacity(args.data_flip)
    if args.eps is not None:
        return NoiseParams.uniform(float(args.eps))
    return NoiseParams(args.eps1 or 0.0, args.eps2 or 0.0, args.epsm or 0.0)


def _parse_grid(spec: str) -> list[float]:
    """``a:b:k`` for k log-spaced points, or a comma-separated list."""
    if ":" in spec:
        lo, hi, k = spec.split(":")
        return [float(v) for v in np.geomspace(float(lo), float(hi), int(k))]
    return [float(v) for v in spec.split(",") if v]


def _parse_orders(spec: str) -> list[int]:
    return [int(v) for v in spec.split(",") if v]


def rle_encode(bits: np.ndarray) -> list[int]:
    """Alternating run lengths of a flat bit vector, starting with zeros."""
    flat = np.asarray(bits, dtype=np.uint8).reshape(-1)
    runs = []
    current, count = 0, 0
    for b in flat:
        if b == current:
            count += 1
        else:
            runs.append(count)
            current, count = int(b), 1
    runs.append(count)
    return runs


def rle_decode(runs: Sequence[int], size: int) -> np.ndarray:
    out = np.zeros(size, dtype=np.uint8)
    pos, value = 0, 0
    for r in runs:
        out[pos:pos + r] = value
        pos += r
        value ^= 1
    if pos != size:
        raise ConfigError("run-length encoding does not match the stated shape")
    return out


# ---------------------------------------------------------------- commands

def cmd_truth_table(args) -> int:
    rows = repetition_truth_table(args.bits)
    names = [chr(ord("A") + i) for i in range(args.bits)]
    parity_names = [f"{names[i]}{names[i + 1]}" for i in range(args.bits - 1)]
    fh = _open_out(args)
    try:
        if args.format == "json":
            payload = [
                {"input": "".join(map(str, r.input_bits)), "parities": list(r.parities),
                 "decodable": r.decodable,
                 "decoded_error": None if r.decoded_error is None else "".join(map(str, r.decoded_error))}
                for r in rows
            ]
            json.dump({"meta": _meta(args), "result": payload}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        elif args.format == "csv":
            fh.write(_text_header(args))
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["".join(names), *parity_names, "decodable", "decoded_error"])
            for r in rows:
                w.writerow(["".join(map(str, r.input_bits)), *r.parities, int(r.decodable),
                            "" if r.decoded_error is None else "".join(map(str, r.decoded_error))])
        else:
            fh.write(_text_header(args))
            head = ["".join(names).ljust(max(args.bits, 5)), *[p.rjust(3) for p in parity_names],
                    "decodable", "error"]
            fh.write("  ".join(head) + "\n")
            for r in rows:
                cells = ["".join(map(str, r.input_bits)).ljust(max(args.bits, 5)),
                         *[str(p).rjust(3) for p in r.parities],
                         ("yes" if r.decodable else "no").ljust(9),
                         "-" if r.decoded_error is None else "".join(map(str, r.decoded_error))]
                fh.write("  ".join(cells) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_layout(args) -> int:
    _emit_json(args, build_code(args.code, args.order).to_dict())
    return EXIT_OK


def _simulate_chunk(kind, order, rounds, noise, seed, start, stop):
    circuit = Circuit(build_code(kind, order), rounds, noise)
    seeds = [shot_seed(seed, i) for i in range(start, stop)]
    batch = circuit.run_seeded(seeds)
    code = circuit.code
    data = list(code.data_qubits)
    flips = (batch.residual_x[:, data].astype(np.int64) @ code.logical_z.z) % 2
    return [
        {"shot": start + j, "seed": s, "detection_events": rle_encode(batch.detection_events[j]),
         "residual_logical_flip": int(flips[j])}
        for j, s in enumerate(seeds)
    ]


def cmd_simulate(args) -> int:
    code = build_code(args.code, args.order)
    rounds = args.rounds or code.distance
    args.rounds = rounds
    noise = _noise_from_args(args)
    tasks = [(code.kind.value, args.order, rounds, noise, args.seed, s, min(args.shots, s + _SIM_CHUNK))
             for s in range(0, args.shots, _SIM_CHUNK)]
    shape = [rounds + 1, code.n_ancilla]
    fh = _open_out(args)
    try:
        meta = _meta(args)
        meta["params"] = noise.to_dict()
        meta["shape"] = shape
        fh.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
        if args.threads > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=args.threads) as pool:
                chunks = pool.map(_simulate_chunk, *zip(*tasks))
                for chunk in chunks:
                    for rec in chunk:
                        fh.write(json.dumps(rec, sort_keys=True) + "\n")
        else:
            for t in tasks:
                for rec in _simulate_chunk(*t):
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_decode(args) -> int:
    with open(args.events) as fh:
        lines = [json.loads(ln) for ln in fh if ln.strip()]
    if not lines or "meta" not in lines[0]:
        raise ConfigError("archive lacks a metadata record")
    meta = lines[0]["meta"]
    cfg = meta["config"]
    if cfg["code"] != args.code or cfg["order"] != args.order:
        raise ConfigError(f"archive was written for {cfg['code']} n={cfg['order']}")
    code = build_code(args.code, args.order)
    rounds = cfg["rounds"]
    noise = NoiseParams(**meta["params"])
    decoder = Decoder(build_decoding_graph(code, rounds, noise, weighted=args.weighted))
    size = int(np.prod(meta["shape"]))
    results = []
    for rec in lines[1:]:
        det = rle_decode(rec["detection_events"], size).reshape(1, *meta["shape"])
        events = decoder.events(det.reshape(-1))
        parity = decoder.correction_parity(events) if events else 0
        results.append({"shot": rec["shot"], "failure": bool(parity ^ rec["residual_logical_flip"])})
    _emit_json(args, {"shots": len(results), "failures": sum(r["failure"] for r in results),
                      "per_shot": results})
    return EXIT_OK


def _progress_printer(enabled: bool):
    if not enabled:
        return None

    def show(done: int, total: int) -> None:
        print(f"\r{done}/{total} shots", end="" if done < total else "\n", file=sys.stderr)
    return show


def cmd_sweep(args) -> int:
    orders = _parse_orders(args.orders)
    if args.eps is not None:
        noises = [noise_for(e, args.mode) for e in _parse_grid(args.eps)]
    else:
        noises = [NoiseParams(args.eps1 or 0.0, args.eps2 or 0.0, args.epsm or 0.0)]
    checkpoint = args.checkpoint or (args.out + ".ckpt.jsonl" if args.out else None)
    ests = run_sweep(args.code, orders, noises, args.shots, args.seed, args.rounds,
                     weighted=args.weighted, threads=args.threads, checkpoint=checkpoint,
                     progress=_progress_printer(args.progress))
    fh = _open_out(args)
    try:
        write_sweep_csv(ests, fh, _meta(args))
    finally:
        if fh is not sys.stdout:
            fh.close()
    if args.out:
        _write_plot_data(args.out, ests)
    return EXIT_OK


def _write_plot_data(out: str, ests) -> None:
    """One whitespace table per order: eps, p_hat, half-width of the CI."""
    root, _ = os.path.splitext(out)
    for n in sorted({e.order_n for e in ests}):
        with open(f"{root}.n{n}.dat", "w") as fh:
            fh.write("# x=eps y=p_hat err=(ci_high-ci_low)/2\n")
            for e in ests:
                if e.order_n == n:
                    x = e.params.eps if e.params.eps is not None else e.params.eps2
                    fh.write(f"{x!r} {e.p_hat!r} {(e.ci_high - e.ci_low) / 2!r}\n")


def cmd_lambda_fit(args) -> int:
    with open(args.input) as fh:
        ests = read_sweep_csv(fh)
    if args.eps is not None:
        ests = [e for e in ests if e.params.eps is not None and abs(e.params.eps - args.eps) <= 1e-9 * max(1.0, args.eps)]
        if not ests:
            raise ConfigError(f"no sweep rows at eps={args.eps}")
    fit = fit_lambda(ests, weighted=not args.unweighted)
    _emit_json(args, fit.to_dict())
    return EXIT_OK


def cmd_estimate(args) -> int:
    if args.lambda_ is not None:
        lam = args.lambda_
    elif args.eps_t is not None and args.eps is not None:
        lam = lambda_from_eps(args.eps_t, args.eps)
    else:
        raise ConfigError("give --lambda, or both --eps-t and --eps")
    plan = required_order(lam, args.target)
    if args.format == "text":
        fh = _open_out(args)
        fh.write(_text_header(args))
        fh.write(f"lambda={plan.lambda_:g} target={plan.target_pl:g} n={plan.required_n} "
                 f"distance={2 * plan.required_n + 1} qubits={plan.total_qubits} "
                 f"predicted_pl={plan.predicted_pl:g}\n")
        if fh is not sys.stdout:
            fh.close()
    else:
        _emit_json(args, plan.to_dict())
    return EXIT_OK


def cmd_budget(args) -> int:
    report = budget_report(NoiseParams(args.eps1, args.eps2, args.epsm))
    if args.format == "text":
        fh = _open_out(args)
        fh.write(_text_header(args))
        for name, row in report["components"].items():
            fh.write(f"{name:5s} {row['value']:.4%} target {row['target']:.2%} "
                     f"{'pass' if row['passes'] else 'FAIL'}\n")
        fh.write(f"limiting: {report['limiting_component'] or 'none'}\n")
        if fh is not sys.stdout:
            fh.close()
    else:
        _emit_json(args, report)
    return EXIT_OK


def cmd_pauli(args) -> int:
    report = commutator_report(args.qubits)
    _emit_json(args, report)
    return EXIT_OK if report["ok"] else 1


# ---------------------------------------------------------------- parser

def _add_noise(p: argparse.ArgumentParser, with_grid: bool = False) -> None:
    p.add_argument("--eps", default=None, type=str if with_grid else float,
                   help="uniform error rate" + (" (a:b:k log grid or comma list)" if with_grid else ""))
    p.add_argument("--eps1", type=float, default=None)
    p.add_argument("--eps2", type=float, default=None)
    p.add_argument("--epsm", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lambdaforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file of option defaults (flags still win)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(func=func)
        p.add_argument("--out", default=None)
        return p

    p = add("truth-table", cmd_truth_table, help="classical repetition-code table")
    p.add_argument("--bits", type=int, default=3)
    p.add_argument("--format", choices=["text", "csv", "json"], default="text")

    p = add("layout", cmd_layout, help="JSON description of a code")
    p.add_argument("--code", choices=[k.value for k in CodeKind], default="surface")
    p.add_argument("--order", type=int, default=1)

    p = add("simulate", cmd_simulate, help="write a shot archive")
    p.add_argument("--code", choices=[k.value for k in CodeKind], default="repetition")
    p.add_argument("--order", type=int, default=1)
    _add_noise(p)
    p.add_argument("--data-flip", type=float, default=None, help="code-capacity data flip rate")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)

    p = add("decode", cmd_decode, help="replay an archive through the MWPM decoder")
    p.add_argument("--events", required=True)
    p.add_argument("--code", choices=[k.value for k in CodeKind], required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--weighted", action="store_true")

    p = add("sweep", cmd_sweep, help="P_l over a grid of error rates and orders")
    p.add_argument("--code", choices=[k.value for k in CodeKind], default="repetition")
    p.add_argument("--orders", default="1,2")
    _add_noise(p, with_grid=True)
    p.add_argument("--mode", choices=["circuit", "code_capacity"], default="circuit")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--progress", action="store_true")

    p = add("lambda-fit", cmd_lambda_fit, help="fit Lambda from a sweep CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--unweighted", action="store_true")

    p = add("estimate", cmd_estimate, help="required order and qubit count")
    p.add_argument("--lambda", dest="lambda_", type=float, default=None)
    p.add_argument("--eps-t", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--target", type=float, default=1e-18)
    p.add_argument("--format", choices=["json", "text"], default="json")

    p = add("budget", cmd_budget, help="compare component errors with targets")
    p.add_argument("--eps1", type=float, default=0.0)
    p.add_argument("--eps2", type=float, default=0.0)
    p.add_argument("--epsm", type=float, default=0.0)
    p.add_argument("--format", choices=["json", "text"], default="json")

    p = add("pauli", cmd_pauli, help="commutator consistency report")
    p.add_argument("--check-commutators", action="store_true", default=True)
    p.add_argument("--qubits", type=int, default=2)
    return parser


def _resolve(parser: argparse.ArgumentParser, argv: Sequence[str] | None) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        subparser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    if hasattr(args, "seed") and args.seed is None:
        env = os.environ.get(SEED_ENV)
        args.seed = int(env) if env else 0
    return args


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = _resolve(parser, argv)
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InsufficientStatisticsError as exc:
        print(f"insufficient statistics: {exc}", file=sys.stderr)
        return EXIT_STATS
    except (LambdaForgeError, OSError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
