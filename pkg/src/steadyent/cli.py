"""Command-line front end.

Exit status: 0 on success, 2 on invalid input, 3 when a solver fails.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import dynamics, entanglement, experiments, models, qcore, stabilizable
from .errors import SolverError, ValidationError


def _read_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read JSON from {path}: {exc}") from exc


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_record(args, record: dict):
    """A flat dict as JSON, or as a two-line CSV."""
    if args.format == "json":
        _emit(args, json.dumps(record, indent=2) + "\n")
    else:
        scalars = {k: v for k, v in record.items() if not isinstance(v, (dict, list))}
        _emit(args, experiments.rows_to_csv(list(scalars), [tuple(scalars.values())]))


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad number list {text!r}") from exc


def _two_qubit_measures(rho: np.ndarray) -> dict:
    out = {"concurrence": entanglement.concurrence2(rho)}
    out.update({f"fidelity_{k}": v for k, v in entanglement.bell_fidelities(rho).items()})
    return out


def cmd_steady(args):
    model = dynamics.LindbladModel.from_json(_read_json(args.model))
    rho = dynamics.steady_state(model)
    record = {"purity": qcore.purity(rho)}
    if model.n_qubits == 2:
        record.update(_two_qubit_measures(rho))
    record["state"] = qcore.matrix_to_json(rho)
    _emit_record(args, record)


def cmd_ensemble(args):
    obj = _read_json(args.config) if args.config else {}
    if args.seed is not None:
        obj["seed"] = args.seed
    if args.gamma is not None:
        obj["gamma"] = args.gamma
    cfg = experiments.EnsembleConfig.from_json(obj)
    result = experiments.run_ensemble(cfg, workers=args.workers)
    if args.format == "json":
        payload = {
            "histogram": [dict(zip(("j_over_gamma", "bin_lower", "bin_upper", "count", "density"), r))
                          for r in result.histogram.rows],
            "summary": [dataclasses.asdict(s) | {"above": {str(k): v for k, v in s.above.items()}}
                        for s in result.summary],
        }
        _emit(args, json.dumps(payload, indent=2) + "\n")
    else:
        _emit(args, result.histogram.to_csv())
    if args.summary:
        Path(args.summary).write_text(result.summary_csv())
    if result.failures:
        print(f"warning: {result.failures} solver failures", file=sys.stderr)


def cmd_ising_curve(args):
    grid = _parse_floats(args.grid) if args.grid else experiments.DEFAULT_GRID
    rows = experiments.ising_curve(args.delta_over_j, grid, args.gamma or 1.0)
    if args.format == "json":
        _emit(args, json.dumps([dict(zip(experiments.ISING_COLUMNS, r)) for r in rows], indent=2) + "\n")
    else:
        _emit(args, experiments.rows_to_csv(experiments.ISING_COLUMNS, rows))


def _family_factory(args):
    if args.family == "h2":
        return lambda j: models.optimal_h2(args.delta, args.f, j, args.sign)
    if args.family == "hN":
        return lambda j: models.optimal_hN(args.n, args.delta, args.f, j)
    if args.family == "ising":
        return lambda j: models.ising_hamiltonian(models.IsingParams(args.delta, j))
    return lambda j: models.xxz_hamiltonian(args.delta, j, args.alpha)


def cmd_spectrum(args):
    js = np.linspace(args.j_min, args.j_max, args.points)
    table = models.spectrum_sweep(_family_factory(args), js)
    if args.crossing:
        pair = tuple(int(x) for x in args.crossing.split(","))
        j_star, gap = models.find_avoided_crossing(table, pair)
        print(f"crossing j={j_star:.17g} gap={gap:.17g}", file=sys.stderr)
    if args.format == "json":
        _emit(args, json.dumps({"j": table.j.tolist(), "energies": table.energies.tolist()}) + "\n")
    else:
        _emit(args, table.to_csv())


def cmd_optimal(args):
    rep = experiments.verify_optimal(args.delta_to_f, args.f_to_gamma, args.sign, args.gamma or 1.0)
    _emit_record(args, {
        "concurrence": rep.concurrence,
        "f_psi": rep.f_psi,
        "trace_distance_to_rho_star": rep.trace_distance_to_rho_star,
    })


def cmd_nqubit(args):
    rep = experiments.nqubit_pipeline(
        args.n, args.delta_to_f, args.f_to_gamma, args.gamma or 1.0,
        budget=args.budget if args.budget > 0 else None, seed=args.seed or 0,
    )
    _emit_record(args, {
        "n": rep.n,
        "fidelity_to_target": rep.fidelity_to_target,
        "trace_distance_to_target": rep.trace_distance_to_target,
        "pure_W_concurrence": rep.pure_W_concurrence,
        "mixed_concurrence_bound": rep.mixed_concurrence_bound,
        "crossing_j": rep.crossing_j,
        "crossing_gap": rep.crossing_gap,
    })


def _state_and_channel(args):
    rho = qcore.check_density_matrix(qcore.matrix_from_json(_read_json(args.state)))
    channel = dynamics.spontaneous_decay_channel(qcore.n_qubits(rho), args.gamma or 1.0)
    return rho, channel


def cmd_reconstruct(args):
    rho, channel = _state_and_channel(args)
    h = stabilizable.reconstruct_hamiltonian(rho, channel)
    _emit(args, qcore.dumps_matrix(h) + "\n")


def cmd_quadric_check(args):
    rho, channel = _state_and_channel(args)
    record = {"moment_residuals": stabilizable.moment_residuals(rho, channel)}
    if rho.shape == (4, 4):
        r = qcore.to_bloch(rho)
        gamma = args.gamma or 1.0
        record["quadric_residual"] = stabilizable.quadric_residual(r, stabilizable.build_quadric(channel))
        record["tabulated_quadric_residual"] = stabilizable.quadric_residual(r, stabilizable.tabulated_quadric(gamma))
    if args.format == "json":
        _emit(args, json.dumps(record, indent=2) + "\n")
    else:
        rows = [(f"moment_{n + 2}", v) for n, v in enumerate(record["moment_residuals"])]
        rows += [(k, v) for k, v in record.items() if k != "moment_residuals"]
        _emit(args, experiments.rows_to_csv(("quantity", "value"), rows))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (u64)")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--gamma", type=float, default=None, help="decay rate (default 1)")

    p = argparse.ArgumentParser(prog="steadyent", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("steady", parents=[common], help="steady state of a model JSON")
    s.add_argument("model", help="model JSON path or -")
    s.set_defaults(func=cmd_steady, default_format="json")

    s = sub.add_parser("ensemble", parents=[common], help="GUE ensemble histogram")
    s.add_argument("config", nargs="?", default=None, help="EnsembleConfig JSON path or -")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--summary", default=None, help="also write per-grid summary CSV here")
    s.set_defaults(func=cmd_ensemble)

    s = sub.add_parser("ising-curve", parents=[common], help="closed-form Ising measures")
    s.add_argument("--delta-over-j", type=float, default=0.0)
    s.add_argument("--grid", default=None, help="comma-separated J/gamma values")
    s.set_defaults(func=cmd_ising_curve)

    s = sub.add_parser("spectrum", parents=[common], help="eigenvalues along a coupling sweep")
    s.add_argument("--family", choices=("h2", "hN", "ising", "xxz"), default="h2")
    s.add_argument("--delta", type=float, default=1.0)
    s.add_argument("--f", type=float, default=0.1)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--sign", type=int, choices=(1, -1), default=1)
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--j-min", type=float, default=-2.0)
    s.add_argument("--j-max", type=float, default=2.0)
    s.add_argument("--points", type=int, default=201)
    s.add_argument("--crossing", default=None, help="level pair 'i,i+1' to locate (0-based)")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("optimal", parents=[common], help="two-qubit optimal Hamiltonian check")
    s.add_argument("--delta-to-f", type=float, default=10.0)
    s.add_argument("--f-to-gamma", type=float, default=10.0)
    s.add_argument("--sign", type=int, choices=(1, -1), default=1)
    s.set_defaults(func=cmd_optimal)

    s = sub.add_parser("nqubit", parents=[common], help="N-qubit W-mixture pipeline")
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--delta-to-f", type=float, default=15.0)
    s.add_argument("--f-to-gamma", type=float, default=15.0)
    s.add_argument("--budget", type=int, default=4, help="convex-roof restarts, 0 to skip")
    s.set_defaults(func=cmd_nqubit)

    s = sub.add_parser("reconstruct", parents=[common], help="Hamiltonian stabilizing a state")
    s.add_argument("state", help="state matrix JSON path or -")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("quadric-check", parents=[common], help="stabilizability residuals of a state")
    s.add_argument("state", help="state matrix JSON path or -")
    s.set_defaults(func=cmd_quadric_check)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    # --format is shared between subcommands, so each one's default lives elsewhere
    args.format = args.format or getattr(args, "default_format", "csv")
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
