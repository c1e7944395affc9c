"""Command-line front end.

Exit codes: 0 success, 1 usage or validation error, 2 a numerical invariant
failed (quantum bound exceeded, identity residual too large, bound violated).
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

from . import lhv, quantum, sampler, sos, swap
from .bellspec import (
    BellSpec,
    QuantumBoundViolation,
    bell_value,
    classical_bound,
    quantum_bound,
    violation_deficit,
)
from .hilbert import DimensionError

THREADS_ENV = "SINGLET_SELFTEST_THREADS"
SWEEP_COLUMNS = ("n", "k", "noise", "strength", "bell_value", "epsilon", "lhs", "rhs")
ROBUSTNESS_COLUMNS = (
    "n", "k", "noise", "strength", "jitter", "bell_value", "epsilon",
    "jz2_plus_jx2", "bound", "bound_satisfied", "vacuous",
)


class UsageError(Exception):
    pass


class InvariantFailure(Exception):
    def __init__(self, message: str, report):
        super().__init__(message)
        self.report = report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# --- argument types -------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _threads(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("--threads must be at least 1")
    return v


def _spec(args) -> BellSpec:
    return BellSpec(args.n, args.k, tuple(args.phases) if args.phases else None)


def _tol(args, default: float) -> float:
    return default if args.tol is None else args.tol


# --- commands -------------------------------------------------------------------------


def cmd_bounds(args):
    spec = _spec(args)
    out = {"n": spec.n, "k": spec.k, "quantum": quantum_bound(spec)}
    out["classical"] = None if spec.has_phases or spec.n % 2 else classical_bound(spec)
    res = lhv.brute_force_min(spec, budget=args.budget)
    out.update(brute_force=res.min_value, complete=res.complete, witness=res.witness.tolist())
    if out["classical"] is not None and res.complete:
        if abs(res.min_value - out["classical"]) > _tol(args, 1e-9):
            raise InvariantFailure("enumerated minimum disagrees with the closed form", out)
    return out


def _base_state(args, spec: BellSpec):
    if args.state:
        return quantum.load_state(args.state)
    if spec.has_phases:
        return quantum.rotated_singlet(spec.n, spec.phases)
    return quantum.singlet_state(spec.n)


def _noisy(args, spec: BellSpec):
    """State and measurement angles after applying ``--noise``."""
    state = _base_state(args, spec)
    angles = quantum.default_angles(spec.n, spec.k)
    if args.noise:
        noise = quantum.NoiseModel.parse(args.noise, seed=args.seed)
        if noise.kind == "angle_jitter":
            angles = quantum.apply_noise(angles, noise)
        else:
            state = quantum.apply_noise(state, noise)
    return state, angles


def cmd_simulate(args):
    spec = _spec(args)
    state, angles = _noisy(args, spec)
    value = bell_value(quantum.correlator_table(state, angles), spec)
    out = {"n": spec.n, "k": spec.k, "bell_value": value.value, "epsilon": violation_deficit(value)}
    if spec.has_phases:
        out["rotated_spin_moment"] = quantum.rotated_spin_moment(state, spec.phases)
    else:
        out["jz2_plus_jx2"] = quantum.spin_moment_xz(state)
    out["jsq"] = quantum.total_spin(state)
    return out


def cmd_sos_check(args):
    spec = _spec(args)
    dims = tuple(args.dims) if args.dims else (2,) * spec.n
    if len(dims) != spec.n:
        raise ValueError(f"--dims has {len(dims)} entries, need {spec.n}")
    dim = math.prod(dims)
    tol = _tol(args, 1e-10 * dim)
    residuals, min_eigs = [], []
    for t in range(args.trials):
        model = sos.random_blackbox(spec, dims, seed=args.seed + t)
        residuals.append(sos.sos_identity_residual(model))
        min_eigs.append(sos.min_bell_eigenvalue(model))
    out = {
        "n": spec.n, "k": spec.k, "dims": list(dims), "trials": args.trials,
        "max_residual": max(residuals), "tolerance": tol,
        "min_eigenvalue": min(min_eigs), "quantum_bound": quantum_bound(spec),
    }
    if out["max_residual"] > tol:
        raise InvariantFailure("sum-of-squares identity residual above tolerance", out)
    if out["min_eigenvalue"] < quantum_bound(spec) - 1e-9:
        raise InvariantFailure("Bell operator eigenvalue below the quantum bound", out)
    return out


def cmd_swap(args):
    spec = _spec(args)
    state, angles = _noisy(args, spec)
    if args.model:
        model = sos.load_model(args.model)
        if model.spec != spec:
            raise ValueError("model file disagrees with --n/--k/--phases")
    elif args.junk_dim > 1:
        model = sos.embedded_qubit_model(spec, junk_dim=args.junk_dim, angles=angles)
        if state.dims == (2,) * spec.n:
            state = sos.embed_qubit_state(state, args.junk_dim)
    else:
        model = sos.qubit_model(spec, angles)
    report = swap.extraction_report(model, state)
    out = report.to_dict(include_state=args.include_state)
    if not report.bound_satisfied:
        raise InvariantFailure("extracted spin moment exceeds the robustness bound", out)
    return out


def _noise_configs(args):
    for strength in args.strengths:
        for jitter in args.jitters:
            yield strength, jitter


def cmd_robustness_sweep(args):
    rows = []
    failed = False
    for n in args.n_values:
        for k in args.k_values:
            spec = BellSpec(n, k)
            model = sos.qubit_model(spec)
            for cfg, (strength, jitter) in enumerate(_noise_configs(args)):
                state = quantum.singlet_state(n)
                if strength:
                    state = quantum.apply_noise(
                        state, quantum.NoiseModel.parse(f"{args.noise_kind}:{strength}")
                    )
                m = model
                if jitter:
                    noise = quantum.NoiseModel("angle_jitter", jitter, args.seed + cfg)
                    m = sos.qubit_model(spec, quantum.apply_noise(quantum.default_angles(n, k), noise))
                rep = swap.extraction_report(m, state)
                failed |= not rep.bound_satisfied
                rows.append({
                    "n": n, "k": k, "noise": args.noise_kind, "strength": strength,
                    "jitter": jitter, "bell_value": rep.bell_value, "epsilon": rep.epsilon,
                    "jz2_plus_jx2": rep.jz2_plus_jx2, "bound": rep.bound,
                    "bound_satisfied": rep.bound_satisfied, "vacuous": rep.vacuous,
                })
    if failed:
        raise InvariantFailure("robustness bound violated in at least one configuration", rows)
    return rows


def cmd_phases(args):
    if args.phases:
        phases = np.asarray(args.phases, dtype=float)
        if len(phases) != args.n:
            raise ValueError(f"--phases has {len(phases)} entries, need {args.n}")
    else:
        phases = np.random.default_rng(args.seed).uniform(0, 2 * np.pi, size=args.n)
    spec = BellSpec(args.n, args.k, tuple(phases))
    state = quantum.rotated_singlet(args.n, phases)
    value = bell_value(quantum.correlator_table(state, quantum.default_angles(args.n, args.k)), spec)
    return {
        "n": args.n, "k": args.k, "phases": phases.tolist(),
        "bell_value": value.value, "epsilon": violation_deficit(value),
        "phase_statistic": quantum.phase_statistic(state, phases),
        "rotated_spin_moment": quantum.rotated_spin_moment(state, phases),
    }


def cmd_sample(args):
    spec = _spec(args)
    if spec.has_phases:
        raise ValueError("sampling uses the planar settings; phases are not supported here")
    if not args.rounds_out:
        raise ValueError("sample needs --rounds-out PATH for the JSONL round file")
    state, angles = _noisy(args, spec)
    settings, outcomes = sampler.sample_arrays(state, angles, args.rounds, args.seed)
    records = sampler._to_records(settings, outcomes)
    sampler.write_rounds(records, args.rounds_out)
    return {"n": spec.n, "k": spec.k, "rounds": args.rounds, "seed": args.seed,
            "path": args.rounds_out}


def cmd_estimate(args):
    spec = _spec(args)
    rep = sampler.estimate(sampler.read_rounds(args.rounds_file), spec)
    out = rep.to_dict()
    out.update(n=spec.n, k=spec.k, quantum=quantum_bound(spec))
    return out


def cmd_sweep(args):
    rows = []
    for n in args.n_values:
        for k in args.k_values:
            for p in args.strengths:
                state = quantum.singlet_state(n)
                if p:
                    state = quantum.apply_noise(
                        state, quantum.NoiseModel.parse(f"{args.noise_kind}:{p}")
                    )
                value = bell_value(
                    quantum.correlator_table(state, quantum.default_angles(n, k)), BellSpec(n, k)
                )
                lhs, rhs = quantum.eq9_check(state, k)
                rows.append(dict(zip(SWEEP_COLUMNS, (
                    n, k, args.noise_kind, p, value.value, violation_deficit(value), lhs, rhs,
                ))))
    return rows


# --- parser ---------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p.add_argument("--out", help="also write the report to this path")
    p.add_argument("--tol", type=float, help="override the command's default tolerance")
    p.add_argument("--threads", type=_threads, default=os.environ.get(THREADS_ENV, "1"),
                   help=f"worker cap (default from ${THREADS_ENV}, else 1)")
    p.add_argument("--config", help="key=value file; explicit flags take precedence")
    p.add_argument("--seed", type=int, default=0)
    return p


def _nk(p, phases: bool = True):
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    if phases:
        p.add_argument("--phases", type=_float_list)


def _noise_flags(p):
    p.add_argument("--noise", help="kind:strength, kind in depolarizing, dephasing, jitter")
    p.add_argument("--state", help="state JSON file replacing the default singlet")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="singlet-selftest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("bounds", parents=[common], help="classical, quantum and enumerated bounds")
    _nk(p)
    p.add_argument("--budget", type=int, default=lhv.DEFAULT_BUDGET)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", parents=[common], help="Bell value of a (noisy) qubit state")
    _nk(p)
    _noise_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sos-check", parents=[common], help="operator identity on random boxes")
    _nk(p)
    p.add_argument("--dims", type=_int_list)
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(func=cmd_sos_check)

    p = sub.add_parser("swap", parents=[common], help="SWAP extraction report")
    _nk(p)
    _noise_flags(p)
    p.add_argument("--model", help="black-box model JSON file")
    p.add_argument("--junk-dim", type=int, default=1, help="embed qubits in boxes of dim 2*J")
    p.add_argument("--include-state", action="store_true")
    p.set_defaults(func=cmd_swap)

    p = sub.add_parser("robustness-sweep", parents=[common], help="extraction reports over noise")
    p.add_argument("--n-values", type=_int_list, default=[2, 4])
    p.add_argument("--k-values", type=_int_list, default=[3, 4])
    p.add_argument("--noise-kind", default="depolarizing")
    p.add_argument("--strengths", type=_float_list, default=[0.0, 0.02, 0.05, 0.1])
    p.add_argument("--jitters", type=_float_list, default=[0.0, 0.05])
    p.set_defaults(func=cmd_robustness_sweep, columns=ROBUSTNESS_COLUMNS)

    p = sub.add_parser("phases", parents=[common], help="phase-generalized inequality")
    _nk(p)
    p.set_defaults(func=cmd_phases)

    p = sub.add_parser("sample", parents=[common], help="write sampled rounds as JSONL")
    _nk(p)
    _noise_flags(p)
    p.add_argument("--rounds", type=int, default=10**5)
    p.add_argument("--rounds-out", help="JSONL destination")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", parents=[common], help="estimate the Bell value from rounds")
    _nk(p)
    p.add_argument("--rounds-file", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", parents=[common], help="CSV grid of Bell value vs noise")
    p.add_argument("--n-values", type=_int_list, default=[2, 4])
    p.add_argument("--k-values", type=_int_list, default=[3, 4])
    p.add_argument("--noise-kind", default="depolarizing")
    p.add_argument("--strengths", type=_float_list, default=[0.0, 0.01, 0.05, 0.1])
    p.set_defaults(func=cmd_sweep, columns=SWEEP_COLUMNS)
    return parser


def read_config(path) -> dict[str, str]:
    """Plain ``key=value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ValueError(f"{path}:{lineno}: expected key=value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    commands = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in commands), None)
    if known.config and command:
        config = read_config(known.config)
        subparser = commands[command]
        actions = {a.dest: a for a in subparser._actions}
        unknown = sorted(set(config) - set(actions) - {"config"})
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        # string defaults go through each option's type conversion
        subparser.set_defaults(**config)
        for dest in config:
            actions[dest].required = False
    return parser.parse_args(argv)


# --- output ---------------------------------------------------------------------------


def _scalar(v):
    return isinstance(v, (int, float, str, bool)) or v is None


def render(report, fmt: str, columns=None) -> str:
    rows = report if isinstance(report, list) else None
    if fmt == "json":
        return json.dumps(report, indent=2)
    if fmt == "csv":
        rows = rows if rows is not None else [{k: v for k, v in report.items() if _scalar(v)}]
        cols = list(columns) if columns else list(rows[0]) if rows else []
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue().rstrip("\n")
    if rows is not None:
        return "\n".join("  ".join(f"{k}={v}" for k, v in r.items()) for r in rows)
    return "\n".join(f"{k}: {v}" for k, v in report.items())


def _emit(report, args) -> None:
    text = render(report, args.format, getattr(args, "columns", None))
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        report = args.func(args)
    except InvariantFailure as exc:
        _emit(exc.report, args)
        print(f"invariant failed: {exc}", file=sys.stderr)
        return 2
    except QuantumBoundViolation as exc:
        print(f"invariant failed: {exc}", file=sys.stderr)
        return 2
    except (ValueError, DimensionError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(report, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
