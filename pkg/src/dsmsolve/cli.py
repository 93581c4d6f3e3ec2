"""Command-line runner.

Subcommands mirror the solve pipeline: ``gallery`` lists the operators,
``verify`` checks the monotonicity/coercivity hypotheses, ``flow`` runs
a single regularized flow and audits its trace, ``solve`` runs the full
a -> 0 continuation and emits a JSON report.

All randomness derives from --seed through named substreams, so a fixed
configuration reproduces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .continuation import ContinuationSchedule, run_continuation
from .flow import (
    FlowConfig,
    integrate_flow,
    trace_from_csv,
    trace_to_csv,
    verify_decay,
    verify_tail_bound,
    verify_vdot_bound,
)
from .gallery import (
    GALLERY_NAMES,
    check_coercive,
    check_monotone,
    jacobian,
    make_gallery,
    make_operator,
)
from .linalg import min_sym_eig
from .oracle import OracleFailure, oracle_solve
from .validation import subrng, subseed

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def parse_target(spec: str, dim: int, seed: int) -> np.ndarray:
    """Target vector h from a spec string.

    Forms: ``zeros``, ``ones``, ``ones*SCALE``, ``explicit:1,2,3`` (also
    ``explicit:[1,2,3]``), ``seeded_random:SEED:NORM_CAP``.
    """
    if spec == "zeros":
        return np.zeros(dim)
    if spec == "ones" or spec.startswith("ones*"):
        scale = float(spec.split("*", 1)[1]) if "*" in spec else 1.0
        return np.full(dim, scale)
    if spec.startswith("explicit:"):
        body = spec.split(":", 1)[1].strip().strip("[]")
        h = np.array([float(x) for x in body.split(",")])
        if h.shape[0] != dim:
            raise ValueError(f"explicit target has dim {h.shape[0]}, operator needs {dim}")
        return h
    if spec.startswith("seeded_random:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError("seeded_random target needs seeded_random:SEED:NORM_CAP")
        tseed, cap = int(parts[1]), float(parts[2])
        rng = subrng(seed, f"target:{tseed}")
        h = rng.standard_normal(dim)
        n = np.linalg.norm(h)
        if n > cap:
            h *= cap / n
        return h
    raise ValueError(f"unrecognized target spec {spec!r}")


def _merged(args: argparse.Namespace, key: str, default):
    """Flag value if given, else config-file value, else default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    if getattr(args, "config_data", None) and key in args.config_data:
        return args.config_data[key]
    return default


def _flow_config(args) -> FlowConfig:
    return FlowConfig(
        ode_rel_tol=float(_merged(args, "ode_tol", 1e-8)),
        residual_tol=float(_merged(args, "tol", 1e-10)),
        max_time=(lambda m: float(m) if m is not None else None)(_merged(args, "max_t", None)),
    )


def _resolve_operator(args):
    name = _merged(args, "operator", None)
    if name is None:
        raise ValueError("an operator name is required (--operator)")
    dim = int(_merged(args, "dim", 5))
    return make_operator(name, dim)


def cmd_gallery(args) -> int:
    for op in make_gallery(int(_merged(args, "dim", 5))):
        dim_policy = "n=1 fixed" if op.name.startswith("scalar") else "n parameterizable"
        print(
            f"{op.name:22s} dim={op.dim:<3d} ({dim_policy})  "
            f"monotone={op.declared_monotone} "
            f"strictly_monotone={op.declared_strictly_monotone} "
            f"coercive={op.declared_coercive}"
        )
    return EXIT_OK


def cmd_verify(args) -> int:
    op = _resolve_operator(args)
    seed = int(_merged(args, "seed", 1))
    mono = check_monotone(op, subseed(seed, "monotone"), n_pairs=500, radius=5.0, tol=1e-10)
    coer = check_coercive(op, [1.0, 10.0, 100.0], subseed(seed, "coercive"), n_dirs=32)
    rng = subrng(seed, "sym_eig_points")
    eig_min = min(
        min_sym_eig(jacobian(op, rng.standard_normal(op.dim) * 2.0)) for _ in range(20)
    )
    eig_ok = eig_min >= -1e-8

    print(f"monotone : empirical={'pass' if mono.passed else 'FAIL'} "
          f"declared={op.declared_monotone} worst={mono.worst_value:.6e}")
    print(f"coercive : empirical={'pass' if coer.passed else 'FAIL'} "
          f"declared={op.declared_coercive} worst={coer.worst_value:.6e}")
    print(f"jacobian : min symmetric-part eigenvalue over 20 points = {eig_min:.6e} "
          f"({'pass' if eig_ok else 'FAIL'})")

    for label, rep, declared in (
        ("monotone", mono, op.declared_monotone),
        ("coercive", coer, op.declared_coercive),
    ):
        if rep.witness is not None:
            u, v = rep.witness
            print(f"{label} witness u={list(map(float, u))} v={list(map(float, v))}")
        if declared and not rep.passed:
            print(f"declaration falsified: {label}")
    ok = mono.passed and coer.passed and eig_ok
    return EXIT_OK if ok else EXIT_FAIL


def cmd_flow(args) -> int:
    a = _merged(args, "a", None)
    if a is None:
        print("flow requires --a", file=sys.stderr)
        return EXIT_USAGE
    a = float(a)
    cfg = _flow_config(args)

    replay = _merged(args, "replay", None)
    if replay is not None:
        trace = trace_from_csv(replay, a, ode_rel_tol=cfg.ode_rel_tol)
        checks = {"decay": verify_decay(trace), "vdot_bound": verify_vdot_bound(trace)}
        ok = True
        for name, rep in checks.items():
            print(f"{name}: {'pass' if rep.passed else 'FAIL'} (worst {rep.worst_value:.6e})")
            ok = ok and rep.passed
        return EXIT_OK if ok else EXIT_FAIL

    op = _resolve_operator(args)
    seed = int(_merged(args, "seed", 1))
    h = parse_target(str(_merged(args, "target", "ones")), op.dim, seed)
    sol = integrate_flow(op, a, h, np.zeros(op.dim), cfg)

    trace_dir = _merged(args, "trace_dir", ".")
    Path(trace_dir).mkdir(parents=True, exist_ok=True)
    trace_path = Path(trace_dir) / f"{op.name}_a{a:g}.csv"
    trace_to_csv(sol.trace, trace_path)

    checks = {
        "decay": verify_decay(sol.trace),
        "vdot_bound": verify_vdot_bound(sol.trace),
        "tail_bound": verify_tail_bound(op, a, h, sol.trace, sol.u_a),
    }
    print(f"terminated_by={sol.trace.terminated_by} t_end={sol.trace.records[-1][0]:.6f} "
          f"residual={sol.residual:.6e}")
    print(f"u_a = {list(map(float, sol.u_a))}")
    print(f"trace written to {trace_path}")
    ok = sol.converged
    failed = [] if ok else ["convergence"]
    for name, rep in checks.items():
        print(f"{name}: {'pass' if rep.passed else 'FAIL'} (worst {rep.worst_value:.6e})")
        if not rep.passed:
            failed.append(name)
            ok = False
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_solve(args) -> int:
    op = _resolve_operator(args)
    seed = int(_merged(args, "seed", 1))
    h = parse_target(str(_merged(args, "target", "ones")), op.dim, seed)
    sched = ContinuationSchedule(
        a0=float(_merged(args, "a0", 1.0)),
        decay_factor=float(_merged(args, "decay_factor", 0.1)),
        a_min=float(_merged(args, "a_min", 1e-6)),
    )
    cfg = FlowConfig(
        ode_rel_tol=float(_merged(args, "ode_tol", 1e-8)),
        residual_tol=1e-10,
        max_time=(lambda m: float(m) if m is not None else None)(_merged(args, "max_t", None)),
    )
    final_tol = float(_merged(args, "tol", 1e-5))

    trace_dir = _merged(args, "trace_dir", None)
    callback = None
    if trace_dir is not None:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)

        def callback(a, sol):
            rel = f"{op.name}_a{a:.3e}.csv"
            trace_to_csv(sol.trace, Path(trace_dir) / rel)
            return rel

    report = run_continuation(op, h, sched, cfg, minty_seed=subseed(seed, "minty"),
                              stage_callback=callback)

    report_path = _merged(args, "report", None)
    if report_path is not None:
        Path(report_path).parent.mkdir(parents=True, exist_ok=True)
        Path(report_path).write_text(report.to_json() + "\n")
        print(f"report written to {report_path}")

    print(f"final_u = {list(map(float, report.final_u))}")
    print(f"final residual ||F(u)-h|| = {report.final_residual_eq5:.6e}")
    certificates = [
        ("residual", report.final_residual_eq5 <= final_tol),
        ("bound_report", report.bound_report.passed),
        ("minty_report", report.minty_report.passed),
        ("cauchy_report", report.cauchy_report.passed),
    ]
    if _merged(args, "oracle", False):
        try:
            u_ref = oracle_solve(op, h)
            dist = float(np.linalg.norm(report.final_u - u_ref))
            print(f"oracle distance = {dist:.6e}")
            certificates.append(("oracle", dist <= final_tol))
        except OracleFailure as exc:
            print(f"oracle failed: {exc}")
            certificates.append(("oracle", False))
    for name, passed in certificates:
        print(f"{name}: {'pass' if passed else 'FAIL'}")
    failed = [name for name, passed in certificates if not passed]
    if report.failed_stage is not None:
        failed.insert(0, f"stage {report.failed_stage} ({report.stages[-1].terminated_by})")
    if failed:
        print(f"failed: {failed[0]}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dsmsolve", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--operator", choices=GALLERY_NAMES)
        sp.add_argument("--dim", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--target")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--ode-tol", dest="ode_tol", type=float)
        sp.add_argument("--max-t", dest="max_t", type=float)
        sp.add_argument("--trace-dir", dest="trace_dir")
        sp.add_argument("--report")
        sp.add_argument("--config", help="JSON config file; flags override its values")

    sp = sub.add_parser("gallery", help="list gallery operators")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_gallery)

    sp = sub.add_parser("verify", help="check monotonicity/coercivity declarations")
    add_common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("flow", help="run one regularized flow and audit its trace")
    add_common(sp)
    sp.add_argument("--a", type=float)
    sp.add_argument("--replay", help="verify a previously written trace CSV instead")
    sp.set_defaults(func=cmd_flow)

    sp = sub.add_parser("solve", help="full a->0 continuation solve")
    add_common(sp)
    sp.add_argument("--a0", type=float)
    sp.add_argument("--decay-factor", dest="decay_factor", type=float)
    sp.add_argument("--a-min", dest="a_min", type=float)
    sp.add_argument("--oracle", action="store_true", default=None)
    sp.set_defaults(func=cmd_solve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.config_data = {}
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        args.config_data = json.loads(Path(cfg_path).read_text())
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
