"""Command-line front end.

Every command prints one JSON report with the top-level keys ``command``,
``input_digest``, ``parameters``, ``results``, ``tolerances`` and ``version``.

Exit codes: 0 success or Controllable, 1 error, 2 SufficientConditionFails,
3 Inconclusive (including a connection search that ran out of budget).

Trajectory files (``simulate --out``) have columns ``time`` followed by the
per-factor coordinates: ``f{k}_x{i}`` for translation factors and
``f{k}_m{i}{j}`` (row-major) for matrix factors.  Cloud files (``reach --out``)
hold one JSON record per endpoint.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import TOL_ALG, TOL_RANK, validate_jacobi
from .checker import controllability_verdict, g0_structure_report
from .decomposition import TOL_SPEC, check_grading, d_decomposition
from .errors import BudgetExhausted, InvalidInput, LiectrlError, ParseError, ValidationFailed
from .reach import composition_check, connect, local_accessibility_test, sample_reachable
from .simulator import DEFAULT_DT, ControlSignal, group_exp, solve
from .specfile import digest, load_spec

COMMANDS = ("validate", "decompose", "check", "simulate", "reach", "connect")


def _default_seed() -> int:
    env = os.environ.get("LIECTRL_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InvalidInput(f"LIECTRL_SEED must be an integer, got {env!r}") from None


def _vector(text: str | None, dim: int, what: str) -> np.ndarray:
    if text is None:
        return np.zeros(dim)
    try:
        v = json.loads(text) if text.lstrip().startswith("[") else [float(x) for x in text.split(",")]
    except ValueError:
        raise InvalidInput(f"{what}: expected comma-separated numbers or a JSON list") from None
    v = np.asarray(v, dtype=float)
    if v.shape != (dim,):
        raise InvalidInput(f"{what}: expected {dim} coordinates, got {v.size}")
    return v


def _signal(text: str | None, m: int, t: float | None) -> ControlSignal:
    """``--control`` is a JSON list of ``[duration, [u_1..u_m]]`` pieces, inline or in a file."""
    if text is None:
        if t is None:
            raise InvalidInput("simulate needs --control or --T")
        return ControlSignal.zero(m, t)
    src = Path(text).read_text() if os.path.exists(text) else text
    try:
        sig = ControlSignal.from_json(json.loads(src))
    except (ValueError, TypeError, IndexError):
        raise InvalidInput("--control: expected [[duration, [u_1, ..., u_m]], ...]") from None
    if t is not None:
        if t > sig.duration + 1e-12:
            raise InvalidInput(f"--T {t} exceeds the control duration {sig.duration}")
        if t < sig.duration:
            sig = sig.split(t)[0]
    return sig


def _tolerances(args) -> dict:
    return {"tol_alg": args.tol_alg, "tol_spec": args.tol_spec, "tol_rank": args.tol_rank, "dt": args.dt}


def cmd_validate(spec, args):
    sys_, r = spec.system, spec.realization
    from .algebra import validate_derivation

    jac = validate_jacobi(sys_.algebra, args.tol_alg)
    ok_d, res_d = validate_derivation(sys_.algebra, sys_.derivation, args.tol_alg)
    results = {
        "passed": bool(jac.passed and ok_d),
        "jacobi_residual": jac.residual,
        "leibniz_residual": res_d,
        "embedding_residuals": {k: float(v) for k, v in r.residuals.items()},
        "range": sys_.control_range.to_json(),
        "realization": list(r.kinds),
    }
    return results, {}, 0 if results["passed"] else 1


def cmd_decompose(spec, args):
    s = spec.system
    dec = d_decomposition(s.derivation, args.tol_spec)
    grading = check_grading(s.algebra, s.derivation, dec)
    results = {
        "spectrum": dec.spectrum.to_list(),
        "dims": dec.dims(),
        "g_plus": dec.g_plus.to_list(),
        "g_minus": dec.g_minus.to_list(),
        "g_zero": dec.g_zero.to_list(),
        "g_kernel": dec.g_kernel.to_list(),
        "grading_residual": grading.max_residual,
        "g0_structure": g0_structure_report(s, args.tol_spec).to_json(),
    }
    return results, {}, 0


def cmd_check(spec, args):
    v = controllability_verdict(spec.system, args.tol_spec, args.tol_rank)
    return v.to_json(), {}, v.exit_code


def _write_rows(path: Path, columns, rows):
    if path.suffix == ".csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            w.writerows(rows)
    else:
        with path.open("w") as fh:
            for row in rows:
                fh.write(json.dumps(dict(zip(columns, row))) + "\n")


def cmd_simulate(spec, args):
    s, r = spec.system, spec.realization
    sig = _signal(args.control, s.n_controls, args.T)
    traj = solve(r, s, r.for_system(s).identity(), sig, dt=args.dt, stride=args.stride)
    if args.out:
        _write_rows(Path(args.out), traj.columns(), traj.rows())
    final = traj.final
    results = {
        "duration": sig.duration,
        "samples": len(traj),
        "final_state": r.flat(final).tolist(),
        "columns": traj.columns(),
        "invariant_residuals": {k: float(v) for k, v in r.invariant_residuals(final).items()},
        "output": args.out,
    }
    params = {"control": sig.to_json(), "T": sig.duration, "stride": args.stride, "out": args.out}
    return results, params, 0


def cmd_reach(spec, args):
    s, r = spec.system, spec.realization
    box = None if args.box is None else np.tile([-args.box, args.box], (s.n_controls, 1))
    cloud = sample_reachable(s, r, args.tau, args.N, seed=args.seed, pieces=args.pieces, dt=args.dt, box=box)
    acc = local_accessibility_test(cloud)
    if args.out:
        with open(args.out, "w") as fh:
            for rec in cloud.records():
                fh.write(json.dumps(rec) + "\n")
    results = {"accessibility": acc.to_json(), "points": len(cloud), "dropped": cloud.dropped, "output": args.out}
    if args.composition:
        results["composition"] = composition_check(
            s, r, args.tau, args.tau, min(args.N, 100), seed=args.seed, dt=args.dt
        ).to_json()
    params = {"tau": args.tau, "N": args.N, "seed": args.seed, "pieces": args.pieces, "box": cloud.box.tolist()}
    return results, params, 0 if acc.passed else 3


def cmd_connect(spec, args):
    s, r = spec.system, spec.realization.for_system(spec.system)
    x = _vector(args.from_, s.dim, "--from")
    y = _vector(args.to, s.dim, "--to")
    g, h = group_exp(r, x), group_exp(r, y)
    params = {"from": x.tolist(), "to": y.tolist(), "budget": args.budget, "seed": args.seed}
    try:
        res = connect(s, r, g, h, budget=args.budget, seed=args.seed, dt=args.dt)
    except BudgetExhausted as e:
        out = e.best.to_json()
        out["note"] = "search heuristic exhausted its budget; this is inconclusive evidence"
        return out, params, 3
    return res.to_json(), params, 0


HANDLERS = {
    "validate": cmd_validate,
    "decompose": cmd_decompose,
    "check": cmd_check,
    "simulate": cmd_simulate,
    "reach": cmd_reach,
    "connect": cmd_connect,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="liectrl", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"liectrl {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", help="system specification (JSON)")
    common.add_argument("--tol-alg", type=float, default=TOL_ALG)
    common.add_argument("--tol-spec", type=float, default=TOL_SPEC)
    common.add_argument("--tol-rank", type=float, default=TOL_RANK)
    common.add_argument("--dt", type=float, default=DEFAULT_DT)
    common.add_argument("--report", help="also write the report to this file")
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "simulate":
            sp.add_argument("--control", help="JSON pieces [[duration, [u...]], ...] or a file holding them")
            sp.add_argument("--T", type=float, help="duration (zero control when --control is absent)")
            sp.add_argument("--stride", type=int, default=1, help="keep every n-th step")
            sp.add_argument("--out", help="trajectory file (.csv or .jsonl)")
        elif name == "reach":
            sp.add_argument("--tau", type=float, default=1.0)
            sp.add_argument("--N", type=int, default=2000)
            sp.add_argument("--pieces", type=int, default=8)
            sp.add_argument("--seed", type=int, default=None)
            sp.add_argument("--box", type=float, help="sample from [-box, box] on every channel")
            sp.add_argument("--composition", action="store_true", help="also run the composition check")
            sp.add_argument("--out", help="cloud file (.jsonl)")
        elif name == "connect":
            sp.add_argument("--from", dest="from_", help="algebra coordinates of g, mapped by exp (default e)")
            sp.add_argument("--to", help="algebra coordinates of h, mapped by exp (default e)")
            sp.add_argument("--budget", type=int, default=100_000)
            sp.add_argument("--seed", type=int, default=None)
    return p


def _report(command, dig, params, results, tolerances) -> dict:
    return {
        "command": command,
        "input_digest": dig,
        "parameters": params,
        "results": results,
        "tolerances": tolerances,
        "version": __version__,
    }


def run(argv=None) -> tuple[dict, int]:
    return _run(build_parser().parse_args(argv))


def _run(args) -> tuple[dict, int]:
    tolerances = _tolerances(args)
    params = {"spec": args.spec}
    dig = None
    try:
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        raw = Path(args.spec).read_bytes() if os.path.exists(args.spec) else None
        dig = digest(raw) if raw is not None else None
        spec = load_spec(args.spec, args.tol_alg)
        results, extra, code = HANDLERS[args.command](spec, args)
        params.update(extra)
    except LiectrlError as e:
        err = {"code": e.code, "message": str(e)}
        if isinstance(e, ValidationFailed):
            err["residuals"] = {k: float(v) for k, v in e.residuals.items()}
        if isinstance(e, ParseError):
            err["path"] = e.path
        return _report(args.command, dig, params, {"error": err}, tolerances), 1
    except OSError as e:
        err = {"code": "cli.io_error", "message": str(e)}
        return _report(args.command, dig, params, {"error": err}, tolerances), 1
    return _report(args.command, dig, params, results, tolerances), code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    report, code = _run(args)
    text = json.dumps(report, indent=2)
    print(text)
    if args.report:
        Path(args.report).write_text(text + "\n")
    if code == 1:
        print(f"liectrl: {report['results']['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
