"""Command-line front end.

Exit codes: 0 success, 1 a certification failed, 2 usage or I/O error.
Every command accepts ``--config FILE`` holding a JSON object whose keys are
the command's option names (dashes written as underscores); explicit flags
override the file and unknown keys are rejected.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from scipy import constants
from threadpoolctl import threadpool_limits

from . import continuum, dispersion, lattice, operator_algebra as alg, walk

log = logging.getLogger("qwdirac")


class UsageError(Exception):
    pass


def _vec(value, dtype=float):
    if isinstance(value, str):
        value = [x for x in value.replace(";", ",").split(",") if x.strip()]
    return np.array([dtype(x) for x in np.atleast_1d(value)])


def resolve_coins(name: str):
    """Return ``(coin_set, coin_override)`` for a set name or a JSON file path."""
    if name == "dirac":
        return alg.make_dirac_set(), None
    if name == "weyl":
        return alg.make_weyl_set(), None
    if name == "line":
        return alg.make_line_set(), None
    if name == "hadamard":
        return alg.CoinSet((alg.SIGMA_Z,)), walk.HADAMARD
    try:
        return alg.CoinSet.load(name), None
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read coin set {name!r}: {exc}") from exc


def _axis_order(text):
    if isinstance(text, (list, tuple)):
        return tuple(int(a) for a in text)
    lookup = {"X": 0, "Y": 1, "Z": 2}
    try:
        return tuple(lookup[c] for c in str(text).upper())
    except KeyError as exc:
        raise UsageError(f"bad axis order {text!r}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- commands ---------------------------------------------------------------

def cmd_check_algebra(args) -> int:
    if args.set_file:
        try:
            coins = alg.CoinSet.load(args.set_file)
        except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read coin set {args.set_file!r}: {exc}") from exc
    else:
        coins, _ = resolve_coins(args.set)
    reports = []
    if coins.naxes == 3:
        reports.append(alg.check_equal_norm(coins, args.tol))
    reports.append(alg.check_anticommuting(coins, args.tol))
    if coins.q is not None:
        reports.append(alg.check_parity_covariance(coins, args.tol))
        gs = alg.GammaSet(coins.q, tuple(coins.q @ d for d in coins.deltas))
        reports.append(alg.certify_gamma(gs, args.tol))
    ok = all(r.passed for r in reports)
    payload = {"pass": ok, "dim": coins.dim, "reports": [r.to_dict() for r in reports]}
    text = json.dumps(payload, indent=1)
    if args.out:
        (_out_dir(args) / "check_algebra.json").write_text(text + "\n")
    print(text)
    for r in reports:
        if r.passed:
            continue
        if r.tolerance < alg.EPS:
            why = "tolerance below double-precision resolution"
        else:
            why = f"residual {r.residual_max:.3e} >= {r.tolerance:.1e}"
        print(f"FAIL {r.check}: {why}", file=sys.stderr)
    return 0 if ok else 1


def _initial_state(args, params, d):
    kind = args.initial
    rng = np.random.default_rng(args.seed)
    if kind == "file":
        if not args.initial_file:
            raise UsageError("initial=file needs --initial-file")
        try:
            state = lattice.read_state_csv(args.initial_file, params.dx)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read {args.initial_file}: {exc}") from exc
        if state.rep != "position" or state.dims != params.dims or state.n != params.n or state.d != d:
            raise UsageError("initial state file does not match the walk configuration")
        return state
    spinor = _vec(args.spinor, complex) if args.spinor is not None else np.eye(d)[0]
    if spinor.size != d:
        raise UsageError(f"spinor has {spinor.size} entries, coin space has {d}")
    if kind == "delta":
        return lattice.delta_state(params.dims, params.n, spinor, dx=params.dx)
    if kind == "gaussian":
        center = _vec(args.center) if args.center is not None else np.full(params.dims, params.length / 2)
        k0 = _vec(args.k0) if args.k0 is not None else np.zeros(params.dims)
        sigma = args.sigma if args.sigma is not None else params.length / 10
        return lattice.gaussian_packet(params, center, k0, sigma, spinor)
    if kind == "random":
        return lattice.random_state(params.dims, params.n, d, params.dx, rng)
    raise UsageError(f"unknown initial state kind {kind!r}")


def cmd_evolve(args) -> int:
    coins, coin = resolve_coins(args.coin_set)
    dims = args.dims if args.dims is not None else coins.naxes
    params = lattice.WalkParams(dims, args.n, args.dx, args.mass)
    op = walk.StepOperator(params, coins, _axis_order(args.axis_order), coin=coin)
    if args.steps < 0:
        raise UsageError("steps must be non-negative")
    every = args.snapshot_every or max(args.steps, 1)
    if every < 0 or (args.steps and args.steps % every):
        raise UsageError(f"snapshot_every={every} does not divide steps={args.steps}")
    state = _initial_state(args, params, coins.dim)

    out = _out_dir(args)
    norms = [(0, state.norm())]
    lattice.write_state_csv(state, out / "state_000000.csv")
    for step in range(1, args.steps + 1):
        state = walk.step_position(op, state)
        if step % every == 0:
            lattice.write_state_csv(state, out / f"state_{step:06d}.csv")
            norms.append((step, state.norm()))
    with open(out / "norms.csv", "w") as fh:
        fh.write("step,norm\n")
        for step, nrm in norms:
            fh.write(f"{step},{nrm:.17g}\n")
    log.info("final norm after %d steps: %.17g", args.steps, norms[-1][1])
    return 0


CONVERGE_DEFAULTS = {
    1: dict(levels=4, n0=128, dx0=1.0, mass=1.0, k0="0", sigma=12.8, t=800.0, spinor="1,0"),
    3: dict(levels=3, n0=16, dx0=1.0, mass=0.5, k0="0,0,0", sigma=3.2, t=4.0, spinor="1,0,0,0"),
}


def cmd_converge(args) -> int:
    dims = args.dims
    if dims not in CONVERGE_DEFAULTS:
        raise UsageError("dims must be 1 or 3")
    dflt = CONVERGE_DEFAULTS[dims]

    def pick(name):
        v = getattr(args, name)
        return dflt[name] if v is None else v

    coins = alg.make_line_set() if dims == 1 else alg.make_dirac_set()
    if args.coin_set:
        coins, coin = resolve_coins(args.coin_set)
        if coin is not None:
            raise UsageError("convergence needs a set of the form exp(-i theta q)")
    levels = continuum.halving_levels(dims, pick("n0"), pick("dx0"), pick("mass"), pick("levels"))
    length = levels[0].length
    center = _vec(args.center) if args.center is not None else np.full(dims, length / 2)
    packet = continuum.PacketSpec(tuple(center), tuple(_vec(pick("k0"))), pick("sigma"),
                                  tuple(_vec(pick("spinor"), complex)))
    rows = continuum.convergence_scan(levels, packet, pick("t"), coins, _axis_order(args.axis_order))
    text = continuum.convergence_csv(rows)
    (_out_dir(args) / "convergence.csv").write_text(text)
    print(text, end="")
    return 0


def _walk_from_args(args):
    coins, coin = resolve_coins(args.coin_set)
    params = lattice.WalkParams(coins.naxes, args.n, args.dx, args.mass)
    return walk.StepOperator(params, coins, _axis_order(args.axis_order), coin=coin)


def cmd_dispersion(args) -> int:
    if args.coin_set is None:
        args.coin_set = "dirac" if args.dims == 3 else "line"
    op = _walk_from_args(args)
    if op.params.dims != args.dims:
        raise UsageError("coin set does not match --dims")
    if args.dims == 1:
        directions = [np.array([1.0])]
    else:
        directions = [_vec(d) for d in args.directions.split("/")]
    rows = []
    for direction in directions:
        rows.extend(dispersion.ray_sweep(op, direction, args.kmax, args.points))
    text = dispersion.dispersion_csv(rows)
    (_out_dir(args) / "dispersion.csv").write_text(text)
    max_res = max(max(abs(r) for r in row.residual) for row in rows)
    print(json.dumps({"rows": len(rows), "max_abs_residual": max_res}))
    return 0


def cmd_anisotropy(args) -> int:
    op = _walk_from_args(args)
    if op.params.dims != 3:
        raise UsageError("anisotropy needs a 3D coin set")
    a, b = _vec(args.dir_a), _vec(args.dir_b)
    rows = []
    for k in _vec(args.k_mag):
        rows.append((k, a / np.linalg.norm(a), b / np.linalg.norm(b), dispersion.anisotropy(op, k, a, b)))
    text = dispersion.anisotropy_csv(rows)
    (_out_dir(args) / "anisotropy.csv").write_text(text)
    print(text, end="")
    return 0


def cmd_phase_shift(args) -> int:
    if args.p is not None:
        p = args.p
    else:
        p = (args.particle_mass or constants.m_n) * args.v
    scen = dispersion.InterferometerScenario(p=p, v=args.v, L=args.L, dx=args.dx)
    text = dispersion.phase_shift_json(scen)
    if args.out_given:
        (_out_dir(args) / "phase_shift.json").write_text(text + "\n")
    print(text)
    return 0


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=alg.TOL)
    common.add_argument("--threads", type=int, default=None)

    parser = argparse.ArgumentParser(prog="qwdirac", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = sub.choices

    p = sub.add_parser("check-algebra", parents=[common], help="certify a coin set")
    p.add_argument("--set", choices=("dirac", "weyl", "line"), default="dirac")
    p.add_argument("--set-file")
    p.set_defaults(func=cmd_check_algebra)

    p = sub.add_parser("evolve", parents=[common], help="run the walk in position space")
    p.add_argument("--dims", type=int)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--dx", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=0.0)
    p.add_argument("--coin-set", default="hadamard")
    p.add_argument("--axis-order", default="XYZ")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--snapshot-every", type=int, default=None)
    p.add_argument("--initial", choices=("delta", "gaussian", "random", "file"), default="delta")
    p.add_argument("--initial-file")
    p.add_argument("--spinor")
    p.add_argument("--center")
    p.add_argument("--k0")
    p.add_argument("--sigma", type=float)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("converge", parents=[common], help="walk vs continuum convergence scan")
    p.add_argument("--dims", type=int, default=1)
    p.add_argument("--levels", type=int)
    p.add_argument("--n0", type=int)
    p.add_argument("--dx0", type=float)
    p.add_argument("--mass", type=float)
    p.add_argument("--k0")
    p.add_argument("--sigma", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--spinor")
    p.add_argument("--center")
    p.add_argument("--coin-set")
    p.add_argument("--axis-order", default="XYZ")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("dispersion", parents=[common], help="walk dispersion along rays")
    p.add_argument("--dims", type=int, default=3)
    p.add_argument("--kmax", type=float, default=0.5)
    p.add_argument("--points", type=int, default=21)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--dx", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=0.5)
    p.add_argument("--coin-set")
    p.add_argument("--axis-order", default="XYZ")
    p.add_argument("--directions", default="1,0,0/1,1,0/1,1,1",
                   help="slash-separated direction vectors")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("anisotropy", parents=[common], help="direction dependence of the dispersion")
    p.add_argument("--k-mag", default="0.3", help="comma-separated |k| values")
    p.add_argument("--dir-a", default="1,0,0")
    p.add_argument("--dir-b", default="1,1,1")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--dx", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=0.5)
    p.add_argument("--coin-set", default="dirac")
    p.add_argument("--axis-order", default="XYZ")
    p.set_defaults(func=cmd_anisotropy)

    p = sub.add_parser("phase-shift", parents=[common], help="interferometer phase estimate")
    p.add_argument("--v", type=float, default=2200.0, help="velocity [m/s]")
    p.add_argument("--L", type=float, default=1.0, help="arm length [m]")
    p.add_argument("--dx", type=float, default=1.0, help="lattice spacing [m]")
    p.add_argument("--p", type=float, help="momentum [kg m/s]; default neutron mass times v")
    p.add_argument("--particle-mass", type=float, help="particle mass [kg]")
    p.set_defaults(func=cmd_phase_shift)
    return parser


def _apply_config(parser, argv, args):
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    subparser = parser.commands[args.command]
    allowed = {a.dest for a in subparser._actions} - {"help", "config"}
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise UsageError(f"unknown config keys: {unknown}")
    subparser.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            args = _apply_config(parser, argv, args)
        args.out_given = args.out is not None
        if args.out is None:
            args.out = "" if args.command == "check-algebra" else "."
        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
