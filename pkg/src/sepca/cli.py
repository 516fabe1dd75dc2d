"""Command-line interface: ``sepca {converge,moments,validate,simulate}``.

A config file (``--config FILE``) holds ``key = value`` lines with the flag
names as keys (``per-block = 100``); ``#`` starts a comment.  Command-line
flags override it.  ``SEPCA_SEED`` supplies the base seed when neither does.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from sepca import __version__
from sepca.harness import (
    ExperimentConfig,
    ProblemSpec,
    format_csv,
    moment_sweep,
    run_convergence_study,
    summary,
    write_report,
)
from sepca.model import check_assumptions
from sepca.noise import dump_path, path_for
from sepca.oracle import ReferenceDivergenceError
from sepca.scheme import simulate_explicit_euler, simulate_tamed


class UsageError(Exception):
    pass


def parse_levels(text: str) -> tuple[int, ...]:
    """``"8:12"`` -> 2^8..2^12 inclusive; ``"8,10"`` -> 2^8, 2^10."""
    text = str(text).strip()
    try:
        if ":" in text:
            lo, hi = (int(s) for s in text.split(":"))
            exps = range(lo, hi + 1)
        else:
            exps = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad level list {text!r}") from None
    if not exps or any(e < 0 for e in exps):
        raise UsageError(f"bad level list {text!r}")
    return tuple(2**e for e in exps)


def parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in str(text).split(",") if s.strip())
    except ValueError:
        raise UsageError(f"bad integer list {text!r}") from None


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _problem_flags(p):
    g = p.add_argument_group("problem")
    g.add_argument("--problem", choices=["poly", "linear", "gbm"], default="poly")
    g.add_argument("--alpha", type=int, default=3)
    g.add_argument("--a", type=float, default=0.5)
    g.add_argument("--a0", type=float, default=0.0)
    g.add_argument("--b", type=float, default=1.0)
    g.add_argument("--b0", type=float, default=0.0)
    g.add_argument("--x0", type=float, default=1.5)


def _seed_flag(p):
    p.add_argument("--seed", type=int, default=None, help="base seed (falls back to $SEPCA_SEED, then 0)")


def _experiment_flags(p):
    p.add_argument("--horizons", default="1")
    p.add_argument("--levels", default="8:12", help="exponents k of m = 2^k, e.g. 8:12 or 8,10")
    p.add_argument("--blocks", type=int, default=30)
    p.add_argument("--per-block", type=int, default=100)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepca", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sepca {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("converge", help="strong-error convergence table")
    _problem_flags(conv)
    _experiment_flags(conv)
    _seed_flag(conv)
    conv.add_argument("--fine-level", type=int, default=18, help="reference m = 2^k steps per unit time")
    conv.add_argument("--scheme", choices=["tamed", "explicit"], default="tamed")
    conv.add_argument("--sup-over-grid", action="store_true")

    mom = sub.add_parser("moments", help="terminal moment sweep and divergence counts")
    _problem_flags(mom)
    _experiment_flags(mom)
    _seed_flag(mom)
    mom.add_argument("--p", default="2", help="comma-separated moment orders")

    val = sub.add_parser("validate", help="sample the coefficient conditions")
    _problem_flags(val)
    _seed_flag(val)
    val.add_argument("--box-radius", type=float, default=10.0)
    val.add_argument("--samples", type=int, default=10000)
    val.add_argument("--out", default=None)

    sim = sub.add_parser("simulate", help="integrate one trajectory")
    _problem_flags(sim)
    _seed_flag(sim)
    sim.add_argument("--level", type=int, default=10, help="m = 2^k steps per unit time")
    sim.add_argument("--horizon", type=int, default=1)
    sim.add_argument("--scheme", choices=["tamed", "explicit"], default="tamed")
    sim.add_argument("--block", type=int, default=0)
    sim.add_argument("--trajectory", type=int, default=0)
    sim.add_argument("--out", default=None)
    sim.add_argument("--dump-path", default=None, help="write the Brownian increments as binary")

    for p in (conv, mom, val, sim):
        p.add_argument("--config", default=None)
    return parser


def _apply_config(parser, argv):
    """Re-parse with config-file values installed as defaults."""
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    cfg = read_config_file(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in subparser._actions}
    for key in cfg:
        if key not in known or key in ("help", "config"):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
    defaults = {}
    for key, raw in cfg.items():
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(raw)
            except ValueError:
                raise UsageError(f"bad value for {key}: {raw!r}") from None
        else:
            defaults[key] = raw
        if action.choices is not None and defaults[key] not in action.choices:
            raise UsageError(f"bad value for {key}: {raw!r}")
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SEPCA_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"SEPCA_SEED is not an integer: {env!r}") from None
    return 0


def _problem_spec(args) -> ProblemSpec:
    if args.problem == "poly":
        return ProblemSpec.poly(args.alpha, args.a, args.b, args.x0)
    if args.problem == "gbm":
        return ProblemSpec.linear(args.a, 0.0, args.b, 0.0, args.x0)
    return ProblemSpec.linear(args.a, args.a0, args.b, args.b0, args.x0)


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _cmd_converge(args, seed):
    config = ExperimentConfig(
        _problem_spec(args),
        horizons=parse_int_list(args.horizons),
        levels=parse_levels(args.levels),
        reference_level=2**args.fine_level,
        blocks=args.blocks,
        per_block=args.per_block,
        base_seed=seed,
        scheme=args.scheme,
        sup_over_grid=args.sup_over_grid,
        workers=args.workers,
        output=args.out,
    )
    report = run_convergence_study(config)
    if args.out is None:
        sys.stdout.write(format_csv(report))
        sys.stdout.write("# summary = " + json.dumps(summary(report), sort_keys=True) + "\n")
    else:
        write_report(report, args.out)
    return 0


def _cmd_moments(args, seed):
    p_values = [float(s) for s in args.p.split(",") if s.strip()]
    config = ExperimentConfig(
        _problem_spec(args),
        horizons=parse_int_list(args.horizons),
        levels=parse_levels(args.levels),
        reference_level=max(parse_levels(args.levels)),
        blocks=args.blocks,
        per_block=args.per_block,
        base_seed=seed,
        workers=args.workers,
        output=args.out,
    )
    report = moment_sweep(config, p_values)
    payload = {"version": __version__, "config": config.resolved(), "report": report.as_dict()}
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_validate(args, seed):
    spec = _problem_spec(args)
    report = check_assumptions(spec.build(1), args.box_radius, args.samples, seed)
    payload = {
        "version": __version__,
        "config": {"problem": spec.describe(), "box_radius": args.box_radius, "samples": args.samples, "seed": seed},
        "report": report.as_dict(),
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    if report.violations:
        conds = ",".join(sorted({c for c, _ in report.violations}))
        print(f"sepca: assumption check failed for condition(s) {conds}", file=sys.stderr)
        return 1
    return 0


def _cmd_simulate(args, seed):
    spec = _problem_spec(args)
    problem = spec.build(args.horizon)
    m = 2**args.level
    path = path_for(seed, args.block, args.trajectory, problem.noise_dim, args.horizon, m)
    sim = simulate_tamed if args.scheme == "tamed" else simulate_explicit_euler
    traj = sim(problem, path)
    lines = [
        f"# sepca {__version__}",
        f"# problem = {spec.describe()}",
        f"# scheme = {args.scheme}",
        f"# level = {args.level}",
        f"# horizon = {args.horizon}",
        f"# seed = {seed}",
        f"# block = {args.block}",
        f"# trajectory = {args.trajectory}",
        f"# diverged_at = {traj.diverged_at}",
    ]
    if not traj.diverged:
        lines.append("# terminal = " + ",".join(repr(float(v)) for v in traj.terminal))
    lines.append(",".join(["step", "t"] + [f"y_{i + 1}" for i in range(problem.state_dim)]))
    for n, row in enumerate(traj.values):
        lines.append(",".join([str(n), repr(n / m)] + [repr(float(v)) for v in row]))
    _emit("\n".join(lines) + "\n", args.out)
    if args.dump_path:
        with open(args.dump_path, "wb") as fh:
            dump_path(path, fh)
    if traj.diverged:
        print(f"sepca: trajectory diverged at step {traj.diverged_at}", file=sys.stderr)
    return 0


COMMANDS = {
    "converge": _cmd_converge,
    "moments": _cmd_moments,
    "validate": _cmd_validate,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        seed = _resolve_seed(args)
        return COMMANDS[args.command](args, seed)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    except (UsageError, ValueError) as exc:
        print(f"sepca: error: {exc}", file=sys.stderr)
        return 2
    except (ReferenceDivergenceError, OSError) as exc:
        print(f"sepca: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
