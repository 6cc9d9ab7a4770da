"""Command-line entry point: ``pinchmeta <command> [options]``.

Exit codes: 0 success, 1 failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .channel import ControlDecision, Vec3
from .config import AppConfig, load_config
from .errors import ConfigError, PinchMetaError
from .experiments import EXPERIMENTS, SCHEMES, SweepSpec, run_sweep
from .meta import meta_train, online_adapt
from .policy import PolicyObjective, load_checkpoint, save_checkpoint
from .rng import RngStream, label_key
from .stochastic import DiskDraws, evaluate_all
from .tasks import Task

COMMANDS = ("meta-train", "adapt", "eval", "sweep", "oracle-check")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker thread cap")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any configuration key (repeatable)")


def _task_flags(p):
    p.add_argument("--user-x", type=float, required=True)
    p.add_argument("--user-y", type=float, required=True)
    p.add_argument("--radius", type=float, default=0.0)
    p.add_argument("--eve-x", type=float, required=True)
    p.add_argument("--eve-y", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pinchmeta", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"pinchmeta {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("meta-train", help="meta-train a policy initialization")
    _common(p)
    p.add_argument("--method", choices=("maml", "reptile"), default="maml")
    p.add_argument("--checkpoint", help="checkpoint path (default <out>/<method>/checkpoint.bin)")

    p = sub.add_parser("adapt", help="few-shot adaptation on one task")
    _common(p)
    _task_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--steps", type=int, help="adaptation steps K (default: adapt_steps)")

    p = sub.add_parser("eval", help="all metrics for one decision")
    _common(p)
    _task_flags(p)
    p.add_argument("--x-pa", type=float, required=True)
    p.add_argument("--power", type=float, required=True)

    p = sub.add_parser("sweep", help="run experiment sweeps")
    _common(p)
    p.add_argument("--experiment", action="append", choices=EXPERIMENTS + ("all",), required=True)
    p.add_argument("--schemes", help=f"comma-separated subset of {','.join(SCHEMES)}")
    p.add_argument("--maml-checkpoint")
    p.add_argument("--reptile-checkpoint")
    p.add_argument("--grid", help="comma-separated grid values (single experiment only)")

    p = sub.add_parser("oracle-check", help="run the reference-oracle suite")
    _common(p)
    return parser


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(item, "expected KEY=VALUE")
        k, v = item.split("=", 1)
        out[k.strip()] = v
    if args.seed is not None:
        out["seed"] = args.seed
    if args.out is not None:
        out["out_dir"] = args.out
    if args.threads is not None:
        out["threads"] = args.threads
    return out


def _task(args, cfg: AppConfig) -> Task:
    return Task(Vec3(args.user_x, args.user_y, 0.0), args.radius, Vec3(args.eve_x, args.eve_y, 0.0),
                cfg.environment(), cfg.geometry(), cfg.requirements())


def _objective(cfg: AppConfig) -> PolicyObjective:
    dist = cfg.distribution()
    return PolicyObjective(weights=cfg.loss_weights(), y_max=dist.y_max, r_max=dist.r_max)


def _print(*a):
    print(*a, flush=True)


def cmd_meta_train(args, cfg):
    method = args.method
    out = Path(cfg.out_dir) / method
    out.mkdir(parents=True, exist_ok=True)
    ckpt = Path(args.checkpoint) if args.checkpoint else out / "checkpoint.bin"
    obj = _objective(cfg)
    # one stream for both methods: same init and training tasks
    rng = RngStream(cfg.seed, label_key("meta-train"))
    params, trace = meta_train(cfg.meta_config(), cfg.distribution(), rng, obj, method=method)
    save_checkpoint(ckpt, params, obj.spec, cfg.seed)
    trace.to_csv(out / "trace.csv", timing=cfg.timing)
    trace.validation_to_csv(out / "validation.csv")
    first, last = trace.validation[0][1], trace.validation[-1][1]
    _print(f"checkpoint={ckpt}")
    _print(f"meta_steps={len(trace)} val_loss_start={first:.6g} val_loss_end={last:.6g}")
    return 0


def cmd_adapt(args, cfg):
    params, spec, _ = load_checkpoint(args.checkpoint)
    obj = _objective(cfg)
    if spec != obj.spec:
        raise ConfigError("checkpoint", "layer sizes do not match the policy")
    task = _task(args, cfg)
    k = cfg.adapt_steps if args.steps is None else args.steps
    if k < 0:
        raise ConfigError("steps", "must be >= 0")
    rng = RngStream(cfg.seed, label_key("adapt"))
    dec, losses = online_adapt(params, task, cfg.n_pilots, cfg.inner_lr, k, rng, obj)
    _print(f"x_pa={dec.x_pa:.9g} power_w={dec.power_w:.9g}")
    _print("losses=" + ",".join(f"{v:.9g}" for v in losses))
    return 0


def cmd_eval(args, cfg):
    task = _task(args, cfg)
    dec = ControlDecision(args.x_pa, args.power)
    dec.validate(task.geom, task.req.p_max)
    draws = DiskDraws.generate(cfg.n_eval, RngStream(cfg.seed, label_key("eval")))
    m = evaluate_all(dec, task.disk, task.eve, task.env, task.geom, task.req.r_th,
                     task.req.r_sec, draws)
    for k, v in m.items():
        _print(f"{k}={v:.9g}")
    return 0


def cmd_sweep(args, cfg):
    exps = list(EXPERIMENTS) if "all" in args.experiment else list(dict.fromkeys(args.experiment))
    schemes = tuple(s.strip() for s in args.schemes.split(",")) if args.schemes else SCHEMES
    unknown = [s for s in schemes if s not in SCHEMES]
    if unknown:
        raise ConfigError("schemes", f"unknown schemes {unknown}")
    grid = ()
    if args.grid:
        if len(exps) != 1:
            raise ConfigError("grid", "--grid needs exactly one experiment")
        try:
            grid = tuple(float(v) for v in args.grid.split(","))
        except ValueError:
            raise ConfigError("grid", f"cannot parse {args.grid!r}") from None
        if exps[0].endswith("_vs_K"):
            grid = tuple(int(v) for v in grid)
    ckpts = {}
    for name, path in (("maml", args.maml_checkpoint), ("reptile", args.reptile_checkpoint)):
        if name in schemes:
            if not path or not Path(path).is_file():
                raise ConfigError(f"{name}_checkpoint", f"missing checkpoint file: {path}")
            ckpts[name] = path
    dist = cfg.distribution()
    obj = _objective(cfg)
    specs = []
    for e in exps:
        try:
            specs.append(SweepSpec(e, grid, schemes, cfg.scenes_per_point, cfg.seed, cfg.n_eval,
                                   cfg.adapt_steps, cfg.n_pilots, cfg.inner_lr,
                                   baseline=cfg.baseline_settings(), timing=cfg.timing))
        except PinchMetaError as exc:
            raise ConfigError("grid", str(exc)) from None
    for spec in specs:
        records, manifest = run_sweep(spec, ckpts, dist, cfg.out_dir, cfg.threads, obj,
                                      version=__version__)
        _print(f"{spec.experiment}: {len(records)} records -> {manifest.outputs['data']}")
    return 0


def cmd_oracle_check(args, cfg):
    from .oracles import run_oracle_suite
    results = run_oracle_suite(cfg.seed)
    for r in results:
        _print(r.line())
    ok = all(r.passed for r in results)
    _print(f"oracle-check: {'all passed' if ok else 'FAILED'}")
    return 0 if ok else 1


HANDLERS = {
    "meta-train": cmd_meta_train,
    "adapt": cmd_adapt,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "oracle-check": cmd_oracle_check,
}


def dispatch(command: str, args, cfg: AppConfig) -> int:
    if command not in HANDLERS:
        raise UsageError(f"unknown command {command!r}")
    return HANDLERS[command](args, cfg)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        cfg = load_config(args.config, _overrides(args))
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _print(f"config_hash={cfg.hash()} seed={cfg.seed}")
    try:
        return dispatch(args.command, args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (PinchMetaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
