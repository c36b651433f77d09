"""Command-line entry point.

Subcommands: constants (well-constants table), run (one scenario), sweep
(one config key over several values), check (hypothesis ledger only, no
time stepping), bench (kernel backend comparison).  Exit codes: 0 all
checks in scope passed, 1 violations, 2 configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, KEY_TABLE, RunConfig, load_config, parse_config


def _apply_overrides(cfg: RunConfig, pairs) -> RunConfig:
    if not pairs:
        return cfg
    text = "\n".join(pairs)
    # reuse the file parser so overrides get identical validation
    from .config import config_lines
    base = "\n".join(config_lines(cfg))
    return parse_config(base + "\n" + text, source="<override>")


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return _apply_overrides(cfg, args.override)


def _cmd_constants(args) -> int:
    from .harness import build_model
    from .wellconstants import compute_well_constants

    cfg = _load(args)
    mesh, params = build_model(cfg)
    wc = compute_well_constants(mesh, params, n_dirs=cfg.n_dirs,
                                n_starts=cfg.n_starts, max_iter=cfg.maxiter,
                                seed=cfg.seed)
    print(wc.table())
    return 0


def _cmd_check(args) -> int:
    from . import blowup as bl
    from .harness import (
        _stability_ledger, build_model, classify_record, resolve_initial,
    )
    from .functionals import classify_well
    from .wellconstants import compute_well_constants

    cfg = _load(args)
    mesh, params = build_model(cfg)
    wc = compute_well_constants(mesh, params, n_dirs=cfg.n_dirs,
                                n_starts=cfg.n_starts, max_iter=cfg.maxiter,
                                seed=cfg.seed)
    initial, info = resolve_initial(cfg, mesh, params, wc)
    print(f"initial data: preset {info.name}, amplitude {info.amplitude:.10g}")
    if cfg.scenario == "blowup_negative":
        rep = bl.check_hypotheses(initial, wc, mesh, params, bl.NEGATIVE)
    elif cfg.scenario == "blowup_positive_W2":
        rep = bl.check_hypotheses(initial, wc, mesh, params, bl.POSITIVE)
    else:
        cls = classify_well(initial.u, initial.w, mesh, params, wc.depth_lb)
        rep = _stability_ledger(initial, wc, mesh, params, cls)
    for line in rep.lines():
        print(line)
    return 0 if rep.all_passed else 1


def _cmd_run(args) -> int:
    from .harness import run_scenario

    cfg = _load(args)
    result = run_scenario(cfg)
    if result.hypothesis_report is not None:
        for line in result.hypothesis_report.lines():
            print(line)
    for c in result.checks:
        print(c.line())
    for name, path in result.paths.items():
        print(f"wrote {name}: {path}")
    if result.record.unreliable:
        print("WARNING: residual budget violated after all halvings")
    return 0 if result.passed else 1


def _cmd_sweep(args) -> int:
    from .harness import sweep

    cfg = _load(args)
    values = [v for v in args.values.split(",") if v]
    if not values:
        raise ConfigError("sweep needs a nonempty comma-separated value list")
    if args.key not in KEY_TABLE:
        raise ConfigError(f"unknown sweep key {args.key!r}")
    rows = sweep(cfg, args.key, values, max_workers=args.workers)
    for row in rows:
        print(f"member {row['member']:3d}  {args.key}={row['value']}  "
              f"passed={row['passed']}  termination={row['termination']}  "
              f"t_blow={row['t_blow']}")
    print(f"summary: {cfg.out_dir}/summary.csv")
    return 0 if all(r["passed"] for r in rows) else 1


def _cmd_bench(args) -> int:
    from .bench import run_bench

    print(run_bench(n=args.n, dim=args.dim, repeats=args.repeats))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="waveplate",
        description="Coupled wave-plate energy laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="key=value config file")
        p.add_argument("-o", "--override", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key")

    p = sub.add_parser("constants", help="compute and print the well constants")
    common(p)
    p.set_defaults(fn=_cmd_constants)

    p = sub.add_parser("check", help="evaluate scenario hypotheses, no stepping")
    common(p)
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("run", help="run one scenario end to end")
    common(p)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep", help="run one scenario per value of a key")
    common(p)
    p.add_argument("--key", required=True, help="config key to vary")
    p.add_argument("--values", required=True,
                   help="comma-separated values for the key")
    p.add_argument("--workers", type=int, default=None,
                   help="process pool size (default: cpu count)")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("bench", help="compare kernel backends")
    p.add_argument("--n", type=int, default=129)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--repeats", type=int, default=7)
    p.set_defaults(fn=_cmd_bench)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        from .mesh import MeshError
        from .params import InvalidParams
        from .presets import PresetError
        if isinstance(exc, (MeshError, InvalidParams, PresetError, ValueError)):
            print(f"configuration error: {exc}", file=sys.stderr)
            return 2
        raise


if __name__ == "__main__":
    sys.exit(main())
