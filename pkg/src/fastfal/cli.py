"""`fast` command line: thin dispatch over the library and service.

Subcommands: run, gen-synth, inspect, sweep, serve. Exit codes: 0 on
success, 2 for configuration errors, 3 for data errors.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config, parse_pairs
from .datastore import gen_synthetic, load_store, save_store
from .errors import ConfigError, DataError, FalError
from .orchestrator import emit_metrics, run_experiment, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg.out_dir = args.out
    if cfg.out_dir is None:
        raise ConfigError("no output directory (set output.dir or pass --out)")
    trace, ledger = run_experiment(cfg)
    paths = emit_metrics(trace, ledger, cfg.out_dir)
    print(f"final_acc={trace.final_acc:.4f} total_mb={ledger.total_mb:.2f} "
          f"rounds={trace.round_count} budget_consumed={trace.budget_consumed}")
    print(f"metrics: {paths['metrics']}")
    return EXIT_OK


def _cmd_gen_synth(args) -> int:
    store = gen_synthetic(
        c=args.classes, per_class=args.per_class, d=args.dim,
        sigma=args.sigma, seed=args.seed,
    )
    save_store(store, args.out)
    print(f"wrote {args.out}: n={store.n} d={store.d} c={store.c}")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    store = load_store(args.file)
    hist = store.class_histogram()
    print(f"{args.file}: n={store.n} d={store.d} c={store.c}")
    for cls, count in enumerate(hist):
        print(f"  class {cls}: {count}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        pairs = parse_pairs(fh.read())
    values = [v for v in args.values.split(",") if v]
    if not values:
        raise ConfigError("no sweep values given")
    out_dir = args.out or pairs.get("output.dir")
    if out_dir is None:
        raise ConfigError("no output directory (set output.dir or pass --out)")
    results = run_sweep(pairs, args.param, values, out_dir)
    for rec in results:
        print(f"{args.param}={rec['value']}: final_acc={rec['final_acc']:.4f} "
              f"total_mb={rec['total_mb']:.2f}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fast",
        description="Two-pass federated active learning simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", help="override output.dir")
    p_run.set_defaults(func=_cmd_run)

    p_gen = sub.add_parser("gen-synth", help="generate a synthetic embedding store")
    p_gen.add_argument("--classes", type=int, required=True)
    p_gen.add_argument("--per-class", type=int, required=True)
    p_gen.add_argument("--dim", type=int, required=True)
    p_gen.add_argument("--sigma", type=float, required=True)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_gen_synth)

    p_ins = sub.add_parser("inspect", help="print a store's header and class histogram")
    p_ins.add_argument("file")
    p_ins.set_defaults(func=_cmd_inspect)

    p_sweep = sub.add_parser("sweep", help="run one experiment per parameter value")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--out", help="override output.dir")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8321)
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
