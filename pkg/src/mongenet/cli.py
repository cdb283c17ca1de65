"""Command line runner.

    python -m mongenet run --preset ex42 --override optimizer.max_iterations=200
    python -m mongenet run --config my.yaml
    python -m mongenet sweep-noise --preset ex46 --stdevs 0 1e-3 1e-2
    python -m mongenet report --dir runs
"""

import argparse
import logging
import sys
from pathlib import Path

from . import config as C
from . import experiment as X
from .errors import UsageError


def _load(args):
    if bool(args.config) == bool(args.preset):
        raise C.ConfigError("config", "give exactly one of --config and --preset")
    if args.config:
        return C.load(args.config, args.override)
    return C.from_preset(args.preset, args.override)


def cmd_run(args):
    cfg = _load(args)
    result, art = X.run(cfg, args.out)
    e = result.errors
    print(f"{cfg.name}: {result.report.termination.value} after {result.report.iterations} "
          f"iterations, loss {result.report.final_loss:.3e}")
    print(f"max {e.max_error:.3e}  average {e.average_error:.3e}  l2 {e.l2_error:.3e}")
    print(f"artifacts in {art.directory}")
    return result.exit_code


def cmd_sweep(args):
    cfg = _load(args)
    out = Path(args.out or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    table = out / "noise_sweep.tsv"
    rows = X.sweep_noise(cfg, args.stdevs, table)
    print("stdev\tmax_error\taverage_error")
    for r in rows:
        print(f"{r['stdev']:g}\t{r['max_error']:.3e}\t{r['average_error']:.3e}")
    print(f"table: {table}")
    return 0


def cmd_report(args):
    rows = X.report_dir(args.dir)
    if not rows:
        print(f"no runs below {args.dir}")
        return 0
    print("\t".join(rows[0]))
    for r in rows:
        print(X.summary_line(r))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="mongenet", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def config_args(sp):
        sp.add_argument("--config", help="YAML experiment config")
        sp.add_argument("--preset", choices=sorted(C.PRESETS))
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted key, e.g. optimizer.max_iterations=500 (repeatable)")
        sp.add_argument("--out", help="artifact directory (default: config output)")

    r = sub.add_parser("run", help="train one experiment and write its artifacts")
    config_args(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep-noise", help="repeat a run for several noise levels")
    config_args(s)
    s.add_argument("--stdevs", nargs="*", type=float, default=[0.0, 1e-3, 1e-2, 1e-1, 1.0])
    s.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="summarize the runs below a directory")
    rep.add_argument("--dir", required=True)
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
