"""``simulate`` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, apply_overrides, dump_config, read_parser, sim_config_from_parser
from .harness import SweepSpec, run_sweep, sweep_from_parser, write_csv
from .kernel import BACKEND
from .overhead import format_budget

log = logging.getLogger("mumimo_sim")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="simulate",
        description="MU-MIMO downlink simulator: packet-size variation and burstiness sweeps.")
    p.add_argument("--config", metavar="FILE", help="INI configuration file")
    p.add_argument("--figure", choices=("fig5", "fig6", "fig7"),
                   help="run the sweep behind one of the three experiments")
    p.add_argument("--out", metavar="CSV", default="results.csv",
                   help="result table (default: %(default)s)")
    p.add_argument("--dump-cycles", metavar="DIR",
                   help="write one cycle-log CSV per run into DIR")
    p.add_argument("--jobs", type=int, default=1, metavar="N",
                   help="run sweep points in N worker processes")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   dest="overrides", help="override a configuration key (repeatable)")
    p.add_argument("--explain-overhead", action="store_true",
                   help="print the per-cycle overhead budget and exit")
    p.add_argument("--emit-default-config", action="store_true",
                   help="print the resolved configuration and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cp = read_parser(path=args.config)
        apply_overrides(cp, args.overrides)
        base = sim_config_from_parser(cp)
        spec = sweep_from_parser(cp, base, args.figure)
        resolved = spec.base if spec is not None else base

        if args.emit_default_config or args.explain_overhead:
            if args.emit_default_config:
                sys.stdout.write(dump_config(resolved))
            if args.explain_overhead:
                print(format_budget(resolved.sounding, resolved.n_antennas))
            return 0

        if args.jobs < 1:
            raise ConfigError("--jobs: must be >= 1")
        if spec is None:
            spec = SweepSpec("custom", (resolved.seed,), (resolved.max_agg,),
                             (resolved.seed,), resolved, param="sim.seed")
        log.info("kernel backend: %s; %d runs", BACKEND,
                 len(spec.values) * len(spec.agg_rates) * len(spec.seeds))
        rows = run_sweep(spec, jobs=args.jobs, dump_dir=args.dump_cycles)
    except ConfigError as exc:
        print(f"simulate: configuration error: {exc}", file=sys.stderr)
        return 2
    except (AssertionError, ValueError) as exc:
        print(f"simulate: invariant violated: {exc}", file=sys.stderr)
        return 1
    write_csv(rows, args.out)
    log.info("wrote %d rows to %s", len(rows), args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
