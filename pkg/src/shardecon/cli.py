"""Command-line entry points.

``shardecon security`` tabulates committee failure chances over a range of
shard counts. ``shardecon run`` drives one simulation and writes
``intervals.csv``, ``manifest.json`` and, on request, ``oplog.tsv``.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import astuple
from pathlib import Path

from . import __version__
from .config import ConfigError, SimConfig, load_config
from .ledger import format_oplog
from .security import InvalidConfiguration, ShardConfig, hypergeom_tail, jury_failure, threshold_for
from .simulator import COLUMNS, IntervalRecord, Simulation

EXIT_USAGE = 2
EXIT_IO = 3


def _s_range(text: str) -> range:
    """``10`` or ``2-34`` (inclusive)."""
    try:
        if "-" in text:
            lo, hi = (int(x) for x in text.split("-", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected S or LO-HI, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"range must satisfy 1 <= LO <= HI, got {text!r}")
    return range(lo, hi + 1)


def _fmt_log10(x: float) -> str:
    return "-inf" if x == -math.inf else f"{x:.6f}"


def cmd_security(args, out=None) -> int:
    out = out or sys.stdout
    if not 0 <= args.t <= args.n:
        print(f"error: --t must lie in [0, --n], got {args.t}", file=sys.stderr)
        return EXIT_USAGE
    header = ["s", "m", "T", "log10_p"] + (["exact"] if args.exact else [])
    print("\t".join(header), file=out)
    for s in args.s_range:
        m = args.n // s
        if m < 1:
            print(f"error: --s-range reaches s={s}, more shards than nodes", file=sys.stderr)
            return EXIT_USAGE
        if args.model == "classic":
            T = m // 2 + 1
            p = hypergeom_tail(args.n, args.t, m, T)
        else:
            T = threshold_for(m, args.threshold_frac)
            try:
                p = jury_failure(ShardConfig(n=args.n, s=s, m=m, T=T, AD=args.t))
            except InvalidConfiguration as exc:
                print(f"error: --threshold-frac: {exc}", file=sys.stderr)
                return EXIT_USAGE
        row = [str(s), str(m), str(T), _fmt_log10(p.log10)]
        if args.exact:
            row.append(str(p.exact))
        print("\t".join(row), file=out)
    return 0


def format_value(value) -> str:
    """CSV rendering: integers exactly, reals to 12 significant digits."""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def format_row(rec: IntervalRecord) -> list[str]:
    return [format_value(v) for v in astuple(rec)]


def manifest(cfg: SimConfig, paths: dict[str, str]) -> dict:
    return {
        "artifact": "shardecon",
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_text(),
        "outputs": paths,
    }


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.workers is not None:
            overrides["workers"] = args.workers
        if args.intervals is not None:
            overrides["intervals"] = args.intervals
        cfg = cfg.replace(**overrides)
    except ConfigError as exc:
        print(f"error: --config {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: --config: cannot read {args.config}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out)
    paths = {"intervals": str(out / "intervals.csv"), "manifest": str(out / "manifest.json")}
    if args.oplog:
        paths["oplog"] = str(out / "oplog.tsv")
    try:
        out.mkdir(parents=True, exist_ok=True)
        # the manifest goes down first so an interrupted run is still reproducible
        with open(paths["manifest"], "w") as fh:
            json.dump(manifest(cfg, paths), fh, indent=2)
            fh.write("\n")
        sim = Simulation(cfg, record_ops=args.oplog)
        try:
            with open(paths["intervals"], "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(COLUMNS)
                for _ in range(cfg.intervals):
                    writer.writerow(format_row(sim.step()))
        finally:
            sim.close()
        if args.oplog:
            with open(paths["oplog"], "w") as fh:
                fh.write(format_oplog(sim.ledger.oplog))
    except OSError as exc:
        print(f"error: --out {args.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {cfg.intervals} intervals to {paths['intervals']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shardecon", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sec = sub.add_parser("security", help="tabulate shard failure probabilities")
    sec.add_argument("--n", type=int, required=True, help="total node count")
    sec.add_argument("--t", type=int, required=True, help="adversary node count")
    sec.add_argument("--s-range", type=_s_range, required=True, help="shard count S or range LO-HI")
    sec.add_argument("--threshold-frac", type=float, default=0.7,
                     help="jury threshold T = ceil(frac * m) (default 0.7)")
    sec.add_argument("--model", choices=("classic", "jury"), default="jury")
    sec.add_argument("--exact", action="store_true", help="also print the exact rational")

    rn = sub.add_parser("run", help="run a simulation")
    rn.add_argument("--config", required=True, help="key = value config file")
    rn.add_argument("--out", required=True, help="output directory")
    rn.add_argument("--seed", type=int, help="override the config seed")
    rn.add_argument("--workers", type=int, help="override the worker thread count")
    rn.add_argument("--intervals", type=int, help="override the interval count")
    rn.add_argument("--oplog", action="store_true", help="also write the ledger operation log")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "security":
        return cmd_security(args)
    return cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
