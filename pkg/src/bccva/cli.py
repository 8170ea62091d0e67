"""Command-line front end: ``bccva run`` and ``bccva grid``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, SweepSpec
from .errors import ConfigError, NumericalError
from .pricer import PROFILE_COLUMNS
from .runner import REHYP_CHOICES, ROW_FIELDS, run, run_grid

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("bccva")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")


def profiles_in_bp(profiles: dict, notional: float) -> dict:
    """Scale every profile column except time to basis points of notional."""
    return {k: (v if k == "time" else 1e4 * np.asarray(v) / notional) for k, v in profiles.items()}


def profile_header() -> list[str]:
    means = [c for c in PROFILE_COLUMNS if c != "p95_eps"]
    return ["time", *PROFILE_COLUMNS, *("se_" + c for c in means)]


def _announce(cfg: RunConfig) -> None:
    d = cfg.swap.direction
    side = "pays fixed, receives floating" if d == "payer" else "receives fixed, pays floating"
    print(f"swap direction: {d.upper()} (investor {side})", file=sys.stderr)


def _load(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    over = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "paths", None) is not None:
        over["paths"] = args.paths
    return cfg.with_overrides(**over)


def cmd_run(args) -> int:
    cfg = _load(args)
    _announce(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    res = run(cfg, workers=args.workers, rehyp=args.rehyp)
    wall = time.perf_counter() - t0
    write_json(out / "report.json", res.to_dict())
    prof = profiles_in_bp(res.profiles, cfg.swap.notional)
    header = profile_header()
    write_csv(out / "profiles.csv", header, zip(*(prof[h] for h in header)))
    write_json(out / "run_meta.json", {
        "seed": cfg.simulation.seed,
        "paths": cfg.simulation.paths,
        "grid_size": len(res.grid),
        "wall_time_s": round(wall, 3),
        "workers": args.workers,
        "version": __version__,
        "config": cfg.to_dict(),
    })
    if not args.no_plots:
        from .plots import plot_profiles

        plot_profiles(prof, out / "profiles.png", title=f"{cfg.swap.direction} swap, exposure profiles (bp)")
    for rep in res.reports:
        b, s = rep.bccva.bp(rep.notional)
        tag = "rehyp" if rep.rehypothecation else "no rehyp"
        print(f"BCCVA ({tag}): {b:.4f} bp  (se {s:.4f})")
    return 0


def cmd_grid(args) -> int:
    cfg = _load(args)
    _announce(cfg)
    if args.sweep:
        sweep = SweepSpec.parse(args.sweep)
    elif cfg.sweep is not None:
        sweep = cfg.sweep
    else:
        raise ConfigError("sweep", "no sweep given on the command line or in the config")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    res = run_grid(cfg, sweep, rehyp=args.rehyp, workers=args.workers)
    wall = time.perf_counter() - t0
    write_csv(out / "grid.csv", ROW_FIELDS, ([getattr(r, f) for f in ROW_FIELDS] for r in res.rows))
    write_json(out / "run_meta.json", {
        "seed": cfg.simulation.seed,
        "paths": cfg.simulation.paths,
        "sweep": sweep.to_dict(),
        "wall_time_s": round(wall, 3),
        "workers": args.workers,
        "version": __version__,
        "config": cfg.to_dict(),
    })
    if not args.no_plots:
        from .plots import plot_grid

        plot_grid(res.rows, out / "grid.png", title=f"{cfg.swap.direction} swap, sweep over {sweep.parameter}")
    for r in res.rows:
        print(json.dumps({k: v for k, v in asdict(r).items()}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bccva", description="Bilateral collateralized CVA Monte Carlo engine")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--paths", type=int)
        sp.add_argument("--out", default="out")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--no-plots", action="store_true", help="skip the PNG figures")

    r = sub.add_parser("run", help="price one scenario")
    common(r)
    r.add_argument("--rehyp", choices=REHYP_CHOICES, default=None,
                   help="override the config's re-hypothecation flag")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("grid", help="sensitivity sweep")
    common(g)
    g.add_argument("--sweep", help="param=start:stop:step or param=v1,v2,...; param in delta, rho_bar, rho_G, nu_C")
    g.add_argument("--rehyp", choices=REHYP_CHOICES, default="both")
    g.set_defaults(func=cmd_grid)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
