"""Command line entry point: ``solve`` and ``sweep``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config, load_sweep
from .errors import ConfigurationError, MaxwellSchwarzError
from .harness import run_experiment, sweep, write_table

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED = 0, 1, 2


def _parser():
    p = argparse.ArgumentParser(prog="maxwell-schwarz", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("solve", "run one experiment"), ("sweep", "run a parameter sweep")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="flat key = value file")
        sp.add_argument("--out", help="output directory (overrides the config key)")
    return p


def _solve(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_experiment(cfg, out_dir=out)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2))
    row = report.table_row()
    row["status"] = "converged" if report.converged else "not-converged"
    write_table([row], out / "table.csv")
    print(
        f"iterations={report.iterations} converged={report.converged} "
        f"coarse_dim={report.coarse_dim} error_imp={report.error_imp}"
    )
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _sweep(args) -> int:
    configs = load_sweep(args.config)
    out = Path(args.out or configs[0].out)
    rows = sweep(configs, out_dir=out)
    for row in rows:
        print(", ".join(f"{k}={row.get(k, '')}" for k in ("kappa", "method", "iters", "coarse_dim", "status")))
    return EXIT_OK if all(r.get("status") == "converged" for r in rows) else EXIT_NOT_CONVERGED


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _solve(args) if args.command == "solve" else _sweep(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MaxwellSchwarzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
