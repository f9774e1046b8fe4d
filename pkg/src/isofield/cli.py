"""``isofield <simulate|verify|modulus|nugget|transform> --config PATH``."""

from __future__ import annotations

import argparse
import sys

from . import harness
from .io import FormatError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isofield", description="Isotropic random fields on compact groups and S^2.")
    p.add_argument("command", choices=sorted(harness.COMMANDS))
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="threads used to draw replicates")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "replicates": args.replicates, "out": args.out, "workers": args.workers}
    try:
        cfg = harness.load_config(args.config, overrides)
        code = harness.COMMANDS[args.command](cfg)
    except (harness.ConfigError, FormatError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return harness.EXIT_CONFIG
    except harness.NumericalValidityError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return harness.EXIT_NUMERIC
    status = {0: "ok", 1: "FAILED", 3: "aliasing detected"}.get(code, str(code))
    print(f"{args.command}: {status} (see {cfg.out}/manifest.json)")
    return code


if __name__ == "__main__":
    sys.exit(main())
