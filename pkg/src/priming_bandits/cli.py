"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 run-time contract violation.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, parse_config
from .env import ContractViolation
from .presets import PRESETS, apply_overrides, run_config, run_preset

log = logging.getLogger("priming_bandits")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="priming-bandits",
                                description="Monte-Carlo regret experiments for bandits with priming effects.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a JSON experiment config")
    src.add_argument("--preset", choices=PRESETS, help="built-in experiment")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--runs", type=int, help="Monte-Carlo replications per policy")
    p.add_argument("--threads", type=int, help="worker processes; never changes output bytes")
    p.add_argument("--out", help="output directory")
    p.add_argument("--horizon", type=int, help="override the horizon T")
    p.add_argument("--diagnostics", action="store_true", default=None,
                   help="also write per-round diagnostic traces for replication 0")
    return p


def _print_summary(result: dict) -> None:
    for label, res in result["results"].items():
        if isinstance(res, dict) and "histogram" in res:
            print(f"{label}: mean same-arm count {res['histogram'].mean_count():.4f}")
            continue
        for name, curve in res.items():
            print(f"{label} {name}: final regret {curve.final:.2f} ± {curve.final_stderr:.2f}")
    print(f"wrote {result['out_dir']}")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    overrides = {"runs": args.runs, "threads": args.threads, "output_dir": args.out,
                 "horizon": args.horizon, "diagnostics": args.diagnostics}
    try:
        if args.preset:
            result = run_preset(args.preset, 1 if args.seed is None else args.seed, overrides)
        else:
            cfg = parse_config(args.config)
            if args.seed is not None:
                overrides["seed"] = args.seed
            seed = overrides.pop("seed", None)
            cfg = apply_overrides(cfg, overrides)
            if seed is not None:
                cfg.seed = seed
            result = run_config(cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except ContractViolation as exc:
        log.error("contract violation: %s", exc)
        return 3
    _print_summary(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
