"""Command-line entry point.

Subcommands:

* ``run <config.yaml>``  — execute the configured experiment, writing
  ``<out_dir>/metrics.csv`` and ``<out_dir>/config.json``;
* ``crlb <config.yaml>`` — bounds-only tables over the configured sweep;
* ``smoke``              — fast noiseless verification (nonzero exit on any
  failed invariant).
"""

from __future__ import annotations

import argparse
import sys
import time

from .config import ExperimentConfig, load_config
from .harness import run_smoke, run_sweep, write_outputs


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    t0 = time.time()
    records = run_sweep(cfg)
    path = write_outputs(records, cfg)
    print(f"{cfg.experiment}: {len(records)} records -> {path} ({time.time() - t0:.1f} s)")
    return 0


def _cmd_crlb(args) -> int:
    from dataclasses import replace

    cfg = load_config(args.config)
    if cfg.experiment not in ("angle_rmse", "doppler_rmse", "delay_rmse"):
        print("crlb tables need an rmse-family experiment config", file=sys.stderr)
        return 2
    probe = ({"label": "_probe", "ttdu_mode": "none", "i_max": 1},)
    cfg = replace(cfg, variants=probe, trials=min(cfg.trials, 50))
    records = [r for r in run_sweep(cfg) if r.metric.startswith("crlb")]
    path = write_outputs(records, cfg)
    print(f"crlb tables: {len(records)} records -> {path}")
    return 0


def _cmd_smoke(args) -> int:
    cfg = ExperimentConfig(experiment="smoke", seed=args.seed, out_dir=args.out_dir)
    records, ok = run_smoke(cfg)
    for r in records:
        print(f"  {r.metric}: {r.value:.3e}")
    write_outputs(records, cfg)
    print("smoke: PASS" if ok else "smoke: FAIL")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="aerothz", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("config", help="YAML experiment configuration")
    p_run.set_defaults(fn=_cmd_run)

    p_crlb = sub.add_parser("crlb", help="emit bounds-only tables")
    p_crlb.add_argument("config", help="YAML experiment configuration")
    p_crlb.set_defaults(fn=_cmd_crlb)

    p_smoke = sub.add_parser("smoke", help="fast noiseless verification")
    p_smoke.add_argument("--seed", type=int, default=1)
    p_smoke.add_argument("--out-dir", default="results/smoke")
    p_smoke.set_defaults(fn=_cmd_smoke)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
