"""Command-line front end: ``qeraser init|run|report|sweep``.

Exit codes: 0 success, 2 configuration error, 3 physics-contract
violation, 4 ledger/config hash mismatch.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import PRESETS, ConfigSchemaError, dump_config, load_config, preset_config
from .errors import ContractViolation, ImpossibleOutcomeError
from .experiment import analytic_results, duality_sweep, grid, run_sampler, subset_report
from .ledger import Ledger

EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_HASH = 4

DEFAULT_SELECTORS = ("all", "H", "V", "+45", "-45", "HV", "DIAG")


def _dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "out", None):
        cfg = cfg.with_output_dir(args.out)
    return cfg


def cmd_init(args) -> int:
    cfg = preset_config(args.preset, seed=args.seed if args.seed is not None else 1)
    if args.out:
        cfg = cfg.with_output_dir(args.out)
    path = Path(args.config)
    if path.exists() and not args.force:
        print(f"{path} exists; use --force to overwrite", file=sys.stderr)
        return 1
    path.write_text(dump_config(cfg), encoding="utf-8")
    print(path)
    return 0


def cmd_run(args) -> int:
    cfg = _load(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    patterns, report = analytic_results(cfg)
    for stem, p in patterns.items():
        p.to_csv(out / f"{stem}.csv")
    if cfg.sampler is not None:
        events_a, events_b, ledger = run_sampler(cfg)
        events_a.to_csv(out / "events_a.csv")
        events_b.to_csv(out / "events_b.csv")
        ledger.write(out / "ledger.csv")
        report["sampled"] = {
            "seed": cfg.seed,
            "pairs": int(cfg.sampler.pair_count),
            "events_a": len(events_a),
            "events_b": len(events_b),
            "coincidences": len(ledger),
            "subsets": subset_report(cfg, ledger, DEFAULT_SELECTORS, prompt=False)["subsets"],
        }
    (out / "config.yaml").write_text(dump_config(cfg), encoding="utf-8")
    _dump_json(report, out / "report.json")
    print(out / "report.json")
    return 0


def cmd_report(args) -> int:
    ledger_path = Path(args.ledger)
    ledger = Ledger.read(ledger_path)
    args.config = args.config or ledger_path.parent / "config.yaml"
    cfg = _load(args)
    if ledger.config_hash != cfg.hash():
        print(f"config hash mismatch: ledger {ledger.config_hash[:16]} vs config {cfg.hash()[:16]} "
              f"(seed {ledger.seed} vs {cfg.seed})", file=sys.stderr)
        return EXIT_HASH
    selectors = args.selectors or list(DEFAULT_SELECTORS)
    before = ledger_path.read_bytes()
    result = subset_report(cfg, ledger, selectors, prompt=not args.no_prompt)
    result["ledger_unchanged"] = ledger_path.read_bytes() == before
    sys.stdout.write(_dump_json(result))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    angles = cfg.qwp_angles or (np.pi / 4, -np.pi / 4)
    rows = duality_sweep(args.kind, args.points, cfg.source, cfg.geometry, grid(cfg), angles)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"sweep_{args.kind}.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("parameter,V,D,V2_plus_D2\n")
        for r in rows:
            fh.write(",".join(f"{r[k]:.17g}" for k in ("parameter", "V", "D", "V2_plus_D2")) + "\n")
    summary = {"kind": args.kind, "points": int(rows.size),
               "max_V2_plus_D2": float(rows["V2_plus_D2"].max()),
               "bound_ok": bool(np.all(rows["V2_plus_D2"] <= 1 + 1e-9)),
               "file": str(out / f"sweep_{args.kind}.csv")}
    sys.stdout.write(_dump_json(summary))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qeraser", description="Quantum eraser simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="experiment config file (YAML)")
        p.add_argument("--seed", type=int, default=None, help="override the sampler seed (u64)")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("init", help="write a starter config for a preset")
    common(p, config_required=False)
    p.set_defaults(config="qeraser.yaml")
    p.add_argument("--preset", choices=PRESETS, default="eraser")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("run", help="run an experiment and write CSV/JSON outputs")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="sort a ledger post hoc and print subset metrics")
    p.add_argument("ledger")
    p.add_argument("selectors", nargs="*", help="all, H, V, +45, -45, R, L, HV, DIAG, CIRC")
    common(p, config_required=False)
    p.add_argument("--no-prompt", action="store_true", help="skip the acquisition-time comparison runs")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sweep", help="visibility/distinguishability sweep")
    common(p)
    p.add_argument("--kind", choices=("angle", "retardance"), default="angle")
    p.add_argument("--points", type=int, default=33)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigSchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContractViolation, ImpossibleOutcomeError) as exc:
        print(f"physics contract violation: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
