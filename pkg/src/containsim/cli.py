"""Command-line front end: ``run``, ``sweep`` and ``ingest``.

Values are layered preset < ``--config`` file < individual ``--<field>`` flags.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import (DEFAULT_PRESET, FIELD_NAMES, MASK_POLICIES, PRESETS, ConfigError,
                     build_config, load_config_file)
from .harness import SweepSpec, aggregate, emit_outputs, run_sweep, runs_to_csv
from .infra import HealthRegistry, ValidationError
from .orchestrator import Simulation
from .sensing import DetectionParseError, ingest_detection_stream, serialize_frames

log = logging.getLogger("containsim")


class UsageError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    p.add_argument("--preset", default=DEFAULT_PRESET, help=f"one of {sorted(PRESETS)}")
    p.add_argument("--config", type=Path, help="JSON file with SimConfig fields")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("-v", "--verbose", action="store_true")
    for name in FIELD_NAMES:
        if name == "rng_seed" or (sweep and name in ("population", "mask_policy")):
            continue
        p.add_argument(f"--{name}", f"--{name.replace('_', '-')}", dest=f"cfg_{name}",
                       metavar="VALUE", default=None)
    if sweep:
        p.add_argument("--population", default="500,1000,1500,2000,2500",
                       help="comma-separated, strictly increasing")
        p.add_argument("--seeds", default="20",
                       help="a count N (seeds base..base+N-1) or a comma-separated list")
        p.add_argument("--seed", type=int, default=0, help="base seed when --seeds is a count")
        p.add_argument("--scenarios", default="both",
                       help="both, all-masked, none-masked, or a comma list")
        p.add_argument("--jobs", type=int, default=1)
    else:
        p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="containsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one seeded scenario -> ledger + metrics")
    _add_common(run)
    run.add_argument("--emit-detections", action="store_true",
                     help="also write the synthetic detection stream")
    run.add_argument("--emit-telemetry", action="store_true",
                     help="also write per-agent wearable records (large)")

    sweep = sub.add_parser("sweep", help="population x scenario x seed replications")
    _add_common(sweep, sweep=True)

    ingest = sub.add_parser("ingest", help="drive the pipeline from a detection stream")
    _add_common(ingest)
    ingest.add_argument("--input", required=True, help="detection JSON-lines file, or '-'")
    ingest.add_argument("--registry", type=Path, help="JSON list of confirmed agent ids")
    return parser


def _config_from(args, extra: Optional[dict] = None):
    file_values = load_config_file(args.config) if args.config else None
    overrides = {name: getattr(args, f"cfg_{name}") for name in FIELD_NAMES
                 if getattr(args, f"cfg_{name}", None) is not None}
    if getattr(args, "seed", None) is not None and args.command != "sweep":
        overrides["rng_seed"] = args.seed
    if extra:
        overrides.update(extra)
    return build_config(args.preset, file_values, overrides)


def _prepare_out(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise UsageError(f"output path {path} is not writable: {exc}") from None
    return path


def _tag(cfg) -> str:
    return f"pop{cfg.population}_{cfg.mask_policy}_seed{cfg.rng_seed}"


def _write_run(out: Path, tag: str, sim: Simulation) -> None:
    (out / f"ledger_{tag}.jsonl").write_text(sim.ledger.dumps())
    (out / f"metrics_{tag}.csv").write_text(sim.metrics.to_csv())


def cmd_run(args) -> int:
    cfg = _config_from(args)
    out = _prepare_out(args.out)
    sim = Simulation(cfg, record_telemetry=False)
    sim.capture_frames = args.emit_detections
    if args.emit_telemetry:
        sim.telemetry.keep_records = True
    sim.run()
    tag = _tag(cfg)
    _write_run(out, tag, sim)
    if args.emit_detections:
        (out / f"detections_{tag}.jsonl").write_text(
            "".join(line + "\n" for line in serialize_frames(sim.captured)))
    if args.emit_telemetry:
        with open(out / f"telemetry_{tag}.jsonl", "w") as fh:
            sim.telemetry.dump(fh)
    final = sim.metrics.final()
    log.info("run %s: %s", tag, final)
    print(" ".join(f"{k}={v}" for k, v in final.items()))
    return 0


def _parse_list(text: str, cast=int) -> list:
    return [cast(v) for v in text.split(",") if v.strip()]


def cmd_sweep(args) -> int:
    cfg = _config_from(args)
    seeds = _parse_list(args.seeds)
    if "," not in args.seeds:
        seeds = list(range(args.seed, args.seed + seeds[0]))
    if args.scenarios == "both":
        scenarios = MASK_POLICIES
    else:
        scenarios = tuple(_parse_list(args.scenarios, str))
    try:
        spec = SweepSpec("population", tuple(_parse_list(args.population)), tuple(seeds),
                         tuple(scenarios))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    # validate every sweep point up front
    for v in spec.values:
        cfg.replace(population=v)
    out = _prepare_out(args.out)
    results = run_sweep(cfg, spec, jobs=args.jobs)
    rows = aggregate(results)
    ext = "csv" if args.format == "csv" else "json"
    (out / f"summary.{ext}").write_text(emit_outputs(rows, args.format))
    (out / "runs.csv").write_text(runs_to_csv(results))
    sys.stdout.write(emit_outputs(rows, args.format))
    return 0


def cmd_ingest(args) -> int:
    cfg = _config_from(args)
    out = _prepare_out(args.out)
    registry = HealthRegistry.from_file(args.registry) if args.registry else None
    if args.input == "-":
        lines = sys.stdin.read().splitlines()
    else:
        try:
            lines = Path(args.input).read_text().splitlines()
        except OSError as exc:
            raise UsageError(f"cannot read {args.input}: {exc}") from None
    probe = Simulation(cfg.replace(horizon=0.0))
    frames = ingest_detection_stream(lines, known_cameras=probe.zones_by_id)
    sim = Simulation(cfg, frames=frames, registry=registry)
    sim.run()
    tag = "ingest_" + _tag(cfg)
    _write_run(out, tag, sim)
    print(" ".join(f"{k}={v}" for k, v in sim.metrics.final().items()))
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "ingest": cmd_ingest}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DetectionParseError, ValidationError, UsageError) as exc:
        print(f"containsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
