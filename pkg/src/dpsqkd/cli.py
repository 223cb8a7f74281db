"""Batch experiment runner.

Reads a JSON config naming experiments, runs them with fully seeded
randomness, and writes one CSV (or JSON) table per experiment plus a
stdout summary. All randomness flows from the single master seed; a fixed
config and seed reproduce byte-identical output files.

Config format::

    {
      "seed": 7,
      "defaults": {"rounds": 20000, "mean_photons_return": 0.5},
      "experiments": [
        "baseline",
        {"name": "efficiency_scan", "stages": [1, 2, 3], "rounds": 50000},
        {"name": "attack_demo", "sample_prob": 0.2},
        {"name": "birefringence_sweep"},
        {"name": "truth_table"}
      ]
    }

Experiment entries are either a bare name or an object with ``name`` plus
session overrides. Recognized session keys: n_stages, rounds,
source_mean_photons, mean_photons_return, sample_prob, decoy_prob,
energy_tolerance, disclose_fraction, max_check_error, max_qber,
quantum_efficiency, dark_count_prob, double_click_policy, loss_db,
birefringence_mode, channel_seed. ``efficiency_scan`` also accepts
``stages`` (list of cascade sizes, default 1..6).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channel import BirefringenceMode, EveKind
from .optics import DoubleClickPolicy
from .phases import KEY_PHASES, QUATERNARY
from .session import (
    SessionConfig,
    competitor_efficiency,
    run_session,
    theoretical_efficiency,
)
from .stations import CascadeConfig, Detector, alice_encode, bob_measure, bob_prepare

EXPERIMENT_NAMES = (
    "baseline",
    "efficiency_scan",
    "attack_demo",
    "birefringence_sweep",
    "truth_table",
)
_NAME_CODE = {name: i for i, name in enumerate(EXPERIMENT_NAMES)}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the bad key."""


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    base: SessionConfig
    stages: tuple[int, ...] = ()


@dataclass(frozen=True)
class ResultTable:
    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]


def derive_seed(*parts: int) -> int:
    """Stable 64-bit seed from integer parts (master seed, codes, indices)."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


def _require_prob(key: str, value) -> float:
    v = _require_number(key, value)
    if not 0.0 <= v <= 1.0:
        raise ConfigError(f"{key} must be in [0, 1], got {value}")
    return v


def _require_number(key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return float(value)


def _require_positive_int(key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{key} must be a positive integer, got {value!r}")
    return value


def _build_session(overrides: dict, seed: int) -> SessionConfig:
    cfg = SessionConfig(master_seed=seed)
    detector = cfg.detector
    channel = cfg.channel
    simple: dict = {}
    for key, value in overrides.items():
        if key in ("n_stages", "rounds"):
            simple[key] = _require_positive_int(key, value)
        elif key in ("source_mean_photons",):
            v = _require_number(key, value)
            if v <= 0:
                raise ConfigError(f"{key} must be > 0, got {value}")
            simple[key] = v
        elif key in ("mean_photons_return", "energy_tolerance", "max_check_error", "max_qber"):
            v = _require_number(key, value)
            if v < 0:
                raise ConfigError(f"{key} must be >= 0, got {value}")
            simple[key] = v
        elif key in ("sample_prob", "decoy_prob", "disclose_fraction"):
            simple[key] = _require_prob(key, value)
        elif key == "quantum_efficiency":
            detector = replace(detector, quantum_efficiency=_require_prob(key, value))
        elif key == "dark_count_prob":
            detector = replace(detector, dark_count_prob=_require_prob(key, value))
        elif key == "double_click_policy":
            try:
                policy = DoubleClickPolicy(value)
            except ValueError:
                raise ConfigError(
                    f"double_click_policy must be one of "
                    f"{[p.value for p in DoubleClickPolicy]}, got {value!r}"
                ) from None
            detector = replace(detector, double_click_policy=policy)
        elif key == "loss_db":
            v = _require_number(key, value)
            if v < 0:
                raise ConfigError(f"loss_db must be >= 0, got {value}")
            channel = replace(channel, loss_db=v)
        elif key == "birefringence_mode":
            try:
                mode = BirefringenceMode(value)
            except ValueError:
                raise ConfigError(
                    f"birefringence_mode must be one of "
                    f"{[m.value for m in BirefringenceMode]}, got {value!r}"
                ) from None
            channel = replace(channel, birefringence_mode=mode)
        elif key == "channel_seed":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"channel_seed must be an integer, got {value!r}")
            channel = replace(channel, seed=value)
        else:
            raise ConfigError(f"unknown config key: {key}")
    return replace(cfg, detector=detector, channel=channel, **simple)


def parse_config(path) -> list[ExperimentSpec]:
    """Load and validate the experiment file; unknown names and keys and
    out-of-range values are rejected with messages naming the offender."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed config {path}: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    unknown_top = set(raw) - {"seed", "defaults", "experiments"}
    if unknown_top:
        raise ConfigError(f"unknown config key: {sorted(unknown_top)[0]}")

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    defaults = raw.get("defaults", {})
    if not isinstance(defaults, dict):
        raise ConfigError("defaults must be an object")
    entries = raw.get("experiments")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("experiments must be a non-empty list")

    specs = []
    for entry in entries:
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, dict):
            raise ConfigError(f"experiment entry must be a name or object, got {entry!r}")
        if "name" not in entry:
            raise ConfigError("experiment entry is missing the name key")
        name = entry["name"]
        if name not in EXPERIMENT_NAMES:
            raise ConfigError(f"unknown experiment name: {name!r}")
        overrides = {k: v for k, v in entry.items() if k != "name"}
        stages: tuple[int, ...] = ()
        if name == "efficiency_scan":
            raw_stages = overrides.pop("stages", [1, 2, 3, 4, 5, 6])
            if not isinstance(raw_stages, list) or not raw_stages:
                raise ConfigError("stages must be a non-empty list of integers")
            stages = tuple(_require_positive_int("stages", s) for s in raw_stages)
        elif "stages" in overrides:
            raise ConfigError("unknown config key: stages (only efficiency_scan takes it)")
        base = _build_session({**defaults, **overrides}, seed)
        specs.append(ExperimentSpec(name=name, base=base, stages=stages))
    return specs


def _variant_seed(spec: ExperimentSpec, variant: int) -> int:
    return derive_seed(spec.base.master_seed, _NAME_CODE[spec.name], variant)


def _session_row(stats) -> tuple:
    return (
        stats.rounds,
        stats.n_sampled,
        stats.n_no_click,
        stats.n_single_click,
        stats.n_multi_click,
        stats.efficiency,
        stats.edge_fraction,
        stats.sifted_length,
        stats.mismatches,
        stats.qber,
        stats.check_error_rate,
        stats.energy_alarms,
        stats.alarm,
    )


_SESSION_COLUMNS = (
    "rounds",
    "sampled",
    "no_click",
    "single_click",
    "multi_click",
    "efficiency",
    "edge_fraction",
    "sifted_length",
    "mismatches",
    "qber",
    "check_error_rate",
    "energy_alarms",
    "alarm",
)


def _run_baseline(spec: ExperimentSpec) -> ResultTable:
    cfg = replace(spec.base, master_seed=_variant_seed(spec, 0))
    stats = run_session(cfg).stats
    return ResultTable("baseline", _SESSION_COLUMNS, (_session_row(stats),))


def _run_efficiency_scan(spec: ExperimentSpec) -> ResultTable:
    rows = []
    for i, n in enumerate(spec.stages):
        cfg = replace(spec.base, n_stages=n, master_seed=_variant_seed(spec, i))
        stats = run_session(cfg).stats
        rows.append(
            (
                n,
                stats.n_single_click,
                stats.efficiency,
                float(theoretical_efficiency(n)),
                float(competitor_efficiency(n)),
            )
        )
    return ResultTable(
        "efficiency_scan",
        ("n_stages", "single_click_rounds", "measured", "exact", "competitor"),
        tuple(rows),
    )


def _run_attack_demo(spec: ExperimentSpec) -> ResultTable:
    off = replace(
        spec.base,
        eve_kind=EveKind.INTERCEPT_RESEND_REFERENCE,
        sample_prob=0.0,
        decoy_prob=0.0,
        master_seed=_variant_seed(spec, 0),
    )
    on = replace(
        spec.base,
        eve_kind=EveKind.INTERCEPT_RESEND_REFERENCE,
        master_seed=_variant_seed(spec, 1),
    )
    rows = []
    for label, cfg in (("checks_off", off), ("checks_on", on)):
        stats = run_session(cfg).stats
        rows.append(
            (
                label,
                stats.rounds,
                stats.sifted_length,
                stats.qber,
                stats.mismatches,
                stats.eve_agreement,
                stats.check_rounds_matched,
                stats.check_error_rate,
                stats.alarm,
            )
        )
    return ResultTable(
        "attack_demo",
        (
            "variant",
            "rounds",
            "sifted_length",
            "qber",
            "mismatches",
            "eve_key_agreement",
            "check_rounds_matched",
            "check_error_rate",
            "alarm",
        ),
        tuple(rows),
    )


def _run_birefringence_sweep(spec: ExperimentSpec) -> ResultTable:
    rows = []
    for i, mode in enumerate(BirefringenceMode):
        cfg = replace(
            spec.base,
            channel=replace(spec.base.channel, birefringence_mode=mode),
            master_seed=_variant_seed(spec, i),
        )
        result = run_session(cfg)
        d_counts = {d: 0 for d in Detector}
        for r in result.records:
            for c in r.clicks:
                d_counts[c.detector] += 1
            for c in r.check_clicks:
                d_counts[c.detector] += 1
        stats = result.stats
        rows.append(
            (
                mode.value,
                stats.rounds,
                d_counts[Detector.D1],
                d_counts[Detector.D2],
                d_counts[Detector.D3],
                d_counts[Detector.D4],
                stats.efficiency,
                stats.mismatches,
            )
        )
    return ResultTable(
        "birefringence_sweep",
        ("mode", "rounds", "d1", "d2", "d3", "d4", "efficiency", "mismatches"),
        tuple(rows),
    )


def _run_truth_table(spec: ExperimentSpec) -> ResultTable:
    """Exact interference coefficients per phase pair, normalized so a
    non-interfering (edge) slot has magnitude 1."""
    n = spec.base.n_stages
    slots = list(range(1, 2 ** n + 2))
    norm = 2.0 ** (n + 1)
    rows = []
    for phase_a in KEY_PHASES:
        for phase_b in QUATERNARY:
            cascade = CascadeConfig(n, phase_b)
            encoded = alice_encode(bob_prepare(cascade, 1 + 0j), phase_a)
            d1, d2 = bob_measure(encoded, cascade)
            c1 = [abs(d1.amplitude(k)) * norm for k in slots]
            c2 = [abs(d2.amplitude(k)) * norm for k in slots]
            odd_inner_d1 = all(c1[k - 1] > 1e-9 for k in slots[2:-1:2])
            rule_holds = odd_inner_d1 == (
                phase_b.doubled().quarter_turns == phase_a.quarter_turns
            )
            rows.append(
                (str(phase_a), str(phase_b), *c1, *c2, odd_inner_d1, rule_holds)
            )
    columns = (
        "alice_phase",
        "bob_phase",
        *(f"d1_t{k}" for k in slots),
        *(f"d2_t{k}" for k in slots),
        "odd_slots_click_d1",
        "readout_rule_holds",
    )
    return ResultTable("truth_table", columns, tuple(rows))


_RUNNERS = {
    "baseline": _run_baseline,
    "efficiency_scan": _run_efficiency_scan,
    "attack_demo": _run_attack_demo,
    "birefringence_sweep": _run_birefringence_sweep,
    "truth_table": _run_truth_table,
}


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    return _RUNNERS[spec.name](spec)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.6g}"
    return str(value)


def _json_cell(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def emit(results, fmt: str, out_dir) -> list[Path]:
    """Write one file per result table and print a short summary.

    CSV dialect: header row, comma delimiter, '.' decimal separator, floats
    with 6 significant digits, LF line endings. The ``structured`` format
    writes the same fields as JSON.
    """
    if fmt not in ("csv", "structured"):
        raise ValueError(f"format must be 'csv' or 'structured', got {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for table in results:
        if fmt == "csv":
            path = out_dir / f"{table.name}.csv"
            lines = [",".join(table.columns)]
            lines.extend(",".join(_format_cell(v) for v in row) for row in table.rows)
            path.write_text("\n".join(lines) + "\n", newline="\n")
        else:
            path = out_dir / f"{table.name}.json"
            doc = {
                "experiment": table.name,
                "columns": list(table.columns),
                "rows": [[_json_cell(v) for v in row] for row in table.rows],
            }
            path.write_text(json.dumps(doc, indent=2) + "\n", newline="\n")
        paths.append(path)
        print(f"[{table.name}] {len(table.rows)} row(s) -> {path}")
        header = "  " + "  ".join(table.columns[:8])
        print(header)
        for row in table.rows[:4]:
            print("  " + "  ".join(_format_cell(v) for v in row[:8]))
        if len(table.rows) > 4:
            print(f"  ... {len(table.rows) - 4} more row(s)")
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dps-qkd",
        description="Run differential-phase-shift QKD experiments from a config file.",
    )
    parser.add_argument("--config", required=True, help="JSON experiment file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--rounds", type=int, default=None, help="override rounds everywhere")
    parser.add_argument("--experiment", default=None, help="run only the named experiment")
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--format", choices=("csv", "structured"), default="csv")
    args = parser.parse_args(argv)

    try:
        specs = parse_config(args.config)
        if args.seed is not None:
            specs = [replace(s, base=replace(s.base, master_seed=args.seed)) for s in specs]
        if args.rounds is not None:
            if args.rounds < 1:
                raise ConfigError(f"rounds must be a positive integer, got {args.rounds}")
            specs = [replace(s, base=replace(s.base, rounds=args.rounds)) for s in specs]
        if args.experiment is not None:
            if args.experiment not in EXPERIMENT_NAMES:
                raise ConfigError(f"unknown experiment name: {args.experiment!r}")
            specs = [s for s in specs if s.name == args.experiment]
            if not specs:
                raise ConfigError(f"experiment {args.experiment!r} is not in the config")
        results = [run_experiment(spec) for spec in specs]
        emit(results, args.format, args.out)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
