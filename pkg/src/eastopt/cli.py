"""Scenario loading, experiment orchestration, and artifact emission.

Subcommands:
  run             run selected schemes and write CSV/JSON traces (plus SVG plots)
  validate-jensen Monte-Carlo check of the mean-SNR uplink approximation
  check           lint a scenario file and exit

Every run writes, per scheme: east_trace.csv, trajectory.csv,
blocklengths.csv, summary.json. Floats use 12 significant digits with '.' as
the decimal separator so artifacts reproduce across tools.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - Python 3.10
    import tomli as tomllib

from . import svg_plots
from .bsca_driver import RunRecord, Scheme, initial_point, run_scheme
from .fbl_metrics import mc_secrecy_rate_ul, secrecy_rate_ul
from .scenario import Scenario, ScenarioError, avg_eve_uplink_snr, sample_eve_uplink_snr

_SCHEMA_VERSION = "v1"
_ALL_SCHEMES = ("jtbd", "tdfb", "bdft", "baseline")


class ScenarioFileError(ScenarioError):
    """Scenario file failed to parse or validate; message names the field."""


@dataclass
class ExperimentConfig:
    scenario_path: Path | None = None    # None selects the bundled default
    schemes: tuple = _ALL_SCHEMES
    out_dir: Path = Path("out")
    seed: int = 20230
    emit_plots: bool = False
    mc_samples: int = 1_000_000

    def __post_init__(self):
        if not self.schemes:
            raise ValueError("at least one scheme must be selected")
        bad = [s for s in self.schemes if s not in _ALL_SCHEMES]
        if bad:
            raise ValueError(f"unknown scheme(s): {', '.join(bad)}")


def _fmt(v: float) -> str:
    return f"{float(v):.12g}"


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _get(table: dict, section: str, key: str):
    if section not in table:
        raise ScenarioFileError(f"missing section [{section}]")
    if key not in table[section]:
        raise ScenarioFileError(f"missing required field '{key}' in section [{section}]")
    return table[section][key]


def _as_xy(value, name: str, z: float) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape == (2,):
        return np.array([arr[0], arr[1], z])
    if arr.shape == (3,):
        if abs(arr[2] - z) > 1e-9:
            raise ScenarioFileError(f"field '{name}' must have z = {z}")
        return arr
    raise ScenarioFileError(f"field '{name}' must be a 2D or 3D point")


def scenario_from_mapping(table: dict) -> Scenario:
    """Build and validate a Scenario from parsed file content."""
    altitude = float(_get(table, "uav", "altitude"))
    delta_t = float(_get(table, "timing", "delta_t"))
    t_total = float(_get(table, "timing", "t_total"))
    slots = t_total / delta_t
    if abs(slots - round(slots)) > 1e-9:
        raise ScenarioFileError("t_total must be an integer multiple of delta_t")
    try:
        return Scenario(
            q_a=_as_xy(_get(table, "nodes", "q_a"), "q_a", 0.0),
            q_b=_as_xy(_get(table, "nodes", "q_b"), "q_b", 0.0),
            q_e=_as_xy(_get(table, "nodes", "q_e"), "q_e", 0.0),
            q_i=_as_xy(_get(table, "uav", "q_i"), "q_i", altitude),
            q_f=_as_xy(_get(table, "uav", "q_f"), "q_f", altitude),
            altitude=altitude,
            p_a=dbm_to_watts(float(_get(table, "radio", "p_a_dbm"))),
            p_r=dbm_to_watts(float(_get(table, "radio", "p_r_dbm"))),
            beta0=db_to_linear(float(_get(table, "radio", "beta0_db"))),
            alpha=float(_get(table, "radio", "alpha")),
            sigma2=dbm_to_watts(float(_get(table, "radio", "sigma2_dbm"))),
            bandwidth=float(_get(table, "radio", "bandwidth_hz")),
            delta_t=delta_t,
            t_total=t_total,
            n_slots=int(round(slots)),
            l_max=int(_get(table, "timing", "l_max")),
            v_max=float(_get(table, "uav", "v_max")),
            eps_dec=float(_get(table, "targets", "eps_dec")),
            eta_leak=float(_get(table, "targets", "eta_leak")),
            eps_conv=float(_get(table, "targets", "eps_conv")),
        )
    except ScenarioFileError:
        raise
    except ScenarioError as exc:
        raise ScenarioFileError(str(exc)) from exc


def load_scenario(path=None) -> Scenario:
    """Load a scenario file (the bundled default when path is None)."""
    if path is None:
        text = resources.files("eastopt").joinpath("data/default.toml").read_text()
        source = "<bundled default>"
    else:
        p = Path(path)
        if not p.exists():
            raise ScenarioFileError(f"scenario file not found: {p}")
        text = p.read_text()
        source = str(p)
    try:
        table = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioFileError(f"{source}: parse error: {exc}") from exc
    return scenario_from_mapping(table)


def scenario_hash(scn: Scenario) -> str:
    fields = {}
    for name in sorted(vars(scn)):
        value = getattr(scn, name)
        fields[name] = value.tolist() if isinstance(value, np.ndarray) else value
    blob = json.dumps(fields, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# Artifact emission
# ---------------------------------------------------------------------------

def _write_csv(path: Path, schema: str, header: list, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# schema: {schema} {_SCHEMA_VERSION}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def write_run_artifacts(scn: Scenario, record: RunRecord, out_dir: Path,
                        emit_plots: bool = False) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_rows = []
    for i, value in enumerate(record.east_trace):
        wall = record.iter_seconds[i - 1] if 0 < i <= len(record.iter_seconds) else 0.0
        trace_rows.append((i, float(value), float(wall)))
    _write_csv(out_dir / "east_trace.csv", "east_trace",
               ["iteration", "east_bps", "wall_s"], trace_rows)

    speeds = record.trajectory.speeds(scn.delta_t)
    traj_rows = [(n + 1, float(w[0]), float(w[1]), float(w[2]), float(speeds[n]))
                 for n, w in enumerate(record.trajectory.waypoints)]
    _write_csv(out_dir / "trajectory.csv", "trajectory",
               ["n", "x_m", "y_m", "z_m", "speed_mps"], traj_rows)

    bl_rows = [(n + 1, int(record.plan.l_u[n]), int(record.plan.l_d[n]),
                float(m.r_u), float(m.r_d), float(m.b_s))
               for n, m in enumerate(record.slot_metrics)]
    _write_csv(out_dir / "blocklengths.csv", "blocklengths",
               ["n", "l_u_uses", "l_d_uses", "r_u_bpcu", "r_d_bpcu", "b_s_bps"], bl_rows)

    summary = {
        "scheme": record.scheme.value,
        "final_east_bps": float(record.final_east),
        "iterations": record.iterations,
        "termination": record.termination.value,
        "scenario_sha256": scenario_hash(scn),
        "wall_s_total": float(sum(record.iter_seconds)),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    if emit_plots:
        slots = list(range(1, scn.n_slots + 1))
        svg_plots.line_chart(
            out_dir / "east_vs_iteration.svg",
            [(record.scheme.value, list(range(len(record.east_trace))),
              [float(v) for v in record.east_trace])],
            "average secrecy throughput per iteration", "iteration", "EAST [bps]")
        svg_plots.trajectory_chart(
            out_dir / "trajectory.svg", record.trajectory.waypoints,
            {"Alice": scn.q_a, "Bob": scn.q_b, "Eve": scn.q_e,
             "start": scn.q_i, "end": scn.q_f},
            f"relay path ({record.scheme.value})")
        svg_plots.line_chart(
            out_dir / "velocity_vs_slot.svg",
            [(record.scheme.value, slots, [float(s) for s in speeds])],
            "relay speed per slot", "slot", "speed [m/s]")
        svg_plots.line_chart(
            out_dir / "blocklengths_vs_slot.svg",
            [("uplink", slots, [int(v) for v in record.plan.l_u]),
             ("downlink", slots, [int(v) for v in record.plan.l_d])],
            "channel uses per slot", "slot", "channel uses")


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run the selected schemes and write their artifacts. Returns exit status."""
    try:
        scn = load_scenario(cfg.scenario_path)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for name in cfg.schemes:
        record = run_scheme(scn, Scheme(name))
        write_run_artifacts(scn, record, cfg.out_dir / name, cfg.emit_plots)
        print(f"{name}: EAST = {record.final_east:.3f} bps after "
              f"{record.iterations} iteration(s) [{record.termination.value}]")
    return 0


def validate_jensen(cfg: ExperimentConfig):
    """Compare Monte-Carlo exact uplink rates with the mean-SNR approximation.

    Returns the per-slot report rows and writes jensen_validation.csv. The
    log-term inequality E[log2(1+g)] <= log2(1+E[g]) must hold on every slot.
    """
    if cfg.mc_samples < 10_000:
        raise ValueError("mc_samples must be at least 1e4")
    scn = load_scenario(cfg.scenario_path)
    traj, plan = initial_point(scn)
    g_bar = avg_eve_uplink_snr(scn)
    jensen_log = float(np.log2(1.0 + g_bar))
    rows = []
    for n in range(scn.n_slots):
        q = traj.waypoints[n]
        l_u = int(plan.l_u[n])
        samples = sample_eve_uplink_snr(scn, cfg.seed + n, cfg.mc_samples)
        mc_log = float(np.mean(np.log2(1.0 + samples)))
        mc_rate = mc_secrecy_rate_ul(scn, q, l_u, cfg.mc_samples, cfg.seed + n)
        approx_rate = secrecy_rate_ul(scn, q, l_u)
        rows.append({
            "n": n + 1,
            "mc_rate_bpcu": mc_rate,
            "approx_rate_bpcu": approx_rate,
            "gap_bpcu": approx_rate - mc_rate,
            "mc_log_term": mc_log,
            "approx_log_term": jensen_log,
            "direction_ok": mc_log <= jensen_log,
        })
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(cfg.out_dir / "jensen_validation.csv", "jensen_validation",
               list(rows[0].keys()),
               [tuple(r.values()) for r in rows])
    bad = [r["n"] for r in rows if not r["direction_ok"]]
    if bad:
        raise AssertionError(f"log-term inequality violated on slots {bad}")
    return rows


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eastopt",
        description="Joint blocklength and trajectory optimizer for a secure "
                    "short-packet aerial relay.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run schemes and write artifacts")
    p_run.add_argument("--scenario", type=Path, default=None,
                       help="scenario TOML (default: bundled scenario)")
    p_run.add_argument("--schemes", default=",".join(_ALL_SCHEMES),
                       help="comma-separated subset of jtbd,tdfb,bdft,baseline")
    p_run.add_argument("--out", type=Path, default=Path("out"))
    p_run.add_argument("--plots", action="store_true", help="emit SVG plots")
    p_run.add_argument("--seed", type=int, default=20230)

    p_j = sub.add_parser("validate-jensen", help="Monte-Carlo uplink-rate validation")
    p_j.add_argument("--scenario", type=Path, default=None)
    p_j.add_argument("--samples", type=int, default=1_000_000)
    p_j.add_argument("--out", type=Path, default=Path("out"))
    p_j.add_argument("--seed", type=int, default=20230)

    p_c = sub.add_parser("check", help="validate a scenario file")
    p_c.add_argument("--scenario", type=Path, default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        try:
            cfg = ExperimentConfig(scenario_path=args.scenario,
                                   schemes=tuple(s.strip() for s in args.schemes.split(",") if s.strip()),
                                   out_dir=args.out, seed=args.seed,
                                   emit_plots=args.plots)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return run_experiment(cfg)
    if args.command == "validate-jensen":
        cfg = ExperimentConfig(scenario_path=args.scenario, out_dir=args.out,
                               seed=args.seed, mc_samples=args.samples)
        try:
            rows = validate_jensen(cfg)
        except (ScenarioError, ValueError, AssertionError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        worst = max(abs(r["gap_bpcu"]) for r in rows)
        print(f"log-term direction holds on {len(rows)}/{len(rows)} slots; "
              f"max |rate gap| = {worst:.6f} bits/use")
        return 0
    if args.command == "check":
        try:
            scn = load_scenario(args.scenario)
        except ScenarioError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(f"scenario ok: {scn.n_slots} slots, sha256 {scenario_hash(scn)[:16]}...")
        return 0
    return 2  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
