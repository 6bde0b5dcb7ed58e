"""Command-line entry point: single runs, sweeps, Monte-Carlo, and config
validation, with CSV + manifest emission.

Config files are flat `key = value` text with dotted section prefixes
(scenario.*, channel.*, transport.*) plus an optional bare `scenario` key
naming the experiment. Unknown keys are rejected. CLI flags override the
corresponding config keys. Outputs are byte-identical for a given
(config, seed) regardless of `--jobs`: results are computed, sorted by
declared keys, then formatted.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import cooploc as cl
from . import overtake as ot
from .harness import (ConfigError, RunClock, fmt_value, parse_kv_text,
                      apply_keymap, write_csv, write_manifest)

SWEEP_EPSILONS = (0.0, 0.25, 0.5, 0.75, 0.9)
SWEEP_PROTOCOLS = ("udp", "sr_arq", "ac_rlnc")
SWEEP_ESTIMATORS = ("naive", "iree")

COOPLOC_KEYMAP = {
    "scenario.n": ("n", int),
    "scenario.workspace": ("workspace", float),
    "scenario.dt": ("dt", float),
    "scenario.horizon": ("horizon", int),
    "scenario.resample_period": ("resample_period", int),
    "scenario.reset_period": ("reset_period", int),
    "scenario.wheelbase": ("wheelbase", float),
    "scenario.v_max": ("v_max", float),
    "scenario.sigma_gps": ("sigma_gps", float),
    "scenario.sigma_lidar_internal": ("sigma_lidar_internal", float),
    "scenario.sigma_process": ("sigma_process", float),
    "scenario.sigma_theta_deg": ("sigma_theta_deg", float),
    "scenario.sigma_v": ("sigma_v", float),
    "scenario.sigma_delta_deg": ("sigma_delta_deg", float),
    "scenario.estimator": ("estimator", str),
    "scenario.replay_depth": ("replay_depth", int),
    "scenario.tail_window": ("tail_window", int),
    "scenario.err_window": ("err_window", int),
    "scenario.seed": ("seed", int),
    "channel.rtt": ("rtt", int),
    "channel.epsilon": ("epsilon", float),
    "channel.delay_mode": ("delay_mode", str),
    "transport.protocol": ("protocol", str),
    "transport.alpha": ("alpha", float),
    "transport.lam": ("lam", float),
    "transport.window_factor_sr": ("window_factor_sr", float),
    "transport.window_factor_ac": ("window_factor_ac", float),
}

OVERTAKE_KEYMAP = {
    "scenario.dt": ("dt", float),
    "scenario.horizon": ("horizon", int),
    "scenario.lane_width": ("lane_width", float),
    "scenario.v_ego": ("v_ego", float),
    "scenario.v_truck": ("v_truck", float),
    "scenario.v_oncoming": ("v_oncoming", float),
    "scenario.brake_decel": ("brake_decel", float),
    "scenario.abort_steer_deg": ("abort_steer_deg", float),
    "scenario.steer_ramp_time": ("steer_ramp_time", float),
    "scenario.speed_floor_margin": ("speed_floor_margin", float),
    "scenario.car_length": ("car_length", float),
    "scenario.car_width": ("car_width", float),
    "scenario.truck_length": ("truck_length", float),
    "scenario.truck_width": ("truck_width", float),
    "scenario.wheelbase_frac": ("wheelbase_frac", float),
    "scenario.gap_ego_truck": ("gap_ego_truck", float),
    "scenario.gap_ego_oncoming": ("gap_ego_oncoming", float),
    "scenario.msg_req": ("msg_req", int),
    "scenario.deadline_slot": ("deadline_slot", int),
    "scenario.rollout_cap_time": ("rollout_cap_time", float),
    "scenario.complete_y_tol": ("complete_y_tol", float),
    "scenario.complete_theta_deg": ("complete_theta_deg", float),
    "scenario.seed": ("seed", int),
    "scenario.runs": ("runs", int),
    "channel.rtt": ("rtt", int),
    "channel.profile": ("profile_kind", str),
    "channel.success_lo": ("success_lo", float),
    "channel.success_hi": ("success_hi", float),
    "channel.intervals": ("intervals", int),
    "channel.epsilon": ("epsilon", float),
    "transport.beta": ("beta", int),
    "transport.protocol": ("protocol", str),
    "transport.eps_init": ("eps_init", float),
    "transport.window_factor_sr": ("window_factor_sr", float),
    "transport.window_factor_ac": ("window_factor_ac", float),
}

SCENARIO_KEYMAPS = {"cooploc": COOPLOC_KEYMAP, "overtake": OVERTAKE_KEYMAP}


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    config: cl.CoopLocConfig | ot.OvertakeConfig
    raw: dict[str, str]
    outdir: Path
    jobs: int


def load_raw_config(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_kv_text(p.read_text())


def build_scenario_config(scenario: str, raw: dict[str, str]):
    declared = raw.get("scenario")
    if declared is not None and declared != scenario:
        raise ConfigError(
            f"config declares scenario {declared!r}, expected {scenario!r}")
    fields = apply_keymap(raw, SCENARIO_KEYMAPS[scenario],
                          ignore=("scenario",))
    cfg = cl.CoopLocConfig(**fields) if scenario == "cooploc" \
        else ot.OvertakeConfig(**fields)
    cfg.validate()
    return cfg


def make_run_config(scenario: str, args) -> RunConfig:
    raw = load_raw_config(args.config)
    cfg = build_scenario_config(scenario, raw)
    effective = dict(raw)
    effective["scenario"] = scenario
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
        effective["scenario.seed"] = str(args.seed)
    if getattr(args, "runs", None) is not None:
        cfg = replace(cfg, runs=args.runs)
        effective["scenario.runs"] = str(args.runs)
    outdir = Path(os.environ.get("MRSIM_OUT") or args.out)
    return RunConfig(scenario, cfg, effective, outdir, args.jobs)


# ------------------------------------------------------------- cooploc

def sweep_cells(base: cl.CoopLocConfig) -> list[cl.CoopLocConfig]:
    """Fixed sweep grid: a no-delay baseline plus every
    (epsilon, protocol, estimator) cell under one-way delay."""
    cells = [replace(base, protocol="none", delay_mode="none", epsilon=0.0)]
    for eps in SWEEP_EPSILONS:
        for proto in SWEEP_PROTOCOLS:
            for est in SWEEP_ESTIMATORS:
                cells.append(replace(base, epsilon=eps, protocol=proto,
                                     delay_mode="one_way", estimator=est))
    return cells


def _cell_key(cfg: cl.CoopLocConfig) -> tuple:
    return (cfg.protocol, cfg.epsilon, cfg.delay_mode, cfg.estimator)


def run_cells(cells: list[cl.CoopLocConfig],
              jobs: int) -> list[cl.CoopLocResult]:
    if jobs <= 1 or len(cells) <= 1:
        results = [cl.run_cooploc(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(cl.run_cooploc, cells))
    return sorted(results, key=lambda r: _cell_key(r.config))


def write_cooploc_outputs(rc: RunConfig,
                          results: list[cl.CoopLocResult]) -> list[str]:
    series_rows = []
    summary_rows = []
    for r in results:
        c = r.config
        key = (c.seed, c.protocol, c.epsilon, c.delay_mode, c.estimator)
        for t, err in enumerate(r.err_series):
            series_rows.append(key + (t, float(err)))
        summary_rows.append(key + (r.tail_mean_err,
                                   r.metrics.mean_inorder_delay,
                                   r.metrics.delivery_ratio,
                                   r.metrics.throughput))
    write_csv(rc.outdir / "cooploc_series.csv",
              ("seed", "protocol", "epsilon", "delay_mode", "estimator",
               "t", "err"), series_rows)
    write_csv(rc.outdir / "cooploc_summary.csv",
              ("seed", "protocol", "epsilon", "delay_mode", "estimator",
               "tail_mean_err", "mean_inorder_delay", "delivery_ratio",
               "throughput"), summary_rows)
    return ["cooploc_series.csv", "cooploc_summary.csv"]


def cmd_cooploc_run(args) -> int:
    rc = make_run_config("cooploc", args)
    clock = RunClock()
    results = run_cells([rc.config], rc.jobs)
    files = write_cooploc_outputs(rc, results)
    write_manifest(rc.outdir, rc.raw, rc.config.seed, files, clock.seconds())
    print(f"cooploc run: tail_mean_err = "
          f"{fmt_value(results[0].tail_mean_err)} -> {rc.outdir}")
    return 0


def cmd_cooploc_sweep(args) -> int:
    rc = make_run_config("cooploc", args)
    clock = RunClock()
    results = run_cells(sweep_cells(rc.config), rc.jobs)
    files = write_cooploc_outputs(rc, results)
    write_manifest(rc.outdir, rc.raw, rc.config.seed, files, clock.seconds())
    print(f"cooploc sweep: {len(results)} cells -> {rc.outdir}")
    return 0


# ------------------------------------------------------------ overtake

def _mc_chunks(run_ids: list[int], chunk: int) -> list[list[int]]:
    return [run_ids[i:i + chunk] for i in range(0, len(run_ids), chunk)]


def run_montecarlo(cfg: ot.OvertakeConfig,
                   jobs: int) -> list[ot.RunOutcome]:
    protocols = ot.MC_PROTOCOLS if cfg.protocol == "both" \
        else (cfg.protocol,)
    run_ids = list(range(cfg.runs))
    tasks = [(proto, chunk) for proto in protocols
             for chunk in _mc_chunks(run_ids, 64)]
    if jobs <= 1 or len(tasks) <= 1:
        batches = [ot.run_batch(cfg, proto, chunk) for proto, chunk in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(ot.run_batch, cfg, proto, chunk)
                       for proto, chunk in tasks]
            batches = [f.result() for f in futures]
    outcomes = [o for b in batches for o in b]
    return sorted(outcomes, key=lambda o: (o.protocol, o.run_id))


def cmd_overtake_deadline(args) -> int:
    rc = make_run_config("overtake", args)
    deadline = ot.compute_deadline(rc.config)
    print(f"deadline_slot = {deadline}")
    return 0


def cmd_overtake_montecarlo(args) -> int:
    rc = make_run_config("overtake", args)
    cfg: ot.OvertakeConfig = rc.config
    clock = RunClock()
    outcomes = run_montecarlo(cfg, rc.jobs)
    protocols = sorted({o.protocol for o in outcomes})

    run_rows = [(cfg.seed, o.run_id, o.protocol,
                 -1 if o.t25_slot is None else o.t25_slot,
                 -1 if o.abort_slot is None else o.abort_slot,
                 o.outcome, cfg.deadline_slot)
                for o in outcomes]
    cdf_rows = []
    for proto in protocols:
        for t, v in enumerate(ot.reliability_cdf(outcomes, cfg.horizon,
                                                 proto)):
            cdf_rows.append((proto, t, v))
    write_csv(rc.outdir / "overtake_runs.csv",
              ("seed", "run_id", "protocol", "t25_slot", "abort_slot",
               "outcome", "deadline_slot"), run_rows)
    write_csv(rc.outdir / "overtake_cdf.csv",
              ("protocol", "t", "cdf"), cdf_rows)
    files = ["overtake_runs.csv", "overtake_cdf.csv"]
    write_manifest(rc.outdir, rc.raw, cfg.seed, files, clock.seconds())
    for proto in protocols:
        hits = sum(1 for o in outcomes if o.protocol == proto
                   and o.t25_slot is not None
                   and o.t25_slot <= cfg.deadline_slot)
        n = sum(1 for o in outcomes if o.protocol == proto)
        print(f"overtake montecarlo: {proto} "
              f"Pr[T25 <= {cfg.deadline_slot}] = {fmt_value(hits / n)}")
    return 0


def cmd_validate(args) -> int:
    raw = load_raw_config(args.config)
    scenario = raw.get("scenario", "cooploc")
    if scenario not in SCENARIO_KEYMAPS:
        raise ConfigError(f"scenario: unknown value {scenario!r}")
    build_scenario_config(scenario, raw)
    print(f"ok: valid {scenario} config")
    return 0


# ---------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrsim",
        description="Slot-based co-simulation of multi-robot autonomy "
                    "and lossy, delayed communication.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, runs=False):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", default="out",
                       help="output directory (env MRSIM_OUT overrides)")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for independent runs")
        if runs:
            p.add_argument("--runs", type=int,
                           help="Monte-Carlo run count override")

    p_cl = sub.add_parser("cooploc", help="cooperative localization")
    sub_cl = p_cl.add_subparsers(dest="subcommand", required=True)
    p = sub_cl.add_parser("run", help="single configured cell")
    common(p)
    p.set_defaults(func=cmd_cooploc_run)
    p = sub_cl.add_parser("sweep", help="fixed (epsilon, protocol) grid")
    common(p)
    p.set_defaults(func=cmd_cooploc_sweep)

    p_ot = sub.add_parser("overtake", help="overtaking abort experiment")
    sub_ot = p_ot.add_subparsers(dest="subcommand", required=True)
    p = sub_ot.add_parser("deadline", help="compute the abort deadline")
    common(p)
    p.set_defaults(func=cmd_overtake_deadline)
    p = sub_ot.add_parser("montecarlo", help="reliability-latency runs")
    common(p, runs=True)
    p.set_defaults(func=cmd_overtake_montecarlo)

    p = sub.add_parser("validate", help="check a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
