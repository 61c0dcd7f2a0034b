"""Scenario runner: one configuration file in, CSV trajectories and a summary out."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .config import ScenarioConfig, parse_config, with_value
from .detection import idealized_herald, run_detection
from .dynamics import Trajectory, integrate
from .model import NetworkModel

log = logging.getLogger(__name__)

TIME_OPTIMAL_LAWS = ("power", "strength")


def trajectory_summary(traj: Trajectory) -> dict[str, Any]:
    return {
        "final_fidelity": traj.final_fidelity,
        "peak_fidelity": traj.peak_fidelity,
        "time_to_peak": traj.time_to_peak,
        "time_to_0.98": traj.time_to(0.98),
        "time_to_0.99": traj.time_to(0.99),
        "switch_off_time": traj.switch_off_time,
    }


def _label(name: str, value) -> str:
    return f"{name.split('.')[-1]}={float(value):g}"


def _run_single(cfg: ScenarioConfig, label: str, out: Path, law=None,
                overrides: dict | None = None) -> tuple[dict, Trajectory, NetworkModel]:
    spec = cfg.evolution_spec(law, **(overrides or {}))
    model = NetworkModel.build(spec.params, spec.n_max, spec.reduce)
    log.info("running %s (%s, law=%s)", label, spec.kind, spec.control_law.kind)
    traj = integrate(spec, model=model)
    traj.to_csv(out / f"{label}.csv")
    return trajectory_summary(traj), traj, model


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path | None = None,
                 overrides: dict | None = None, suffix: str = "",
                 write_summary: bool = True) -> dict[str, Any]:
    """Execute ``cfg``; returns the summary mapping (also written as summary.json)."""
    out = Path(out_dir) if out_dir is not None else cfg.output_path
    out.mkdir(parents=True, exist_ok=True)
    overrides = dict(overrides or {})
    runs: dict[str, dict] = {}
    name = cfg.scenario

    if name.startswith("time_optimal"):
        base = cfg.law()
        for law_kind in (base.kind, *TIME_OPTIMAL_LAWS):
            s, _, _ = _run_single(cfg, law_kind + suffix, out, cfg.law(law_kind), overrides)
            runs[law_kind + suffix] = s
    elif name == "emission_detection":
        runs.update(_run_detection(cfg, out, overrides, suffix))
    elif cfg.sweep is not None:
        runs.update(_internal_sweep(cfg, out, overrides, suffix))
    else:
        label = "trajectory" + suffix
        runs[label] = _run_single(cfg, label, out, None, overrides)[0]

    summary = {"scenario": name, "runs": runs}
    if cfg.expect:
        summary["checks"] = evaluate_expectations(cfg, runs)
    if write_summary:
        write_summary_file(out / "summary.json", summary)
    return summary


def _internal_sweep(cfg, out, overrides, suffix) -> dict[str, dict]:
    sweep = cfg.sweep
    runs = {}
    paired = sweep.get("paired") or {}
    for i, value in enumerate(sweep["values"]):
        raw = with_value(cfg.raw, sweep["param"], value)
        for pname, pvals in paired.items():
            raw = with_value(raw, pname, pvals[i])
        sub = replace(parse_config(raw), sweep=None, expect=[])
        label = _label(sweep["param"], value) + suffix
        runs[label] = _run_single(sub, label, out, None, overrides)[0]
    return runs


def _run_detection(cfg, out, overrides, suffix) -> dict[str, dict]:
    det = cfg.detection
    overrides = {**overrides, "t_end": det.t0}
    main_summary, traj, model = _run_single(cfg, "main" + suffix, out, None, overrides)
    result = run_detection(traj.final_state, model.space, det)
    result.to_csv(out / f"detection{suffix}.csv")
    ideal, ideal_prob = idealized_herald(traj.final_state, model.space, det.p_min)
    main_summary.update({
        "post_herald_fidelity": result.post_herald_fidelity,
        "herald_prob": result.final_herald_prob,
        "ideal_herald_fidelity": float(np.trace(model.rho_target @ ideal).real),
        "ideal_herald_prob": ideal_prob,
        "discarded_excited_weight": result.discarded_weight,
    })
    return {"main" + suffix: main_summary}


def evaluate_expectations(cfg: ScenarioConfig, runs: dict[str, dict]) -> list[dict]:
    checks = []
    for exp in cfg.expect:
        run = exp.run or (next(iter(runs)) if len(runs) == 1 else "")
        actual = runs.get(run, {}).get(exp.metric)
        checks.append({"run": run, "metric": exp.metric, "actual": actual,
                       "value": exp.value, "tol": exp.tol, "min": exp.min, "max": exp.max,
                       "passed": exp.check(actual)})
    return checks


def write_summary_file(path: Path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _sweep_point(args) -> dict:
    raw, param, value, out, overrides = args
    cfg = parse_config(with_value(raw, param, value))
    return run_scenario(cfg, out, overrides, suffix="_" + _label(param, value),
                        write_summary=False)


def sweep(raw: dict, param: str, values: Sequence[float], out_dir: str | Path | None = None,
          overrides: dict | None = None, workers: int = 1) -> dict[str, Any]:
    """Independent runs of one scenario, one per value of ``param``."""
    base = parse_config(raw)
    out = Path(out_dir) if out_dir is not None else base.output_path
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(raw, param, v, out, overrides) for v in values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    runs: dict[str, dict] = {}
    for r in results:
        runs.update(r["runs"])
    summary = {"scenario": base.scenario, "sweep": {"param": param, "values": list(values)},
               "runs": runs}
    write_summary_file(out / "summary.json", summary)
    return summary
