#!/usr/bin/env python3

import logging
import math
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from ring_dynamics.analytic_solution import (
    DensitySnapshot,
    density_map,
    invert_laplace,
    random_density_check,
    series_amplitude,
    series_trajectory,
    staircase_pieces,
    validity_horizon,
)
from ring_dynamics.delay_dynamics import delay_spec, feedback_ladder, solve_dde
from ring_dynamics.errors import RegimeError
from ring_dynamics.exact_dynamics import evolve_modespace, evolve_realspace
from ring_dynamics.kernel_dynamics import get_kernel, kernel_recurrence, solve_volterra
from ring_dynamics.lattice_bath import (
    FeedbackRates,
    band_structure,
    band_table,
    classify_regime,
    decay_time,
    feedback_rates,
)
from ring_dynamics.spectral_probe import solve_eigenproblem, zero_mode_weight
from ring_dynamics.trajectory import AmplitudeTrajectory, max_deviation
from scenario_runner.config import Scenario, ScenarioConfig
from scenario_runner.export import write_json, write_mapping, write_table

logger = logging.getLogger(__name__)

KERNEL_DT = 0.02
ANALYTIC_STEPS_PER_LOOP = 200
CROSSCHECK_LIMITS = {"kernel_vs_exact": 1e-4, "dde_vs_exact": 0.1}


def _out(context: Dict[str, Any]) -> Path:
    return Path(context["output_dir"])


def _digits(context: Dict[str, Any]) -> int:
    return context.get("csv_digits", 17)


def _register(context: Dict[str, Any], path: Path) -> Path:
    context["artifacts"].append(path)
    return path


def _bands(config: ScenarioConfig, context: Dict[str, Any]):
    if "band_structure" not in context:
        context["band_structure"] = band_structure(config.params)
    return context["band_structure"]


def _rates(config: ScenarioConfig, context: Dict[str, Any]) -> FeedbackRates:
    if context.get("rates") is None:
        context["rates"] = feedback_rates(config.params)
    return context["rates"]


def save_trajectory(context: Dict[str, Any], name: str, trajectory: AmplitudeTrajectory) -> Path:
    context.setdefault("trajectories", {})[name] = trajectory
    return _register(context, write_mapping(_out(context) / f"trajectory_{name}.csv", trajectory.table(), _digits(context)))


def step_bands(config: ScenarioConfig, context: Dict[str, Any]) -> Dict[str, Any]:
    bands = _bands(config, context)
    header, columns = band_table(bands)
    _register(context, write_table(_out(context) / "bands.csv", header, columns, _digits(context)))

    summary = {
        "k_min_abs_E_minus": float(bands.k_grid[np.argmin(np.abs(bands.E_minus))]),
        "k_min_abs_E_plus": float(bands.k_grid[np.argmin(np.abs(bands.E_plus))]),
        "min_gap": float(np.min(bands.E_plus - bands.E_minus)),
        "degenerate_points": int(np.count_nonzero(bands.degenerate)),
    }

    try:
        rates = _rates(config, context)
    except RegimeError as e:
        logger.info(f"No crossing rates: {e}")
        context["rates"] = None
        return summary

    payload = {"rates": rates.to_dict(), "T_d": decay_time(rates), "T_meet_1": rates.T_meet(1)}
    if config.params.alpha > 0:
        regime, reason, scales = classify_regime(config.params)
        payload.update({"regime": regime.value, "reason": reason, "scales": scales})
        summary["regime"] = regime.value
    _register(context, write_json(_out(context) / "rates.json", payload))
    summary.update({"T_minus": rates.T_minus, "T_plus": rates.T_plus, "gamma0": rates.gamma0})
    return summary


def step_exact(config: ScenarioConfig, context: Dict[str, Any]) -> Dict[str, Any]:
    t_max = config.resolved_t_max()
    if config.method == "realspace":
        trajectory = evolve_realspace(config.params, t_max, config.step(), config.output_stride,
                                      snapshot_times=config.snapshot_times)
        if trajectory.snapshots:
            _register(context, write_mapping(_out(context) / "snapshots.csv", trajectory.snapshot_rows(), _digits(context)))
    else:
        trajectory = evolve_modespace(config.params, _bands(config, context), t_max, config.step(), config.output_stride)
    save_trajectory(context, "exact", trajectory)
    return trajectory.summary()


def step_kernel(config: ScenarioConfig, context: Dict[str, Any]) -> Dict[str, Any]:
    t_max = config.resolved_t_max()
    dt = config.kernel_dt or config.dt or KERNEL_DT
    kernel = get_kernel(_bands(config, context), dt, t_max)
    trajectory = solve_volterra(kernel, config.params.omega_e, t_max, dt, config.output_stride)
    _register(context, write_mapping(_out(context) / "kernel.csv", kernel.table(), _digits(context)))
    save_trajectory(context, "kernel", trajectory)

    summary = trajectory.summary()
    summary["K0"] = float(kernel.samples[0].real)
    rates = context.get("rates")
    if rates is not None and 1.2 * rates.T_minus <= kernel.t_cover:
        summary["kernel_recurrence"] = kernel_recurrence(kernel, 0.8 * rates.T_minus, 1.2 * rates.T_minus)
    return summary


def step_dde(config: ScenarioConfig, context: Dict[str, Any]) -> Dict[str, Any]:
    t_max = config.resolved_t_max()
    spec = delay_spec(_rates(config, context), t_max, config.params.omega_e)
    dt = config.dde_dt or (config.dt if config.scenario == Scenario.EVOLVE_DDE else None)
    trajectory = solve_dde(spec, t_max, dt, config.output_stride)
    _register(context, write_json(_out(context) / "feedback_ladder.json", {"ladder": feedback_ladder(spec)}))
    save_trajectory(context, "dde", trajectory)
    return trajectory.summary()


def density_table(trajectory: AmplitudeTrajectory, rho0: DensitySnapshot) -> Dict[str, np.ndarray]:
    rows = [density_map(eps, rho0, t) for t, eps in zip(trajectory.t_grid, trajectory.epsilon)]
    return {
        "t": trajectory.t_grid,
        "rho_ee": np.array([r.rho_ee.real for r in rows]),
        "rho_eg_re": np.array([r.rho_eg.real for r in rows]),
        "rho_eg_im": np.array([r.rho_eg.imag for r in rows]),
        "rho_gg": np.array([r.rho_gg.real for r in rows]),
    }


def step_analytic(config: ScenarioConfig, context: Dict[str, Any]) -> Dict[str, Any]:
    rates = _rates(config, context)
    dt = config.dt or rates.T_minus / ANALYTIC_STEPS_PER_LOOP
    t_end = min(config.resolved_t_max(), rates.T_plus)
    t_grid = dt * np.arange(int(math.floor(t_end / dt)) + 1)
    t_grid = t_grid[t_grid < rates.T_plus]
    trajectory = series_trajectory(rates, t_grid[::config.output_stride])
    save_trajectory(context, "series", trajectory)

    # equal superposition of |e> and |g>
    rho0 = DensitySnapshot(rho_ee=0.5, rho_eg=0.5, rho_ge=0.5, rho_gg=0.5)
    _register(context, write_mapping(_out(context) / "density.csv", density_table(trajectory, rho0), _digits(context)))

    summary = trajectory.summary()
    t_check = min(1.7 * rates.T_minus, 0.9 * t_end)
    summary["laplace_check_t"] = t_check
    summary["laplace_check_deviation"] = abs(invert_laplace(rates, t_check) - series_amplitude(rates, t_check))
    summary["density_check"] = random_density_check(np.random.default_rng(config.seed))
    return summary


def step_staircase(config: ScenarioConfig, context: Dict[str, Any]) -> Dict[str, Any]:
    rates = _rates(config, context)
    pieces = staircase_pieces(rates, config.params.parity, config.n_pieces)
    horizon = validity_horizon(rates, pieces)
    payload = {
        "branch": pieces[0].branch.value if pieces else None,
        "T_minus": rates.T_minus,
        "T_plus": rates.T_plus,
        "validity_horizon": horizon,
        "pieces": [piece.to_dict() for piece in pieces],
    }
    _register(context, write_json(_out(context) / "staircase.json", payload))
    return {"pieces": len(pieces), "validity_horizon": horizon, "branch": payload["branch"]}


def _eigenvector_table(vector: np.ndarray, n: int) -> Dict[str, Any]:
    cells = list(range(1, n + 1))
    return {
        "component": np.arange(2 * n + 1),
        "kind": ["A"] * n + ["B"] * n + ["e"],
        "site": cells + cells + [0],
        "re": vector.real,
        "im": vector.imag,
    }


def step_spectrum(config: ScenarioConfig, context: Dict[str, Any]) -> Dict[str, Any]:
    params = config.params
    report = solve_eigenproblem(params, config.pr_threshold, config.neighborhood, config.weight_threshold,
                                keep_vectors=config.dump_eigenvectors)
    _register(context, write_json(_out(context) / "spectrum.json", report.to_dict()))
    _register(context, write_table(
        _out(context) / "spectrum.csv",
        ["index", "E", "pr"],
        [np.arange(len(report.eigenvalues)), report.eigenvalues, report.pr],
        _digits(context),
    ))
    if report.vectors is not None:
        vector = report.vectors[:, report.min_pr_index]
        _register(context, write_mapping(_out(context) / "eigenvector_min_pr.csv",
                                         _eigenvector_table(vector, params.N), _digits(context)))

    summary: Dict[str, Any] = {
        "states": len(report.eigenvalues),
        "min_pr": float(report.pr[report.min_pr_index]),
        "dark_state_found": report.dark_state_found,
        "zero_mode_residual": report.zero_mode_residual,
        "pr_formula_value": report.pr_formula_value,
        "zero_mode_pr_numeric": report.zero_mode_pr_numeric,
    }
    if report.pr_formula_value is not None:
        summary["zero_mode_weight"] = zero_mode_weight(params)
    return summary


def step_compare(config: ScenarioConfig, context: Dict[str, Any]) -> Dict[str, Any]:
    trajectories = context["trajectories"]
    t_max = config.resolved_t_max()
    deviations = {
        "kernel_vs_exact": max_deviation(trajectories["kernel"], trajectories["exact"], t_max),
        "dde_vs_exact": max_deviation(trajectories["dde"], trajectories["exact"], t_max),
        "kernel_vs_dde": max_deviation(trajectories["kernel"], trajectories["dde"], t_max),
    }
    passed = {name: deviations[name] < limit for name, limit in CROSSCHECK_LIMITS.items()}
    for name, ok in passed.items():
        level = logging.INFO if ok else logging.WARNING
        logger.log(level, f"{name}: max |d eps| = {deviations[name]:.3e} (limit {CROSSCHECK_LIMITS[name]})")
    payload = {"t_max": t_max, "deviations": deviations, "limits": CROSSCHECK_LIMITS, "passed": passed}
    _register(context, write_json(_out(context) / "crosscheck.json", payload))
    return {"deviations": deviations, "passed": passed}


def build_context(config: ScenarioConfig, csv_digits: int = 17, output_dir: Optional[Path] = None) -> Dict[str, Any]:
    return {
        "output_dir": Path(output_dir or config.output_dir),
        "csv_digits": csv_digits,
        "artifacts": [],
        "trajectories": {},
    }
