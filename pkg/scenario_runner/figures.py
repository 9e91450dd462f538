#!/usr/bin/env python3

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ring_dynamics.analytic_solution import evaluate_staircase, staircase_pieces
from ring_dynamics.exact_dynamics import evolve_modespace, evolve_realspace
from ring_dynamics.lattice_bath import LatticeParams, band_structure, feedback_rates
from scenario_runner.config import ScenarioConfig
from scenario_runner.export import write_mapping

logger = logging.getLogger(__name__)

REVIVAL_ALPHAS = (0.25, 0.50)
BLOCKADE_ALPHAS = (0.01, 0.02)
MAP_SAMPLES_PER_LOOP = 20
# default horizons in units of the fast loop time
HORIZON_LOOPS = {"revivals": 4.0, "blockade": 8.0, "transfer": 3.0, "odd_ring": 12.0}


def _horizon(config: ScenarioConfig, params: LatticeParams, figure: str) -> float:
    if config.t_max is not None:
        return config.t_max
    loops = config.t_max_loops if config.t_max_loops is not None else HORIZON_LOOPS[figure]
    return loops * feedback_rates(params).T_minus


def _alpha_sweep(config: ScenarioConfig, alphas: Sequence[float], figure: str) -> Dict[str, List]:
    rows: Dict[str, List] = {"alpha": [], "t": [], "eps_re": [], "eps_im": [], "abs_eps_sq": []}
    for alpha in alphas:
        params = config.params.model_copy(update={"alpha": alpha})
        trajectory = evolve_modespace(params, band_structure(params), _horizon(config, params, figure),
                                      config.step(), config.output_stride)
        rows["alpha"].extend([alpha] * len(trajectory.t_grid))
        rows["t"].extend(trajectory.t_grid.tolist())
        rows["eps_re"].extend(trajectory.epsilon.real.tolist())
        rows["eps_im"].extend(trajectory.epsilon.imag.tolist())
        rows["abs_eps_sq"].extend(trajectory.abs_eps_sq.tolist())
    return rows


def marker_table(params: LatticeParams, t_max: float) -> Dict[str, List]:
    """Vertical markers: fast loop returns n T_minus, wave meetings T_meet(n), slow loop returns n T_plus"""
    rates = feedback_rates(params)
    rows: Dict[str, List] = {"kind": [], "n": [], "t": []}
    for kind, period in (("loop_minus", rates.T_minus), ("meet", rates.T_meet(1)), ("loop_plus", rates.T_plus)):
        n = 1
        while n * period <= t_max:
            rows["kind"].append(kind)
            rows["n"].append(n)
            rows["t"].append(n * period)
            n += 1
    return rows


def emit_figure_data(config: ScenarioConfig, context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Write plot-ready datasets for the revival, staircase, sublattice-transfer and odd-N layouts"""
    out = Path(context["output_dir"] if context else config.output_dir)
    digits = context.get("csv_digits", 17) if context else 17
    files: List[Path] = []

    def emit(name: str, table: Dict[str, Any]):
        path = write_mapping(out / name, table, digits)
        files.append(path)
        if context is not None:
            context["artifacts"].append(path)

    params = config.params
    emit("revivals.csv", _alpha_sweep(config, config.alphas or REVIVAL_ALPHAS, "revivals"))
    emit("blockade.csv", _alpha_sweep(config, BLOCKADE_ALPHAS, "blockade"))

    t_transfer = _horizon(config, params, "transfer")
    rates = feedback_rates(params)
    map_times = np.arange(0.0, t_transfer + 1e-9, rates.T_minus / MAP_SAMPLES_PER_LOOP)
    transfer = evolve_realspace(params, t_transfer, config.step(), config.output_stride, snapshot_times=map_times.tolist())
    emit("transfer_populations.csv", {
        "t": transfer.t_grid,
        "pop_A": transfer.pop_A,
        "pop_B": transfer.pop_B,
        "abs_eps_sq": transfer.abs_eps_sq,
    })
    emit("transfer_map.csv", transfer.snapshot_rows())

    odd = params.model_copy(update={"N": config.odd_N})
    t_odd = _horizon(config, odd, "odd_ring")
    doubled = evolve_modespace(odd, band_structure(odd), t_odd, config.step(), config.output_stride)
    approximant = evaluate_staircase(staircase_pieces(feedback_rates(odd)), doubled.t_grid)
    emit("odd_ring.csv", {
        "t": doubled.t_grid,
        "eps_re": doubled.epsilon.real,
        "eps_im": doubled.epsilon.imag,
        "abs_eps_sq": doubled.abs_eps_sq,
        "staircase_re": approximant.real,
        "staircase_im": approximant.imag,
    })

    t_markers = max(_horizon(config, params, figure) for figure in ("revivals", "blockade", "transfer"))
    emit("markers.csv", marker_table(params, t_markers))
    emit("markers_odd.csv", marker_table(odd, t_odd))

    logger.info(f"Figure datasets written to {out}: {', '.join(path.name for path in files)}")
    return {"files": [path.name for path in files]}
