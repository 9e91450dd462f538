#!/usr/bin/env python3

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


TRAJECTORY_COLUMNS = ["t", "eps_re", "eps_im", "abs_eps_sq", "pop_A", "pop_B", "norm_defect"]


@dataclass
class AmplitudeTrajectory:
    """Emitter amplitude on a uniform time grid, with bath observables when the solver has them"""

    t_grid: np.ndarray
    epsilon: np.ndarray
    pop_A: Optional[np.ndarray] = None
    pop_B: Optional[np.ndarray] = None
    norm_defect: Optional[np.ndarray] = None
    method: str = ""
    energy_drift: Optional[float] = None
    snapshots: Dict[float, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0]) if len(self.t_grid) > 1 else 0.0

    @property
    def abs_eps_sq(self) -> np.ndarray:
        return np.abs(self.epsilon) ** 2

    def at(self, t: float) -> complex:
        """Linearly interpolated amplitude at time t"""
        re = np.interp(t, self.t_grid, self.epsilon.real)
        im = np.interp(t, self.t_grid, self.epsilon.imag)
        return complex(re, im)

    def resample(self, t_grid: np.ndarray) -> np.ndarray:
        return np.interp(t_grid, self.t_grid, self.epsilon.real) + 1j * np.interp(t_grid, self.t_grid, self.epsilon.imag)

    def window(self, t_lo: float, t_hi: float) -> np.ndarray:
        return (self.t_grid > t_lo) & (self.t_grid < t_hi)

    def table(self) -> Dict[str, np.ndarray]:
        """Columns of the trajectory CSV; missing observables are NaN (written as empty cells)"""
        empty = np.full(len(self.t_grid), np.nan)
        return {
            "t": self.t_grid,
            "eps_re": self.epsilon.real,
            "eps_im": self.epsilon.imag,
            "abs_eps_sq": self.abs_eps_sq,
            "pop_A": self.pop_A if self.pop_A is not None else empty,
            "pop_B": self.pop_B if self.pop_B is not None else empty,
            "norm_defect": self.norm_defect if self.norm_defect is not None else empty,
        }

    def snapshot_rows(self) -> Dict[str, List]:
        """Long-format site occupations: one row per (t, site, sublattice)"""
        rows: Dict[str, List] = {"t": [], "site": [], "sublattice": [], "prob": []}
        for t in sorted(self.snapshots):
            prob_a, prob_b = self.snapshots[t]
            for label, probs in (("A", prob_a), ("B", prob_b)):
                rows["t"].extend([t] * len(probs))
                rows["site"].extend(range(1, len(probs) + 1))
                rows["sublattice"].extend([label] * len(probs))
                rows["prob"].extend(probs.tolist())
        return rows

    def summary(self) -> Dict[str, Any]:
        result = {
            "method": self.method,
            "samples": int(len(self.t_grid)),
            "t_max": float(self.t_grid[-1]),
            "final_abs_eps_sq": float(self.abs_eps_sq[-1]),
        }
        if self.norm_defect is not None:
            result["max_norm_defect"] = float(np.max(self.norm_defect))
        if self.energy_drift is not None:
            result["energy_drift"] = self.energy_drift
        return result


def max_deviation(first: AmplitudeTrajectory, second: AmplitudeTrajectory, t_max: Optional[float] = None) -> float:
    """Uniform distance between two amplitudes on the coarser of the two grids"""
    coarse, fine = (first, second) if first.dt >= second.dt else (second, first)
    t = coarse.t_grid
    if t_max is not None:
        t = t[t <= t_max + 1e-12]
    t = t[t <= fine.t_grid[-1] + 1e-12]
    diff = coarse.resample(t) - fine.resample(t)
    return float(np.max(np.abs(diff)))
