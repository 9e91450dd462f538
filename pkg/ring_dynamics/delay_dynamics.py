#!/usr/bin/env python3

import cmath
import logging
import math
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ring_dynamics.errors import GridIncommensurate, InvalidValue
from ring_dynamics.integrators import step_count
from ring_dynamics.lattice_bath import FeedbackRates
from ring_dynamics.trajectory import AmplitudeTrajectory

logger = logging.getLogger(__name__)

STEPS_PER_LOOP = 2000
COMMENSURATE_TOL = 1e-9
BANDS = ("-", "+")


@dataclass(frozen=True)
class DelaySpec:
    """Delay equation d eps/dt = -(i omega_e + gamma0/2) eps - sum_{n,+-} gamma_n eps(t - n T)"""

    rates: FeedbackRates
    n_max_minus: int
    n_max_plus: int
    omega_e: float = 0.0

    def n_max(self, band: str) -> int:
        return self.n_max_minus if band == "-" else self.n_max_plus

    def default_dt(self) -> float:
        return self.rates.T_minus / STEPS_PER_LOOP


def delay_spec(rates: FeedbackRates, t_max: float, omega_e: float = 0.0) -> DelaySpec:
    """Spec retaining every feedback term whose onset lies inside [0, t_max]"""
    if t_max <= 0 or not math.isfinite(t_max):
        raise InvalidValue("t_max", "must be positive")
    return DelaySpec(
        rates=rates,
        n_max_minus=int(math.ceil(t_max / rates.T_minus)),
        n_max_plus=int(math.ceil(t_max / rates.T_plus)),
        omega_e=omega_e,
    )


def feedback_ladder(spec: DelaySpec) -> List[Dict[str, Any]]:
    """Active feedback rates, one record per (n, band)"""
    ladder = []
    for band in BANDS:
        for n in range(1, spec.n_max(band) + 1):
            rate = spec.rates.gamma_n(n, band)
            ladder.append({
                "n": n,
                "band": band,
                "delay": n * spec.rates.delay(band),
                "re": rate.real,
                "im": rate.imag,
            })
    return ladder


def _delay_steps(delay: float, dt: float) -> Tuple[int, bool]:
    ratio = delay / dt
    steps = int(round(ratio))
    return max(steps, 1), abs(ratio - steps) <= COMMENSURATE_TOL * max(1.0, ratio)


def _phi_functions(z: complex) -> Tuple[complex, complex, complex]:
    """exp(z), phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2"""
    if abs(z) < 1e-2:
        phi1 = 1 + z / 2 + z ** 2 / 6 + z ** 3 / 24 + z ** 4 / 120 + z ** 5 / 720
        phi2 = 0.5 + z / 6 + z ** 2 / 24 + z ** 3 / 120 + z ** 4 / 720 + z ** 5 / 5040
        return cmath.exp(z), phi1, phi2
    ez = cmath.exp(z)
    return ez, (ez - 1) / z, (ez - 1 - z) / z ** 2


def solve_dde(spec: DelaySpec, t_max: float, dt: Optional[float] = None, stride: int = 1) -> AmplitudeTrajectory:
    """
    Method of steps for the delay equation with eps(0) = 1, eps(t < 0) = 0.

    The local decay is integrated exactly; the feedback term is linear in time across
    each step, using its left limit at a delay onset. Delays are rounded to whole steps.

    Args:
        spec: rates, retained feedback terms and detuning
        t_max: final time
        dt: step, default T_minus / 2000
        stride: output every stride-th step

    Raises:
        GridIncommensurate: neither loop delay is a whole number of steps
    """
    rates = spec.rates
    h = spec.default_dt() if dt is None else dt
    if h <= 0 or not math.isfinite(h):
        raise InvalidValue("dt", "step must be positive")
    if stride < 1:
        raise InvalidValue("stride", "must be at least 1")
    n_steps = step_count(t_max, h)

    loop_minus, exact_minus = _delay_steps(rates.T_minus, h)
    loop_plus, exact_plus = _delay_steps(rates.T_plus, h)
    if not (exact_minus or exact_plus):
        raise GridIncommensurate(f"dt={h} divides neither T_minus={rates.T_minus:.10g} nor T_plus={rates.T_plus:.10g}")
    if not exact_plus:
        logger.debug(f"T_plus rounded to {loop_plus} steps ({loop_plus * h - rates.T_plus:+.2e} shift)")

    onsets, gammas = [], []
    for band, loop in (("-", loop_minus), ("+", loop_plus)):
        for n in range(1, spec.n_max(band) + 1):
            if n * loop <= n_steps:
                onsets.append(n * loop)
                gammas.append(spec.rates.gamma_n(n, band))
    onsets = np.asarray(onsets, dtype=int)
    gammas = np.asarray(gammas, dtype=complex)

    decay = 1j * spec.omega_e + 0.5 * rates.gamma0
    propagator, phi1, phi2 = _phi_functions(-decay * h)

    eps = np.zeros(n_steps + 1, dtype=complex)
    eps[0] = 1.0
    started = time.perf_counter()
    for m in range(n_steps):
        active = onsets <= m
        if np.any(active):
            delayed = onsets[active]
            rate = gammas[active]
            g_start = -(rate @ eps[m - delayed])
            g_end = -(rate @ eps[m + 1 - delayed])
            eps[m + 1] = propagator * eps[m] + h * (phi1 * g_start + phi2 * (g_end - g_start))
        else:
            eps[m + 1] = propagator * eps[m]

    t_grid = h * np.arange(n_steps + 1)
    logger.info(f"DDE run N={rates.N}: {n_steps} steps, {len(onsets)} feedback terms, "
                f"{time.perf_counter() - started:.2f}s, final |eps|^2={abs(eps[-1]) ** 2:.6f}")
    return AmplitudeTrajectory(t_grid=t_grid[::stride], epsilon=eps[::stride], method="dde")
