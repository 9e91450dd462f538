#!/usr/bin/env python3

import logging
import math
from typing import Callable, Iterable, Iterator, Tuple

import numpy as np

from ring_dynamics.errors import InvalidValue, StepTooLarge

logger = logging.getLogger(__name__)

STABILITY_MARGIN = 0.1

HamiltonianAction = Callable[[np.ndarray], np.ndarray]


def check_step(dt: float, spectral_radius: float, margin: float = STABILITY_MARGIN):
    if dt <= 0 or not math.isfinite(dt):
        raise InvalidValue("dt", "step must be positive")
    if dt * spectral_radius > margin:
        raise StepTooLarge(f"dt * max|E| = {dt * spectral_radius:.4g} exceeds {margin}; reduce dt below {margin / spectral_radius:.4g}")


def step_count(t_max: float, dt: float) -> int:
    if t_max <= 0 or not math.isfinite(t_max):
        raise InvalidValue("t_max", "must be positive")
    return int(math.ceil(t_max / dt - 1e-9))


def rk4_step(apply_h: HamiltonianAction, y: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of i dy/dt = H y"""
    k1 = apply_h(y)
    k2 = apply_h(y - 0.5j * dt * k1)
    k3 = apply_h(y - 0.5j * dt * k2)
    k4 = apply_h(y - 1j * dt * k3)
    return y - (1j * dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_samples(apply_h: HamiltonianAction, y0: np.ndarray, dt: float, n_steps: int,
                stride: int = 1, extra_steps: Iterable[int] = ()) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (step, state) at step 0, every stride-th step and at any extra step"""
    if stride < 1:
        raise InvalidValue("stride", "must be at least 1")
    extra = set(extra_steps)
    y = np.array(y0, dtype=complex)
    yield 0, y
    for step in range(1, n_steps + 1):
        y = rk4_step(apply_h, y, dt)
        if step % stride == 0 or step in extra:
            yield step, y
