#!/usr/bin/env python3

import hashlib
import json
import logging
import math
import threading
import time
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ring_dynamics.errors import GridMismatch, InvalidValue
from ring_dynamics.integrators import step_count
from ring_dynamics.lattice_bath import BandStructure, LatticeParams
from ring_dynamics.trajectory import AmplitudeTrajectory

logger = logging.getLogger(__name__)

SAMPLE_BUDGET = 30000
CHUNK_ROWS = 2048


def params_hash(params: LatticeParams) -> str:
    """Identifier of the bath constants a kernel depends on (omega_e excluded)"""
    payload = {key: params.to_dict()[key] for key in ("N", "J", "rho", "phi", "omega", "alpha")}
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8"))
    return digest.hexdigest()[:16]


@dataclass(frozen=True)
class MemoryKernel:
    """Bath correlation K(s_j) on the grid s_j = j * dt"""

    samples: np.ndarray
    dt: float
    params_hash: str

    @property
    def s_grid(self) -> np.ndarray:
        return self.dt * np.arange(len(self.samples))

    @property
    def t_cover(self) -> float:
        return self.dt * (len(self.samples) - 1)

    def table(self) -> Dict[str, np.ndarray]:
        return {"s": self.s_grid, "K_re": self.samples.real, "K_im": self.samples.imag}


def build_kernel(bands: BandStructure, dt: float, t_max: float) -> MemoryKernel:
    """
    K(s) = (1/N) sum_{k,+-} |alpha_k^+-|^2 exp(-i E_k^+- s), summed directly over the k-grid.

    Args:
        bands: band structure carrying energies and couplings
        dt: sample spacing
        t_max: last sample time (rounded up to the grid)
    """
    if dt <= 0 or not math.isfinite(dt):
        raise InvalidValue("dt", "step must be positive")
    n_samples = step_count(t_max, dt) + 1
    if n_samples > SAMPLE_BUDGET:
        logger.warning(f"Kernel with {n_samples} samples exceeds the budget of {SAMPLE_BUDGET}; "
                       f"the Volterra history sum grows as the square of this")

    weight_minus, weight_plus = bands.coupling_weights()
    energies = np.concatenate([bands.E_minus, bands.E_plus])
    weights = np.concatenate([weight_minus, weight_plus]) / bands.size

    started = time.perf_counter()
    samples = np.empty(n_samples, dtype=complex)
    for lo in range(0, n_samples, CHUNK_ROWS):
        hi = min(lo + CHUNK_ROWS, n_samples)
        s = dt * np.arange(lo, hi)
        samples[lo:hi] = np.exp(-1j * np.outer(s, energies)) @ weights

    assert samples[0].real >= 0.0 and abs(samples[0].imag) < 1e-15, "K(0) must be real and non-negative"
    logger.info(f"Kernel built: {n_samples} samples, dt={dt}, K(0)={samples[0].real:.6e} "
                f"in {time.perf_counter() - started:.2f}s")
    return MemoryKernel(samples=samples, dt=dt, params_hash=params_hash(bands.params))


class KernelCache:
    """Kernels keyed by bath constants and step; reused across omega_e scans.

    Lookup, build and store happen under one lock, so concurrent callers asking
    for the same key share a single build.
    """

    def __init__(self):
        self._kernels: Dict[Tuple[str, float], MemoryKernel] = {}
        self._lock = threading.Lock()

    def get(self, bands: BandStructure, dt: float, t_max: float) -> MemoryKernel:
        key = (params_hash(bands.params), dt)
        with self._lock:
            kernel = self._kernels.get(key)
            if kernel is not None and kernel.t_cover >= t_max - 1e-9 * dt:
                logger.debug(f"Kernel cache hit for {key}")
                return kernel
            kernel = build_kernel(bands, dt, t_max)
            self._kernels[key] = kernel
            return kernel

    def clear(self):
        with self._lock:
            self._kernels.clear()

    def __len__(self) -> int:
        return len(self._kernels)


_kernel_cache = KernelCache()


def get_kernel_cache() -> KernelCache:
    return _kernel_cache


def get_kernel(bands: BandStructure, dt: float, t_max: float) -> MemoryKernel:
    return _kernel_cache.get(bands, dt, t_max)


def kernel_recurrence(kernel: MemoryKernel, t_lo: float, t_hi: float) -> float:
    """Time of the largest |K| inside (t_lo, t_hi)"""
    s = kernel.s_grid
    mask = (s > t_lo) & (s < t_hi)
    if not np.any(mask):
        raise InvalidValue("window", f"({t_lo}, {t_hi}) holds no kernel samples")
    idx = np.flatnonzero(mask)
    return float(s[idx[np.argmax(np.abs(kernel.samples[idx]))]])


def solve_volterra(kernel: MemoryKernel, omega_e: float, t_max: float, dt: Optional[float] = None,
                   stride: int = 1) -> AmplitudeTrajectory:
    """
    Solve d eps/dt = -i omega_e eps - int_0^t K(s) eps(t - s) ds with eps(0) = 1.

    Trapezoidal rule in time with a trapezoidal history sum; the newest point
    enters both linearly and is solved for implicitly.

    Raises:
        GridMismatch: kernel step differs from dt or the kernel stops before t_max
    """
    h = kernel.dt if dt is None else dt
    if abs(h - kernel.dt) > 1e-12 * kernel.dt:
        raise GridMismatch(f"kernel dt={kernel.dt} differs from requested dt={h}")
    n_steps = step_count(t_max, h)
    if n_steps >= len(kernel.samples):
        raise GridMismatch(f"kernel covers t <= {kernel.t_cover:.6g}, run needs {n_steps * h:.6g}")
    if stride < 1:
        raise InvalidValue("stride", "must be at least 1")

    k = kernel.samples
    k0 = k[0]
    eps = np.zeros(n_steps + 1, dtype=complex)
    eps[0] = 1.0
    f_prev = -1j * omega_e * eps[0]
    denom = 1.0 + 0.5 * h * (1j * omega_e + 0.5 * h * k0)

    started = time.perf_counter()
    for n in range(1, n_steps + 1):
        # history part of the trapezoid sum, all points except the newest
        history = h * (k[1:n] @ eps[n - 1:0:-1] + 0.5 * k[n] * eps[0])
        eps[n] = (eps[n - 1] + 0.5 * h * (f_prev - history)) / denom
        f_prev = -(1j * omega_e + 0.5 * h * k0) * eps[n] - history

    t_grid = h * np.arange(n_steps + 1)
    trajectory = AmplitudeTrajectory(t_grid=t_grid[::stride], epsilon=eps[::stride], method="volterra")
    logger.info(f"Volterra run: {n_steps} steps in {time.perf_counter() - started:.2f}s, "
                f"final |eps|^2={abs(eps[-1]) ** 2:.6f}")
    return trajectory
