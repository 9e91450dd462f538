#!/usr/bin/env python3

import logging
import math
import time
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from ring_dynamics.integrators import check_step, rk4_samples, step_count
from ring_dynamics.lattice_bath import BandStructure, LatticeParams, band_structure
from ring_dynamics.trajectory import AmplitudeTrajectory

logger = logging.getLogger(__name__)

DEFAULT_DT = 0.01


@dataclass
class ModeState:
    """Emitter amplitude plus amplitudes on the two Bloch bands"""

    eps: complex
    c_minus: np.ndarray
    c_plus: np.ndarray

    @classmethod
    def excited(cls, n: int) -> "ModeState":
        return cls(eps=1.0 + 0j, c_minus=np.zeros(n, dtype=complex), c_plus=np.zeros(n, dtype=complex))

    @classmethod
    def from_vector(cls, y: np.ndarray) -> "ModeState":
        n = (len(y) - 1) // 2
        return cls(eps=complex(y[0]), c_minus=y[1:n + 1], c_plus=y[n + 1:])

    def to_vector(self) -> np.ndarray:
        return np.concatenate(([self.eps], self.c_minus, self.c_plus)).astype(complex)

    def norm(self) -> float:
        return abs(self.eps) ** 2 + float(np.sum(np.abs(self.c_minus) ** 2) + np.sum(np.abs(self.c_plus) ** 2))


def _spectral_radius(params: LatticeParams, bands: BandStructure) -> float:
    return max(bands.max_abs_energy(), abs(params.omega_e))


def mode_hamiltonian_action(params: LatticeParams, bands: BandStructure):
    """Action of the mode-space generator on y = (eps, c_minus, c_plus)"""
    n = bands.size
    scale = 1.0 / math.sqrt(n)
    e_minus, e_plus = bands.E_minus, bands.E_plus
    a_minus, a_plus = bands.coupling_minus * scale, bands.coupling_plus * scale
    a_minus_c, a_plus_c = np.conj(a_minus), np.conj(a_plus)
    omega_e = params.omega_e

    def apply_h(y: np.ndarray) -> np.ndarray:
        eps = y[0]
        c_minus = y[1:n + 1]
        c_plus = y[n + 1:]
        out = np.empty_like(y)
        out[0] = omega_e * eps + a_minus_c @ c_minus + a_plus_c @ c_plus
        out[1:n + 1] = e_minus * c_minus + a_minus * eps
        out[n + 1:] = e_plus * c_plus + a_plus * eps
        return out

    return apply_h


def mode_populations(bands: BandStructure, state: ModeState) -> Tuple[float, float]:
    """Total sublattice A and B occupations of a mode-space state"""
    amp_a = bands.amp_a_minus * state.c_minus + bands.amp_a_plus * state.c_plus
    amp_b = bands.amp_b_minus * state.c_minus + bands.amp_b_plus * state.c_plus
    return float(np.sum(np.abs(amp_a) ** 2)), float(np.sum(np.abs(amp_b) ** 2))


def evolve_modespace(params: LatticeParams, bands: BandStructure, t_max: float,
                     dt: float = DEFAULT_DT, stride: int = 1) -> AmplitudeTrajectory:
    """
    Propagate the coupled emitter/Bloch-mode amplitudes from eps = 1, empty bath.

    Args:
        params: model constants
        bands: band structure of the same params
        t_max: final time
        dt: RK4 step; dt * max|E| must not exceed 0.1
        stride: output every stride-th step

    Returns:
        Trajectory with sublattice populations and norm defect.
    """
    check_step(dt, _spectral_radius(params, bands))
    n_steps = step_count(t_max, dt)
    apply_h = mode_hamiltonian_action(params, bands)

    times, eps, pop_a, pop_b = [], [], [], []
    started = time.perf_counter()
    for step, y in rk4_samples(apply_h, ModeState.excited(bands.size).to_vector(), dt, n_steps, stride):
        state = ModeState.from_vector(y)
        a, b = mode_populations(bands, state)
        times.append(step * dt)
        eps.append(state.eps)
        pop_a.append(a)
        pop_b.append(b)

    trajectory = _assemble(times, eps, pop_a, pop_b, "modespace")
    logger.info(f"Mode-space run N={params.N} alpha={params.alpha}: {n_steps} steps in {time.perf_counter() - started:.2f}s, "
                f"final |eps|^2={trajectory.abs_eps_sq[-1]:.6f}, max norm defect {np.max(trajectory.norm_defect):.2e}")
    return trajectory


def realspace_hamiltonian(params: LatticeParams) -> sp.csr_matrix:
    """
    Single-excitation Hamiltonian on (a_1..a_N, b_1..b_N, eps), periodic ring, emitter on a_1.

    Rows: E a_n = J(a_{n+1} + a_{n-1}) + rho b_n + rho e^{-i phi} b_{n-1} + alpha eps delta_{n,1},
          E b_n = rho a_n + rho e^{i phi} a_{n+1},  E eps = omega_e eps + alpha a_1.
    """
    n = params.N
    a = np.arange(n)
    b = n + a
    emitter = 2 * n
    hop = params.rho * np.exp(-1j * params.phi)

    rows = np.concatenate([a, (a + 1) % n, a, b, a, b[(a - 1) % n], [0, emitter, emitter]])
    cols = np.concatenate([(a + 1) % n, a, b, a, b[(a - 1) % n], a, [emitter, 0, emitter]])
    vals = np.concatenate([
        np.full(n, params.J, dtype=complex),
        np.full(n, params.J, dtype=complex),
        np.full(n, params.rho, dtype=complex),
        np.full(n, params.rho, dtype=complex),
        np.full(n, hop),
        np.full(n, np.conj(hop)),
        np.array([params.alpha, params.alpha, params.omega_e], dtype=complex),
    ])
    h = sp.coo_matrix((vals, (rows, cols)), shape=(2 * n + 1, 2 * n + 1)).tocsr()
    assert abs(h - h.conj().T).max() == 0.0, "real-space Hamiltonian is not Hermitian"
    return h


def energy_expectation(h: sp.csr_matrix, psi: np.ndarray) -> float:
    """<psi|H|psi>, real for Hermitian H"""
    return float(np.real(np.vdot(psi, h @ psi)))


def evolve_realspace(params: LatticeParams, t_max: float, dt: float = DEFAULT_DT, stride: int = 1,
                     snapshot_times: Optional[Iterable[float]] = None) -> AmplitudeTrajectory:
    """Propagate (a_n, b_n, eps) under the sparse ring Hamiltonian; optional site snapshots"""
    bands = band_structure(params)
    check_step(dt, _spectral_radius(params, bands))
    n_steps = step_count(t_max, dt)
    n = params.N
    h = realspace_hamiltonian(params)

    snapshot_steps = {}
    for t in snapshot_times or ():
        step = int(round(t / dt))
        if 0 <= step <= n_steps:
            snapshot_steps[step] = step * dt

    psi0 = np.zeros(2 * n + 1, dtype=complex)
    psi0[2 * n] = 1.0
    energy0 = energy_expectation(h, psi0)

    times, eps, pop_a, pop_b = [], [], [], []
    snapshots = {}
    started = time.perf_counter()
    psi = psi0
    for step, psi in rk4_samples(lambda y: h @ y, psi0, dt, n_steps, stride, snapshot_steps):
        prob = np.abs(psi) ** 2
        if step in snapshot_steps:
            snapshots[snapshot_steps[step]] = (prob[:n].copy(), prob[n:2 * n].copy())
        if step % stride == 0:
            times.append(step * dt)
            eps.append(psi[2 * n])
            pop_a.append(float(np.sum(prob[:n])))
            pop_b.append(float(np.sum(prob[n:2 * n])))

    trajectory = _assemble(times, eps, pop_a, pop_b, "realspace")
    trajectory.snapshots = snapshots
    drift = abs(energy_expectation(h, psi) - energy0)
    trajectory.energy_drift = drift
    logger.info(f"Real-space run N={n} alpha={params.alpha}: {n_steps} steps in {time.perf_counter() - started:.2f}s, "
                f"energy drift {drift:.2e}, max norm defect {np.max(trajectory.norm_defect):.2e}")
    return trajectory


def _assemble(times, eps, pop_a, pop_b, method: str) -> AmplitudeTrajectory:
    epsilon = np.asarray(eps, dtype=complex)
    pop_a = np.asarray(pop_a)
    pop_b = np.asarray(pop_b)
    defect = np.abs(1.0 - (np.abs(epsilon) ** 2 + pop_a + pop_b))
    return AmplitudeTrajectory(
        t_grid=np.asarray(times),
        epsilon=epsilon,
        pop_A=pop_a,
        pop_B=pop_b,
        norm_defect=defect,
        method=method,
    )
