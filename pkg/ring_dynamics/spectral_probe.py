#!/usr/bin/env python3

import logging
import time
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy.linalg

from ring_dynamics.errors import InvalidValue, RegimeError, WrongParity
from ring_dynamics.exact_dynamics import realspace_hamiltonian
from ring_dynamics.lattice_bath import LatticeParams

logger = logging.getLogger(__name__)

PR_THRESHOLD = 10.0
NEIGHBORHOOD_SITES = 5
WEIGHT_THRESHOLD = 0.5
DEGENERACY_TOL = 1e-10
BARE_EMITTER_TOL = 1e-12


def participation_ratio(vectors: np.ndarray) -> np.ndarray:
    """(sum p)^2 / sum p^2 with p = |c|^2, per column; scale-free"""
    probs = np.abs(np.asarray(vectors)) ** 2
    return np.sum(probs, axis=0) ** 2 / np.sum(probs ** 2, axis=0)


def neighborhood_mask(n: int, sites: int = NEIGHBORHOOD_SITES) -> np.ndarray:
    """Emitter plus a_n, b_n within `sites` ring steps of the emitter's cell"""
    cell = np.arange(n)
    near = np.minimum(cell, n - cell) <= sites
    return np.concatenate([near, near, [True]])


@dataclass
class SpectralReport:
    """Eigenvalues, participation ratios and the zero-mode checks of one parameter set"""

    eigenvalues: np.ndarray
    pr: np.ndarray
    min_pr_index: int
    zero_mode_residual: Optional[float]
    pr_formula_value: Optional[float]
    zero_mode_pr_numeric: Optional[float]
    dark_state_found: bool
    dark_state_indices: Tuple[int, ...] = ()
    vectors: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "pr": self.pr.tolist(),
            "min_pr_index": self.min_pr_index,
            "zero_mode_residual": self.zero_mode_residual,
            "pr_formula_value": self.pr_formula_value,
            "zero_mode_pr_numeric": self.zero_mode_pr_numeric,
            "dark_state_found": self.dark_state_found,
            "dark_state_indices": list(self.dark_state_indices),
        }


def zero_mode_vector(params: LatticeParams) -> np.ndarray:
    """Unnormalized candidate a_n = 0, b_n = i^(n-1), eps = -2 rho / alpha; no regime checks"""
    if params.alpha <= 0:
        raise InvalidValue("alpha", "zero mode needs a coupled emitter")
    n = params.N
    v = np.zeros(2 * n + 1, dtype=complex)
    v[n:2 * n] = np.array([1, 1j, -1, -1j])[np.arange(n) % 4]
    v[2 * n] = -2.0 * params.rho / params.alpha
    return v


def mode_residual(params: LatticeParams, v: np.ndarray) -> float:
    """||H v|| / ||v||"""
    h = realspace_hamiltonian(params)
    return float(np.linalg.norm(h @ v) / np.linalg.norm(v))


def _require_zero_mode_regime(params: LatticeParams):
    if params.parity != 2:
        raise WrongParity(f"zero mode closes around the ring only for N = 2 (mod 4), got N = {params.N}")
    if not params.at_crossing():
        raise RegimeError(f"zero mode needs phi = pi/2, got {params.phi!r}")
    if params.omega_e != 0.0:
        raise RegimeError("zero mode needs a resonant emitter (omega_e = 0)")
    if params.alpha <= 0:
        raise RegimeError("zero mode needs alpha > 0")


def analytic_zero_mode(params: LatticeParams) -> Tuple[np.ndarray, float]:
    _require_zero_mode_regime(params)
    v = zero_mode_vector(params)
    return v, mode_residual(params, v)


def pr_formula(params: LatticeParams) -> float:
    """[(2 rho/alpha)^2 + N]^2 / [(2 rho/alpha)^4 + N]"""
    _require_zero_mode_regime(params)
    x = (2.0 * params.rho / params.alpha) ** 2
    return (x + params.N) ** 2 / (x ** 2 + params.N)


def zero_mode_weight(params: LatticeParams) -> float:
    """Emitter share |eps|^2 / ||v||^2 of the zero mode"""
    _require_zero_mode_regime(params)
    x = (2.0 * params.rho / params.alpha) ** 2
    return x / (x + params.N)


def _numeric_zero_mode_pr(eigenvalues: np.ndarray, vectors: np.ndarray, candidate: np.ndarray) -> float:
    nearest = int(np.argmin(np.abs(eigenvalues)))
    block = np.flatnonzero(np.abs(eigenvalues - eigenvalues[nearest]) <= DEGENERACY_TOL)
    if len(block) == 1:
        return float(participation_ratio(vectors[:, nearest]))
    logger.info(f"E = 0 is {len(block)}-fold degenerate; projecting the analytic mode onto the subspace")
    basis = vectors[:, block]
    projected = basis @ (basis.conj().T @ candidate)
    return float(participation_ratio(projected))


def solve_eigenproblem(params: LatticeParams, pr_threshold: float = PR_THRESHOLD,
                       neighborhood: int = NEIGHBORHOOD_SITES,
                       weight_threshold: float = WEIGHT_THRESHOLD, keep_vectors: bool = False) -> SpectralReport:
    """
    Full diagonalization of the single-excitation Hamiltonian with a dark-state search.

    A dark state is an eigenvector with PR below pr_threshold, more than weight_threshold
    of its weight in the emitter neighbourhood, and a bath part that is itself mostly
    inside that neighbourhood. The bare emitter (no bath weight) does not count.
    """
    if params.alpha == 0.0:
        logger.warning("alpha = 0: emitter is decoupled, its bare state is not a dressed dark state")
    if params.omega_e != 0.0:
        logger.warning(f"omega_e = {params.omega_e} is off resonance; the dark-state test assumes omega_e = 0")

    started = time.perf_counter()
    h = realspace_hamiltonian(params).toarray()
    eigenvalues, vectors = scipy.linalg.eigh(h)
    pr = participation_ratio(vectors)

    probs = np.abs(vectors) ** 2
    near = neighborhood_mask(params.N, neighborhood)
    bath_near = near.copy()
    bath_near[-1] = False
    near_weight = probs[near].sum(axis=0)
    bath_weight = probs[:-1].sum(axis=0)
    bath_near_weight = probs[bath_near].sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        bath_fraction = np.where(bath_weight > BARE_EMITTER_TOL, bath_near_weight / bath_weight, 0.0)

    dark = (pr < pr_threshold) & (near_weight > weight_threshold) & \
        (bath_weight > BARE_EMITTER_TOL) & (bath_fraction > weight_threshold)
    dark_indices = tuple(int(i) for i in np.flatnonzero(dark))

    residual = formula = numeric = None
    try:
        candidate, residual = analytic_zero_mode(params)
        formula = pr_formula(params)
        numeric = _numeric_zero_mode_pr(eigenvalues, vectors, candidate)
    except (WrongParity, RegimeError) as e:
        logger.debug(f"Zero-mode checks skipped: {e}")

    report = SpectralReport(
        eigenvalues=eigenvalues,
        pr=pr,
        min_pr_index=int(np.argmin(pr)),
        zero_mode_residual=residual,
        pr_formula_value=formula,
        zero_mode_pr_numeric=numeric,
        dark_state_found=bool(dark_indices),
        dark_state_indices=dark_indices,
        vectors=vectors if keep_vectors else None,
    )
    logger.info(f"Eigenproblem N={params.N} alpha={params.alpha}: {len(eigenvalues)} states in "
                f"{time.perf_counter() - started:.2f}s, min PR {pr[report.min_pr_index]:.4g}, "
                f"dark state {'found' if report.dark_state_found else 'absent'}")
    return report
