#!/usr/bin/env python3

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ring_dynamics.delay_dynamics import delay_spec, solve_dde
from ring_dynamics.errors import DomainError, InvalidState, InvalidValue, PoleProximity, WrongParity
from ring_dynamics.lattice_bath import FeedbackRates
from ring_dynamics.trajectory import AmplitudeTrajectory

logger = logging.getLogger(__name__)

POLE_TOL = 1e-12
STATE_TOL = 1e-12
CONTOUR_WIDTH = 150.0


def _require_even_class(rates: FeedbackRates):
    if rates.parity != 2:
        raise WrongParity(f"closed form needs N = 2 (mod 4), got N = {rates.N}")


def laplace_amplitude(rates: FeedbackRates, s: complex) -> complex:
    """Transform (s + gamma0/2 - gamma0_minus / (exp(s T_minus) + 1))^-1 of the fast-loop solution"""
    _require_even_class(rates)
    x = complex(s) * rates.T_minus
    if x.real < 700.0:
        z = cmath.exp(x)
        if abs(z + 1.0) < POLE_TOL:
            raise PoleProximity(f"exp(s T_minus) = -1 within {POLE_TOL} at s = {s}")
        comb = 1.0 / (z + 1.0)
    else:
        q = cmath.exp(-x)
        comb = q / (1.0 + q)
    return 1.0 / (s + 0.5 * rates.gamma0 - rates.gamma0_minus * comb)


def kummer_polynomial(n: int, y: float) -> float:
    """1F1(1 - n, 2, y): terminating series of degree n - 1"""
    if n < 1:
        raise InvalidValue("n", "loop index starts at 1")
    terms = [1.0]
    for j in range(n - 1):
        terms.append(terms[-1] * (1 - n + j) * y / ((2 + j) * (j + 1)))
    return math.fsum(terms)


def series_amplitude(rates: FeedbackRates, t: float) -> complex:
    """
    Time-domain solution for N = 2 (mod 4) before the slow loop returns.

    eps(t) = exp(-gamma0 t/2) + sum_n (-1)^(n+1) gamma0_minus u exp(-gamma0 u/2) 1F1(1-n, 2, gamma0 u/2),
    u = t - n T_minus, over the loops already completed.
    """
    _require_even_class(rates)
    if t < 0:
        raise DomainError(f"t = {t} is negative")
    if t >= rates.T_plus:
        raise DomainError(f"t = {t:.6g} reaches the slow loop time T_plus = {rates.T_plus:.6g}")

    half = 0.5 * rates.gamma0
    terms = [math.exp(-half * t)]
    for n in range(1, int(math.floor(t / rates.T_minus)) + 1):
        u = t - n * rates.T_minus
        y = half * u
        sign = 1.0 if n % 2 == 1 else -1.0
        terms.append(sign * rates.gamma0_minus * u * math.exp(-y) * kummer_polynomial(n, y))
    return complex(math.fsum(terms), 0.0)


def series_trajectory(rates: FeedbackRates, t_grid: np.ndarray) -> AmplitudeTrajectory:
    t_grid = np.asarray(t_grid, dtype=float)
    epsilon = np.array([series_amplitude(rates, t) for t in t_grid], dtype=complex)
    return AmplitudeTrajectory(t_grid=t_grid, epsilon=epsilon, method="series")


def invert_laplace(rates: FeedbackRates, t: float, sigma: Optional[float] = None,
                   width: float = CONTOUR_WIDTH) -> complex:
    """
    Bromwich integral of laplace_amplitude by the trapezoid rule on Re s = sigma.

    The bare pole 1/(s + gamma0/2) is inverted exactly; the remainder decays as 1/s^2.
    Validation oracle only.
    """
    _require_even_class(rates)
    if t <= 0:
        raise DomainError("inverse transform is evaluated for t > 0")
    half = 0.5 * rates.gamma0
    c = max(rates.gamma0, 4.0 / t) if sigma is None else sigma
    step = c / 8.0
    omega = np.arange(-width, width + 0.5 * step, step)
    s = c + 1j * omega

    x = s * rates.T_minus
    comb = 1.0 / (np.exp(x) + 1.0)
    full = 1.0 / (s + half - rates.gamma0_minus * comb)
    remainder = full - 1.0 / (s + half)

    integrand = np.exp(1j * omega * t) * remainder
    total = step * (np.sum(integrand) - 0.5 * (integrand[0] + integrand[-1]))
    return complex(math.exp(-half * t) + math.exp(c * t) * total / (2.0 * math.pi))


class Branch(Enum):
    EVEN_CLASS = "even_class"
    ODD_PLUS = "odd_plus"
    ODD_MINUS = "odd_minus"


BRANCH_BY_PARITY = {2: Branch.EVEN_CLASS, 1: Branch.ODD_PLUS, 3: Branch.ODD_MINUS}


@dataclass(frozen=True)
class StaircasePiece:
    """Affine approximant of eps on [t_lo, t_hi]: real and imaginary parts as (intercept, slope)"""

    t_lo: float
    t_hi: float
    eps_R: Tuple[float, float]
    eps_I: Tuple[float, float]
    branch: Branch

    def contains(self, t: float) -> bool:
        return self.t_lo <= t <= self.t_hi

    def value(self, t: float) -> complex:
        return complex(self.eps_R[0] + self.eps_R[1] * t, self.eps_I[0] + self.eps_I[1] * t)

    def interval_in_loops(self, t_minus: float) -> Tuple[float, float]:
        return self.t_lo / t_minus, self.t_hi / t_minus

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t_lo": self.t_lo,
            "t_hi": self.t_hi,
            "eps_R": list(self.eps_R),
            "eps_I": list(self.eps_I),
            "branch": self.branch.value,
        }


def staircase_pieces(rates: FeedbackRates, parity: Optional[int] = None,
                     n_pieces: Optional[int] = None) -> List[StaircasePiece]:
    """
    First-order approximants, one per fast loop, confined to t < T_plus.

    On [j T, (j+1) T]: eps = 1 - gamma0 t/2 - sum_{n<=j} gamma_n (t - n T).
    """
    parity = rates.parity if parity is None else parity
    if parity == 0:
        raise WrongParity("N = 0 (mod 4): feedback rates do not alternate, no staircase")
    if parity not in BRANCH_BY_PARITY:
        raise InvalidValue("parity", f"expected N mod 4 in {{1, 2, 3}}, got {parity}")
    branch = BRANCH_BY_PARITY[parity]

    t_loop = rates.T_minus
    if n_pieces is None:
        n_pieces = int(math.ceil(rates.T_plus / t_loop))

    pieces = []
    rate_sum = 0j
    weighted_sum = 0j
    for j in range(n_pieces):
        t_lo = j * t_loop
        if t_lo >= rates.T_plus:
            break
        if j > 0:
            rate = rates.gamma0_minus * (-1j) ** ((j * parity) % 4)
            rate_sum += rate
            weighted_sum += rate * j * t_loop
        pieces.append(StaircasePiece(
            t_lo=t_lo,
            t_hi=min((j + 1) * t_loop, rates.T_plus),
            eps_R=(1.0 + weighted_sum.real, -0.5 * rates.gamma0 - rate_sum.real),
            eps_I=(weighted_sum.imag, -rate_sum.imag),
            branch=branch,
        ))
    return pieces


def evaluate_staircase(pieces: List[StaircasePiece], t: np.ndarray) -> np.ndarray:
    """Piecewise values on t; NaN outside the covered range"""
    t = np.asarray(t, dtype=float)
    values = np.full(t.shape, complex(np.nan, np.nan), dtype=complex)
    for piece in pieces:
        mask = (t >= piece.t_lo) & (t <= piece.t_hi)
        values[mask] = (piece.eps_R[0] + piece.eps_R[1] * t[mask]) + 1j * (piece.eps_I[0] + piece.eps_I[1] * t[mask])
    return values


def validity_horizon(rates: FeedbackRates, pieces: List[StaircasePiece], tol: float = 1e-3,
                     reference: Optional[AmplitudeTrajectory] = None) -> float:
    """Earliest time the staircase departs from the delay-equation solution by more than tol, capped at T_plus"""
    if not pieces:
        return 0.0
    t_end = min(pieces[-1].t_hi, rates.T_plus)
    if reference is None:
        reference = solve_dde(delay_spec(rates, t_end), t_end)
    t = reference.t_grid[reference.t_grid <= t_end]
    deviation = np.abs(evaluate_staircase(pieces, t) - reference.epsilon[:len(t)])
    beyond = np.flatnonzero(deviation > tol)
    horizon = float(t[beyond[0]]) if len(beyond) else t_end
    logger.info(f"Staircase valid to t={horizon:.4g} ({horizon / rates.T_minus:.3g} T_minus) at tol={tol}")
    return horizon


def plateau_flatness(t: np.ndarray, values: np.ndarray, t_lo: float, t_hi: float, margin: float = 0.0) -> float:
    """max - min of the samples strictly inside (t_lo + margin, t_hi - margin)"""
    t = np.asarray(t)
    values = np.asarray(values)
    mask = (t > t_lo + margin) & (t < t_hi - margin)
    if not np.any(mask):
        raise InvalidValue("window", f"({t_lo}, {t_hi}) minus margin {margin} holds no samples")
    window = values[mask]
    return float(np.max(window) - np.min(window))


@dataclass(frozen=True)
class DensitySnapshot:
    """Reduced emitter density matrix in the (e, g) basis"""

    rho_ee: complex
    rho_eg: complex
    rho_ge: complex
    rho_gg: complex
    t: float = 0.0

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, t: float = 0.0) -> "DensitySnapshot":
        return cls(rho_ee=complex(matrix[0, 0]), rho_eg=complex(matrix[0, 1]),
                   rho_ge=complex(matrix[1, 0]), rho_gg=complex(matrix[1, 1]), t=t)

    def matrix(self) -> np.ndarray:
        return np.array([[self.rho_ee, self.rho_eg], [self.rho_ge, self.rho_gg]], dtype=complex)

    def trace(self) -> complex:
        return self.rho_ee + self.rho_gg

    def validate(self) -> Tuple[bool, str]:
        if abs(self.rho_eg - self.rho_ge.conjugate()) > STATE_TOL or \
                abs(self.rho_ee.imag) > STATE_TOL or abs(self.rho_gg.imag) > STATE_TOL:
            return False, "density matrix is not Hermitian"
        if abs(self.trace() - 1.0) > STATE_TOL:
            return False, f"trace {self.trace().real:.15g} differs from 1"
        min_eig = float(np.min(np.linalg.eigvalsh(self.matrix())))
        if min_eig < -STATE_TOL:
            return False, f"negative eigenvalue {min_eig:.3e}"
        return True, "valid"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "rho_ee": self.rho_ee.real,
            "rho_eg_re": self.rho_eg.real,
            "rho_eg_im": self.rho_eg.imag,
            "rho_gg": self.rho_gg.real,
        }


def density_map(epsilon_t: complex, rho0: DensitySnapshot, t: Optional[float] = None) -> DensitySnapshot:
    """Evolve the emitter density matrix given the excitation amplitude eps(t)"""
    ok, message = rho0.validate()
    if not ok:
        raise InvalidState(message)
    if abs(epsilon_t) > 1.0 + STATE_TOL:
        raise InvalidState(f"|eps| = {abs(epsilon_t):.15g} exceeds 1")

    weight = abs(epsilon_t) ** 2
    rho_ee = weight * rho0.rho_ee
    return DensitySnapshot(
        rho_ee=rho_ee,
        rho_eg=epsilon_t * rho0.rho_eg,
        rho_ge=complex(epsilon_t).conjugate() * rho0.rho_ge,
        # (1 - |eps|^2) rho_ee + rho_gg, written so the trace is carried over unchanged
        rho_gg=(rho0.rho_ee + rho0.rho_gg) - rho_ee,
        t=rho0.t if t is None else t,
    )


def random_density_check(rng: np.random.Generator, samples: int = 1000) -> Dict[str, Any]:
    """Push random valid states through the density map with random |eps| <= 1.

    Reports the worst trace change and the smallest eigenvalue seen; the draw
    sequence is fixed by the generator, so a seeded run is reproducible.
    """
    if samples < 1:
        raise InvalidValue("samples", "must be at least 1")
    worst_trace = 0.0
    min_eig = math.inf
    for _ in range(samples):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = a @ a.conj().T
        rho /= np.trace(rho).real
        rho0 = DensitySnapshot.from_matrix(0.5 * (rho + rho.conj().T))
        eps = math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
        mapped = density_map(eps, rho0)
        worst_trace = max(worst_trace, abs(mapped.trace() - rho0.trace()))
        min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh(mapped.matrix()))))
    logger.debug(f"Density map check: {samples} samples, trace error {worst_trace:.2e}, min eigenvalue {min_eig:.2e}")
    return {"samples": samples, "max_trace_error": worst_trace, "min_eigenvalue": min_eig}
