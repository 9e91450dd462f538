#!/usr/bin/env python3

import logging
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Mapping, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from ring_dynamics.errors import InvalidValue, MissingKey, RegimeError

logger = logging.getLogger(__name__)

CROSSING_TOL = 1e-9
DEGENERATE_TOL = 1e-12

_ANGLE_PATTERN = re.compile(
    r"^\s*(?P<sign>[+-])?\s*(?P<coef>\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*pi\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$",
    re.IGNORECASE,
)


def parse_angle(value: Union[str, float, int], key: str = "phi") -> float:
    """Parse an angle given as a number or as a multiple of pi ("pi/2", "-3pi/4")"""
    if isinstance(value, bool):
        raise InvalidValue(key, "boolean is not an angle")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise InvalidValue(key, f"cannot parse angle from {type(value).__name__}")

    text = value.strip()
    match = _ANGLE_PATTERN.match(text)
    if match:
        coef = float(match.group("coef")) if match.group("coef") else 1.0
        den = float(match.group("den")) if match.group("den") else 1.0
        if den == 0.0:
            raise InvalidValue(key, "zero denominator")
        angle = coef * math.pi / den
        return -angle if match.group("sign") == "-" else angle

    try:
        return float(text)
    except ValueError:
        raise InvalidValue(key, f"cannot parse angle '{value}'")


class LatticeParams(BaseModel):
    """Model constants of the emitter plus chiral sawtooth ring"""

    model_config = ConfigDict(frozen=True, extra="ignore", allow_inf_nan=False)

    N: int
    J: float = 1.0
    rho: float = 1.0
    phi: float = math.pi / 2
    omega: float = 0.0
    alpha: float
    omega_e: float = 0.0

    @field_validator("phi", mode="before")
    @classmethod
    def _parse_phi(cls, value: Any) -> float:
        try:
            return parse_angle(value)
        except InvalidValue as e:
            raise ValueError(e.reason)

    @field_validator("N")
    @classmethod
    def _check_ring_size(cls, value: int) -> int:
        if value < 3:
            raise ValueError("ring needs at least 3 cells")
        return value

    @field_validator("alpha")
    @classmethod
    def _check_alpha(cls, value: float) -> float:
        if value < 0:
            raise ValueError("coupling must be non-negative")
        return value

    @property
    def parity(self) -> int:
        """N mod 4; selects the blockade behaviour"""
        return self.N % 4

    def at_crossing(self) -> bool:
        return abs(self.phi - math.pi / 2) <= CROSSING_TOL

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump()


def build_params(raw: Mapping[str, Any]) -> LatticeParams:
    """Validate a raw key-value map into LatticeParams.

    Raises:
        MissingKey: a required key is absent
        InvalidValue: a key is present but non-numeric, non-finite or out of range
    """
    try:
        return LatticeParams.model_validate(dict(raw))
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first["loc"][0]) if first.get("loc") else "params"
        if first["type"] == "missing":
            raise MissingKey(key)
        raise InvalidValue(key, first.get("msg", "invalid value"))


def dispersion(params: LatticeParams, k: Union[float, np.ndarray]) -> Tuple[Any, Any]:
    """Band energies (E_minus, E_plus) at Bloch number k"""
    cos_k = np.cos(k)
    disc = (params.J * cos_k) ** 2 + 2.0 * params.rho ** 2 * (1.0 + np.cos(params.phi + k))
    assert np.all(disc >= 0.0), "negative dispersion discriminant"
    root = np.sqrt(disc)
    return params.J * cos_k - root, params.J * cos_k + root


def coupling_g(params: LatticeParams, k: Union[float, np.ndarray]) -> Any:
    """Off-diagonal A-B element g_k = rho (1 + exp(-i (phi + k)))"""
    return params.rho * (1.0 + np.exp(-1j * (params.phi + k)))


def bloch_matrix(params: LatticeParams, k: float) -> np.ndarray:
    """2x2 Bloch Hamiltonian in the (A, B) basis; its eigenvalues are dispersion(params, k)"""
    g = coupling_g(params, k)
    h = np.array([[2.0 * params.J * math.cos(k), np.conj(g)], [g, 0.0]], dtype=complex)
    assert np.allclose(h, h.conj().T), "h_k is not Hermitian"
    return h


@dataclass(frozen=True)
class BandStructure:
    """Quantized k-grid with energies, couplings and Bloch amplitudes for both bands.

    amp_a_* and amp_b_* are the sublattice A and B components of the band
    eigenvectors (the columns of U_k); couplings are alpha * amp_a_*.
    """

    params: LatticeParams
    k_grid: np.ndarray
    E_minus: np.ndarray
    E_plus: np.ndarray
    g_k: np.ndarray
    norm_minus: np.ndarray
    norm_plus: np.ndarray
    coupling_minus: np.ndarray
    coupling_plus: np.ndarray
    amp_a_minus: np.ndarray
    amp_a_plus: np.ndarray
    amp_b_minus: np.ndarray
    amp_b_plus: np.ndarray
    degenerate: np.ndarray

    @property
    def size(self) -> int:
        return len(self.k_grid)

    def max_abs_energy(self) -> float:
        return float(max(np.max(np.abs(self.E_minus)), np.max(np.abs(self.E_plus))))

    def coupling_weights(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.abs(self.coupling_minus) ** 2, np.abs(self.coupling_plus) ** 2


def _crossing_amplitudes(params: LatticeParams) -> Tuple[float, float]:
    # A-sublattice weight of the slow/fast lines at the crossing; squares sum to one
    if params.rho == 0.0:
        return 1.0, 0.0
    root = math.sqrt(params.J ** 2 + params.rho ** 2)
    om_minus = -params.J - root
    om_plus = -params.J + root
    x_minus = abs(om_minus) / math.sqrt(om_minus ** 2 + params.rho ** 2)
    x_plus = abs(om_plus) / math.sqrt(om_plus ** 2 + params.rho ** 2)
    return x_minus, x_plus


def band_structure(params: LatticeParams) -> BandStructure:
    """Diagonalize every h_k on the grid k_m = 2 pi m / N.

    Eigenvectors are (E, g_k) / sqrt(E^2 + |g_k|^2), so the emitter couples to each band
    with alpha * E / sqrt(E^2 + |g_k|^2). Points where both bands leave A are flagged
    degenerate and carry zero coupling.
    """
    n = params.N
    k = 2.0 * np.pi * np.arange(n) / n
    e_minus, e_plus = dispersion(params, k)
    g = coupling_g(params, k)
    abs_g_sq = np.abs(g) ** 2
    norm_minus = np.sqrt(e_minus ** 2 + abs_g_sq)
    norm_plus = np.sqrt(e_plus ** 2 + abs_g_sq)

    small_minus = norm_minus < DEGENERATE_TOL
    small_plus = norm_plus < DEGENERATE_TOL
    safe_minus = np.where(small_minus, 1.0, norm_minus)
    safe_plus = np.where(small_plus, 1.0, norm_plus)

    amp_a_minus = e_minus / safe_minus
    amp_a_plus = e_plus / safe_plus
    amp_b_minus = g / safe_minus
    amp_b_plus = g / safe_plus

    # one band decoupled from A (g = 0 with a single zero energy): pure B mode
    only_minus = small_minus & ~small_plus
    only_plus = small_plus & ~small_minus
    amp_a_minus[only_minus], amp_b_minus[only_minus] = 0.0, 1.0
    amp_a_plus[only_plus], amp_b_plus[only_plus] = 0.0, 1.0

    # h_k = 0 on the grid: both bands cross here, use the crossing limits
    both = small_minus & small_plus
    if np.any(both):
        x_minus, x_plus = _crossing_amplitudes(params)
        amp_a_minus[both], amp_a_plus[both] = x_minus, x_plus
        amp_b_minus[both], amp_b_plus[both] = -x_plus, x_minus
        logger.info(f"Band crossing lies on the k-grid at {np.count_nonzero(both)} point(s); using limit couplings")

    det_error = np.max(np.abs(e_plus * e_minus + abs_g_sq))
    assert det_error < 1e-12 * max(1.0, params.J ** 2 + params.rho ** 2), f"determinant identity violated ({det_error:.2e})"

    return BandStructure(
        params=params,
        k_grid=k,
        E_minus=e_minus,
        E_plus=e_plus,
        g_k=g,
        norm_minus=norm_minus,
        norm_plus=norm_plus,
        coupling_minus=(params.alpha * amp_a_minus).astype(complex),
        coupling_plus=(params.alpha * amp_a_plus).astype(complex),
        amp_a_minus=amp_a_minus,
        amp_a_plus=amp_a_plus,
        amp_b_minus=amp_b_minus,
        amp_b_plus=amp_b_plus,
        degenerate=small_minus | small_plus,
    )


def bloch_unitary(bands: BandStructure, index: int) -> np.ndarray:
    """U_k mapping (c_minus, c_plus) onto the (A, B) Bloch amplitudes"""
    return np.array(
        [
            [bands.amp_a_minus[index], bands.amp_a_plus[index]],
            [bands.amp_b_minus[index], bands.amp_b_plus[index]],
        ],
        dtype=complex,
    )


def band_table(bands: BandStructure) -> Tuple[List[str], List[np.ndarray]]:
    header = ["k", "E_minus", "E_plus", "abs_g", "alpha_minus_re", "alpha_minus_im", "alpha_plus_re", "alpha_plus_im"]
    columns = [
        bands.k_grid,
        bands.E_minus,
        bands.E_plus,
        np.abs(bands.g_k),
        bands.coupling_minus.real,
        bands.coupling_minus.imag,
        bands.coupling_plus.real,
        bands.coupling_plus.imag,
    ]
    return header, columns


def _require_crossing(params: LatticeParams):
    if not params.at_crossing():
        raise RegimeError(f"phi = {params.phi!r} is not pi/2; the bands do not cross linearly")
    if params.rho == 0.0:
        raise RegimeError("rho = 0 leaves the B sublattice decoupled; no band crossing")


def crossing_couplings(params: LatticeParams) -> Tuple[float, float]:
    """Limits |alpha_{pi/2}^-|, |alpha_{pi/2}^+| of the couplings at the band crossing"""
    _require_crossing(params)
    x_minus, x_plus = _crossing_amplitudes(params)
    return params.alpha * x_minus, params.alpha * x_plus


@dataclass(frozen=True)
class FeedbackRates:
    """Group velocities, loop delays and feedback rates of the delay equation"""

    N: int
    Omega_minus: float
    Omega_plus: float
    T_minus: float
    T_plus: float
    gamma0_minus: float
    gamma0_plus: float

    @property
    def gamma0(self) -> float:
        return self.gamma0_minus + self.gamma0_plus

    @property
    def parity(self) -> int:
        return self.N % 4

    def gamma_n(self, n: int, band: str) -> complex:
        """Feedback rate of the n-th loop; band is '-' (fast) or '+' (slow)"""
        # exact quarter-turn phases: exp(+-i pi n N / 2) = (+-i)^(nN mod 4)
        quarter = (n * self.N) % 4
        if band == "-":
            return self.gamma0_minus * (-1j) ** quarter
        if band == "+":
            return self.gamma0_plus * (1j) ** quarter
        raise ValueError(f"unknown band '{band}'")

    def delay(self, band: str) -> float:
        return self.T_minus if band == "-" else self.T_plus

    def T_meet(self, n: int) -> float:
        return n * self.T_minus * self.T_plus / (self.T_minus + self.T_plus)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "Omega_minus": self.Omega_minus,
            "Omega_plus": self.Omega_plus,
            "T_minus": self.T_minus,
            "T_plus": self.T_plus,
            "gamma0_minus": self.gamma0_minus,
            "gamma0_plus": self.gamma0_plus,
            "gamma0": self.gamma0,
        }


def feedback_rates(params: LatticeParams) -> FeedbackRates:
    alpha_minus, alpha_plus = crossing_couplings(params)
    root = math.sqrt(params.J ** 2 + params.rho ** 2)
    om_minus = -params.J - root
    om_plus = -params.J + root
    # om_plus -> 0 as rho/J -> 0: the slow loop time diverges (flat band)
    return FeedbackRates(
        N=params.N,
        Omega_minus=om_minus,
        Omega_plus=om_plus,
        T_minus=params.N / abs(om_minus),
        T_plus=params.N / abs(om_plus),
        gamma0_minus=alpha_minus ** 2 / abs(om_minus),
        gamma0_plus=alpha_plus ** 2 / abs(om_plus),
    )


def decay_time(rates: FeedbackRates) -> float:
    """Fermi-golden-rule decay time 1/gamma0"""
    return 1.0 / rates.gamma0 if rates.gamma0 > 0 else math.inf


class Regime(Enum):
    REVIVALS = "revivals"
    BLOCKADE = "blockade"
    DOUBLED_PERIOD = "doubled_period"
    NO_BLOCKADE = "no_blockade"
    CROSSOVER = "crossover"


def classify_regime(params: LatticeParams, separation: float = 4.0) -> Tuple[Regime, str, Dict[str, float]]:
    """
    Classify the expected decay dynamics

    Returns:
        (regime, reason, scales)
        scales: T_d, T_minus, T_plus, T_meet_1, delay_ratio
    """
    rates = feedback_rates(params)
    t_d = decay_time(rates)
    scales = {
        "T_d": t_d,
        "T_minus": rates.T_minus,
        "T_plus": rates.T_plus,
        "T_meet_1": rates.T_meet(1),
        "delay_ratio": rates.T_plus / rates.T_minus,
    }

    if t_d * separation < rates.T_minus:
        return Regime.REVIVALS, "decay completes within one fast loop", scales
    if t_d < separation * rates.T_minus:
        return Regime.CROSSOVER, "decay time comparable to the fast loop time", scales

    parity = params.parity
    if parity == 2:
        return Regime.BLOCKADE, "N = 2 (mod 4): alternating real feedback rates", scales
    if parity in (1, 3):
        branch = "+" if parity == 1 else "-"
        return Regime.DOUBLED_PERIOD, f"odd N: imaginary feedback rates, '{branch}' branch", scales
    return Regime.NO_BLOCKADE, "N = 0 (mod 4): feedback rates do not alternate", scales
