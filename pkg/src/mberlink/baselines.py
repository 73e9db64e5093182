"""Runnable full-rank reference detectors: LMS (MSE) and MBER SG."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .jio_mber import Mode

_SQRT_2PI = np.sqrt(2.0 * np.pi)
_SCALE_EPS = 1e-12


@dataclass
class FullRankState:
    """Length-M filter with its step size; rho only used by the MBER rule."""

    w: np.ndarray
    mu: float
    rho: float | None = None
    mode: Mode = Mode.TRAINING
    scaling_skipped: bool = field(default=False, repr=False)

    def __post_init__(self):
        if not self.mu >= 0:
            raise ConfigurationError("step size must be non-negative")


def init_full_rank(M: int, mu: float, rho: float | None = None) -> FullRankState:
    return FullRankState(w=np.zeros(M, dtype=np.complex128), mu=mu, rho=rho)


def lms_update(state: FullRankState, r: np.ndarray, b: int) -> FullRankState:
    """Standard complex LMS step toward the reference bit b."""
    e = float(b) - np.vdot(state.w, r)
    state.w = state.w + state.mu * np.conj(e) * r
    return state


def mber_full_rank_update(state: FullRankState, r: np.ndarray, b: int) -> FullRankState:
    """Minimum-BER stochastic-gradient step with unit-norm rescaling.

    This is the reduced-rank filter recursion specialized to an identity
    projection at full rank, followed by scaling to ||w|| = 1 (skipped,
    and flagged, while the filter is still the all-zero init).
    """
    if state.rho is None or not state.rho > 0:
        raise ConfigurationError("MBER update requires a positive rho")
    w = state.w
    xr = np.vdot(w, r).real
    c = (
        np.exp(-(xr * xr) / (2.0 * state.rho * state.rho))
        * float(b)
        / (2.0 * _SQRT_2PI * state.rho)
    )
    w_next = w + (state.mu * c) * (r - xr * w)
    norm_sq = np.vdot(w_next, w_next).real
    if norm_sq < _SCALE_EPS:
        state.scaling_skipped = True
        state.w = w_next
        return state
    state.w = w_next / np.sqrt(norm_sq)
    state.scaling_skipped = False
    return state
