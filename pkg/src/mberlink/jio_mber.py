"""Jointly adapted subspace projection and reduced-rank filter, BER criterion.

Per received symbol the detector runs J inner cycles; each cycle updates
the filter and the projection matrix from the same pre-cycle state and
then rescales the filter so that ``w^H S^H S w = 1``.  The update
equations assume that unit norm holds on entry to the cycle, which the
scaling of the previous cycle guarantees (the very first cycle starts
from the all-zero filter, where the update reduces to the pure
excitation term and the scaling then establishes the constraint).

Rank selection truncates the leading columns/entries of a state adapted
at the maximum allowed rank, renormalizes, and picks the rank whose
single-sample error-probability estimate is smallest.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .detector_core import q_function
from .errors import ConfigurationError

_SQRT_2PI = np.sqrt(2.0 * np.pi)
_SCALE_EPS = 1e-12


class Mode(enum.Enum):
    TRAINING = "training"
    DECISION_DIRECTED = "decision_directed"


@dataclass
class JioState:
    """Mutable adaptation state: projection S (M x D) and filter w (D)."""

    S: np.ndarray
    w: np.ndarray
    mu_w: float
    mu_S: float
    J: int
    rho: float
    mode: Mode = Mode.TRAINING
    active_rank: int = 0
    scaling_skipped: bool = field(default=False, repr=False)

    @property
    def dims(self) -> tuple[int, int]:
        return self.S.shape


@dataclass(frozen=True)
class RankSelectionConfig:
    """Allowed rank range for automatic selection.

    ``averaging_factor`` > 0 enables an exponentially averaged variant of
    the per-symbol error-probability metric (extension; 0 disables it and
    reproduces the instantaneous rule).
    """

    d_min: int
    d_max: int
    enabled: bool = True
    averaging_factor: float = 0.0

    def __post_init__(self):
        if not 1 <= self.d_min <= self.d_max:
            raise ConfigurationError(
                f"need 1 <= d_min <= d_max, got [{self.d_min}, {self.d_max}]"
            )
        if not 0.0 <= self.averaging_factor < 1.0:
            raise ConfigurationError("averaging_factor must be in [0, 1)")


def init_state(
    M: int, D: int, mu_w: float, mu_S: float, J: int, rho: float
) -> JioState:
    """Fresh state: S = [I_D; 0], w = 0, training mode."""
    if not 1 <= D <= M:
        raise ConfigurationError(f"need 1 <= D <= M, got D={D}, M={M}")
    if J < 1:
        raise ConfigurationError(f"need J >= 1, got {J}")
    if not (mu_w >= 0 and mu_S >= 0):
        raise ConfigurationError("step sizes must be non-negative")
    if not rho > 0:
        raise ConfigurationError(f"rho must be positive, got {rho}")
    S = np.zeros((M, D), dtype=np.complex128)
    S[:D, :D] = np.eye(D)
    return JioState(
        S=S,
        w=np.zeros(D, dtype=np.complex128),
        mu_w=float(mu_w),
        mu_S=float(mu_S),
        J=int(J),
        rho=float(rho),
        mode=Mode.TRAINING,
        active_rank=D,
    )


def _update_factor(x_real: float, b: int, rho: float) -> float:
    # scalar multiplier shared by both updates; unit-norm state assumed
    return (
        np.exp(-(x_real * x_real) / (2.0 * rho * rho))
        * float(b)
        / (2.0 * _SQRT_2PI * rho)
    )


def update_filter(state: JioState, r: np.ndarray, b: int) -> np.ndarray:
    """One filter recursion; returns the new w, state untouched."""
    S, w = state.S, state.w
    z = S.conj().T @ r
    xr = np.vdot(w, z).real
    shsw = S.conj().T @ (S @ w)
    c = _update_factor(xr, b, state.rho)
    return w + (state.mu_w * c) * (z - xr * shsw)


def update_projection(state: JioState, r: np.ndarray, b: int) -> np.ndarray:
    """One projection-matrix recursion; returns the new S, state untouched."""
    S, w = state.S, state.w
    z = S.conj().T @ r
    xr = np.vdot(w, z).real
    sw = S @ w
    c = _update_factor(xr, b, state.rho)
    wc = w.conj()
    return S + (state.mu_S * c) * (np.outer(r, wc) - xr * np.outer(sw, wc))


def scale_filter(state: JioState) -> JioState:
    """Rescale w so that w^H S^H S w = 1; skipped (and flagged) near zero."""
    sw = state.S @ state.w
    norm_sq = np.vdot(sw, sw).real
    if norm_sq < _SCALE_EPS:
        state.scaling_skipped = True
        return state
    state.w = state.w / np.sqrt(norm_sq)
    state.scaling_skipped = False
    return state


def _adapt(state: JioState, r: np.ndarray, b: int) -> None:
    for _ in range(state.J):
        w_next = update_filter(state, r, b)
        s_next = update_projection(state, r, b)
        state.w = w_next
        state.S = s_next
        scale_filter(state)


def jio_step(
    state: JioState, r: np.ndarray, b_known: int | None = None
) -> tuple[JioState, int]:
    """Detect the current symbol, then run the J adaptation cycles.

    The returned decision comes from the state as it stood before any
    update.  In training mode ``b_known`` drives the updates; in
    decision-directed mode the detector's own decision does and
    ``b_known`` must be omitted.
    """
    xr = np.vdot(state.w, state.S.conj().T @ r).real
    decided = 1 if xr >= 0.0 else -1
    if state.mode is Mode.TRAINING:
        if b_known is None:
            raise ValueError("training mode requires the true bit")
        b = b_known
    else:
        if b_known is not None:
            raise ValueError("decision-directed mode must not receive a bit")
        b = decided
    _adapt(state, r, b)
    return state, decided


def truncated_statistics(
    state: JioState, r: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Filter outputs and squared norms for every leading-column truncation.

    Entry ``d`` (0-based) corresponds to keeping the first ``d+1`` filter
    taps and projection columns: ``x[d] = w_d^H S_d^H r`` and
    ``n[d] = ||S_d w_d||^2``, computed without renormalization.
    """
    z = state.S.conj().T @ r
    x = np.cumsum(state.w.conj() * z)
    sw = np.cumsum(state.S * state.w[None, :], axis=1)
    n = (sw.real**2 + sw.imag**2).sum(axis=0)
    return x, n


def candidate_error(
    state: JioState,
    D: int,
    r: np.ndarray,
    b: int | None,
    rho: float | None = None,
) -> float:
    """Error-probability estimate of the rank-D truncation of the state.

    The leading D filter entries and projection columns are rescaled to
    satisfy the unit-norm constraint before evaluating.  ``b`` is the
    training bit; ``None`` uses the truncated detector's own decision.
    A truncation with vanishing norm is uninformative and scores 0.5.
    """
    rho = state.rho if rho is None else rho
    if not 1 <= D <= state.w.shape[0]:
        raise ConfigurationError(f"rank {D} outside [1, {state.w.shape[0]}]")
    w_d = state.w[:D]
    s_d = state.S[:, :D]
    sw = s_d @ w_d
    norm_sq = np.vdot(sw, sw).real
    if norm_sq < _SCALE_EPS:
        return 0.5
    xr = np.vdot(w_d, s_d.conj().T @ r).real / np.sqrt(norm_sq)
    signed = abs(xr) if b is None else float(b) * xr
    return float(q_function(signed / rho))


def select_rank(
    state: JioState,
    cfg: RankSelectionConfig,
    r: np.ndarray,
    b: int | None = None,
) -> int:
    """Rank in [d_min, d_max] minimizing the truncated error estimate.

    Ties break toward the smallest rank.
    """
    if cfg.d_max > state.w.shape[0]:
        raise ConfigurationError(
            f"d_max={cfg.d_max} exceeds the adapted rank {state.w.shape[0]}"
        )
    best_d = cfg.d_min
    best_p = candidate_error(state, cfg.d_min, r, b)
    for d in range(cfg.d_min + 1, cfg.d_max + 1):
        p = candidate_error(state, d, r, b)
        if p < best_p:
            best_p = p
            best_d = d
    return best_d
