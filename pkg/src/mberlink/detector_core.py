"""Reduced-rank detection pipeline and the error-probability machinery.

All operations are pure functions of their inputs.  The decision
statistic ``x = w^H S^H r`` feeds a kernel-smoothed single-sample
estimate of the bit error probability, whose analytic gradients with
respect to the conjugated filter and projection entries drive the
stochastic-gradient detectors.

Gradient convention: for a real cost f of complex variables, the
returned arrays are df/d(conj(z)), so the real/imaginary partials are
``2*Re`` and ``2*Im`` of the returned entries and a descent step is
``z - mu * gradient``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

_SQRT2 = np.sqrt(2.0)
_SQRT_2PI = np.sqrt(2.0 * np.pi)
_NORM_EPS = 1e-12


@dataclass(frozen=True)
class DecisionStatistic:
    """Filter output ``x`` and the bit-aligned real part sign{b}*Re[x]."""

    x: complex
    signed_real: float


def _check_bit(b: int) -> float:
    if b not in (-1, 1):
        raise ValueError(f"bit must be -1 or +1, got {b!r}")
    return float(b)


def decision_statistic(x: complex, bit: int) -> DecisionStatistic:
    """Statistic for a known (training or decided) bit."""
    return DecisionStatistic(x=complex(x), signed_real=_check_bit(bit) * complex(x).real)


def project(projection: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Reduced-dimension observation S^H r."""
    if projection.shape[0] != r.shape[0]:
        raise ValueError(
            f"dimension mismatch: projection has {projection.shape[0]} rows, "
            f"received vector has length {r.shape[0]}"
        )
    return projection.conj().T @ r


def filter_and_decide(w: np.ndarray, rbar: np.ndarray) -> tuple[DecisionStatistic, int]:
    """Filter output w^H rbar and the hard decision sign(Re), +1 on ties."""
    if w.shape[0] != rbar.shape[0]:
        raise ValueError(
            f"dimension mismatch: filter length {w.shape[0]} vs input {rbar.shape[0]}"
        )
    x = complex(np.vdot(w, rbar))
    bit = 1 if x.real >= 0.0 else -1
    return decision_statistic(x, bit), bit


def q_function(x):
    """Gaussian tail probability Q(x) = P(Z > x), Z standard normal."""
    return 0.5 * erfc(x / _SQRT2)


def kernel_density(x_tilde: float, center: float, norm_sq: float, rho: float) -> float:
    """Gaussian kernel density with mean ``center``, variance rho^2*norm_sq."""
    if not norm_sq > 0:
        raise ValueError(f"norm_sq must be positive, got {norm_sq}")
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    d = x_tilde - center
    return float(
        np.exp(-(d * d) / (2.0 * norm_sq * rho * rho))
        / (rho * np.sqrt(2.0 * np.pi * norm_sq))
    )


def error_probability(stat: DecisionStatistic, norm_sq: float, rho: float) -> float:
    """Kernel-smoothed bit error probability Q(sign{b}Re[x] / (rho sqrt(norm_sq)))."""
    if not norm_sq > 0:
        raise ValueError(f"norm_sq must be positive, got {norm_sq}")
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    return float(q_function(stat.signed_real / (rho * np.sqrt(norm_sq))))


def _common_terms(projection: np.ndarray, w: np.ndarray, r: np.ndarray):
    z = projection.conj().T @ r
    sw = projection @ w
    norm_sq = np.vdot(sw, sw).real
    if norm_sq <= _NORM_EPS:
        raise ValueError(
            "filter norm through the projection is ~0; scale the state first"
        )
    x_real = np.vdot(w, z).real
    return z, sw, norm_sq, x_real


def gradient_w(
    projection: np.ndarray, w: np.ndarray, r: np.ndarray, b: int, rho: float
) -> np.ndarray:
    """Gradient of the error-probability estimate w.r.t. conj(w).

    Returns
    -------
    numpy.ndarray, shape (D,)
        ``-exp(-Re[x]^2 / (2 rho^2 n)) sign{b} / (2 sqrt(2 pi) rho)
        * (S^H r / sqrt(n) - Re[x] S^H S w / n^{3/2})`` with
        ``n = w^H S^H S w``.
    """
    sign_b = _check_bit(b)
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    z, sw, n, xr = _common_terms(projection, w, r)
    shsw = projection.conj().T @ sw
    coeff = (
        -np.exp(-(xr * xr) / (2.0 * rho * rho * n)) * sign_b / (2.0 * _SQRT_2PI * rho)
    )
    return coeff * (z / np.sqrt(n) - (xr / n**1.5) * shsw)


def gradient_S(
    projection: np.ndarray, w: np.ndarray, r: np.ndarray, b: int, rho: float
) -> np.ndarray:
    """Gradient of the error-probability estimate w.r.t. conj(S).

    Same scalar factor as :func:`gradient_w`; the matrix part is
    ``r w^H / sqrt(n) - S w w^H Re[x] / n^{3/2}``.
    """
    sign_b = _check_bit(b)
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    _, sw, n, xr = _common_terms(projection, w, r)
    coeff = (
        -np.exp(-(xr * xr) / (2.0 * rho * rho * n)) * sign_b / (2.0 * _SQRT_2PI * rho)
    )
    wc = w.conj()
    return coeff * (np.outer(r, wc) / np.sqrt(n) - (xr / n**1.5) * np.outer(sw, wc))
