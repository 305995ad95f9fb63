"""Multivariate ARFIMA(0, d, 0) simulation and model wavelet covariances.

The simulator draws Gaussian innovations with covariance ``omega`` (for this
model the innovation covariance and the long-run covariance coincide, as the
short-memory spectral factor is identically one), applies the truncated
MA(inf) expansion of ``(1-L)^-d`` channel by channel, and integrates
(cumulative sums) for nonstationary memory parameters ``d >= 1/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve, lfilter

from .errors import CovarianceError, VanishingMomentError
from .wavelets import WaveletSpec, spectral_k, spectral_k_j


@dataclass(frozen=True)
class HolderParams:
    """Smoothness class (beta, L) of the short-memory spectral factor.

    For ARFIMA(0, d, 0) the factor is identically one, so beta is effectively
    2 with any L.  Feeds the W5 admissibility bound on memory parameters and
    the optimal-rate choice of the finest scale.
    """

    beta: float = 2.0
    bound: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta <= 2.0:
            raise ValueError("beta must lie in (0, 2]")
        if not self.bound > 0.0:
            raise ValueError("the Holder constant must be positive")

    def memory_lower_bound(self, spec: WaveletSpec) -> float:
        """W5 admissibility: memory parameters must exceed (1 + beta)/2 - alpha."""
        return (1.0 + self.beta) / 2.0 - spec.alpha


def frac_diff_coeffs(d: float, count: int) -> np.ndarray:
    """MA(inf) weights psi_0..psi_{count-1} of the filter (1-L)^-d.

    psi_0 = 1 and psi_j = psi_{j-1} * (j - 1 + d) / j, equivalently
    Gamma(j + d) / (Gamma(j + 1) Gamma(d)); the weights decay like
    j**(d-1).  Requires |d| < 1/2 (the stationary branch) and count >= 1.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if abs(d) >= 0.5:
        raise ValueError(f"stationary branch needs |d| < 1/2, got d={d}")
    j = np.arange(1, count)
    return np.concatenate(([1.0], np.cumprod((j - 1 + d) / j)))


def split_memory(d: float) -> tuple[float, int]:
    """Split d into a stationary exponent and an integer integration order.

    Returns (d_s, order) with d = d_s + order, |d_s| < 1/2 and order >= 0.
    Half-integers >= 1/2 sit on the stationarity boundary and are rejected.
    """
    if d < 0.5:
        if d <= -0.5:
            raise ValueError(f"memory parameter {d} below the stationary range")
        return float(d), 0
    order = math.ceil(d - 0.5)
    d_s = d - order
    if d_s >= 0.5 - 1e-12:
        order += 1
        d_s -= 1.0
    if abs(d_s) >= 0.5 - 1e-12:
        raise ValueError(f"memory parameter {d} sits on the d_s = +-1/2 boundary")
    return float(d_s), int(order)


def validate_long_run_cov(omega: np.ndarray) -> np.ndarray:
    """Check symmetry and positive definiteness; return the Cholesky factor."""
    omega = np.asarray(omega, dtype=np.float64)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise CovarianceError(f"omega must be square, got shape {omega.shape}")
    if not np.all(np.isfinite(omega)):
        raise CovarianceError("omega contains non-finite entries")
    if not np.allclose(omega, omega.T, rtol=1e-10, atol=1e-12):
        raise CovarianceError("omega is not symmetric")
    try:
        chol = np.linalg.cholesky(omega)
    except np.linalg.LinAlgError as exc:
        raise CovarianceError("omega is not positive definite") from exc
    return chol


def correlation_from_cov(omega: np.ndarray) -> np.ndarray:
    scale = np.sqrt(np.diag(omega))
    return omega / np.outer(scale, scale)


@dataclass
class ArfimaSpec:
    """Configuration of one ARFIMA(0, d, 0) draw.

    ``truncation`` is the MA(inf) cutoff (default 10*N); ``burn_in`` extra
    leading outputs are generated and discarded.  ``moment_cap`` optionally
    enforces d < M for a wavelet analysis planned downstream.  ``ar``
    optionally adds per-channel AR(1) contamination to the stationary part
    (robustness experiments; off by default).
    """

    d: np.ndarray
    omega: np.ndarray
    n_samples: int
    truncation: int | None = None
    burn_in: int = 0
    seed: int | np.random.SeedSequence = 0
    moment_cap: int | None = None
    ar: np.ndarray | None = None

    def __post_init__(self):
        self.d = np.atleast_1d(np.asarray(self.d, dtype=np.float64))
        self.omega = np.asarray(self.omega, dtype=np.float64)
        if not np.all(np.isfinite(self.d)):
            raise ValueError("memory parameters must be finite")
        if self.omega.shape != (self.d.size, self.d.size):
            raise CovarianceError(
                f"omega shape {self.omega.shape} does not match {self.d.size} channels"
            )
        validate_long_run_cov(self.omega)
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.truncation is None:
            self.truncation = 10 * self.n_samples
        if self.truncation < self.n_samples:
            raise ValueError("truncation must be at least n_samples")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.moment_cap is not None and np.any(self.d >= self.moment_cap):
            raise VanishingMomentError(
                f"memory parameters {self.d} must stay below the vanishing-moment cap "
                f"M={self.moment_cap}"
            )
        for value in self.d:
            split_memory(float(value))  # validates the integer split

    @property
    def n_channels(self) -> int:
        return self.d.size


def simulate_arfima(spec: ArfimaSpec) -> np.ndarray:
    """Draw an (N, p) panel from the ARFIMA(0, d, 0) model.

    Deterministic given the seed.  Stationary channels are truncated MA(inf)
    filters of correlated Gaussian innovations; channels with d >= 1/2 are
    simulated at exponent d - ceil(d - 1/2) and cumulatively summed.
    """
    chol = validate_long_run_cov(spec.omega)
    p = spec.n_channels
    n_out = spec.n_samples + spec.burn_in
    trunc = int(spec.truncation)

    rng = np.random.default_rng(spec.seed)
    innov = rng.standard_normal((trunc + n_out - 1, p)) @ chol.T

    panel = np.empty((spec.n_samples, p))
    for ell in range(p):
        d_s, order = split_memory(float(spec.d[ell]))
        weights = frac_diff_coeffs(d_s, trunc)
        series = fftconvolve(innov[:, ell], weights, mode="valid")
        if spec.ar is not None and spec.ar[ell] != 0.0:
            series = lfilter([1.0], [1.0, -float(spec.ar[ell])], series)
        series = series[spec.burn_in :]
        for _ in range(order):
            series = np.cumsum(series)
        panel[:, ell] = series
    return panel


def model_wavelet_cov(
    j: int,
    ell: int,
    m: int,
    d: np.ndarray,
    omega: np.ndarray,
    spec: WaveletSpec,
    order: str = "first",
) -> float:
    """Model-implied covariance of scale-j wavelet coefficients of channels (ell, m).

    First order: omega[l,m] * 2^(j(d_l+d_m)) * cos(pi(d_l-d_m)/2) * K(d_l+d_m) / 2pi.
    Second order replaces K by the scale-dependent K_j.  The 1/2pi matches
    the spectral normalization f(0+) ~ Omega/2pi of the model, under which
    unit white noise has unit wavelet variance.
    """
    d = np.atleast_1d(np.asarray(d, dtype=np.float64))
    omega = np.asarray(omega, dtype=np.float64)
    delta = float(d[ell] + d[m])
    if order == "first":
        k_val = spectral_k(delta, spec)
    elif order == "second":
        k_val = spectral_k_j(j, float(d[ell]), float(d[m]), spec)
    else:
        raise ValueError("order must be 'first' or 'second'")
    phase = math.cos(math.pi * (float(d[ell]) - float(d[m])) / 2.0)
    return float(omega[ell, m]) * 2.0 ** (j * delta) * phase * k_val / (2.0 * math.pi)
