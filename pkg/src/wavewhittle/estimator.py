"""Multivariate wavelet Whittle estimation of memory parameters and long-run covariance.

Pipeline: detail pyramid -> scalogram -> profile objective minimized over the
memory vector d -> phase-corrected long-run covariance.  Works for any p >= 1;
p = 1 reduces to the univariate wavelet Whittle estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, minimize, minimize_scalar

from .errors import ConfigError, DomainError, LikelihoodError, ScaleRangeError
from .wavelets import (
    WaveletPyramid,
    WaveletSpec,
    coefficient_counts,
    dwt_pyramid,
    max_feasible_level,
    spectral_k,
)

LOG2 = math.log(2.0)


@dataclass
class Scalogram:
    """Per-scale sums of outer products I(j) = sum_k W_{j,k} W_{j,k}^T.

    Kept unnormalized (no division by n_j).  ``matrices[i]`` is the p x p
    matrix for scale j = j0 + i.
    """

    matrices: np.ndarray
    counts: np.ndarray
    j0: int
    j1: int

    @property
    def n_channels(self) -> int:
        return self.matrices.shape[1]

    @property
    def n_coefficients(self) -> int:
        return int(self.counts.sum())

    @property
    def mean_scale(self) -> float:
        """Count-weighted mean scale <J> = (1/n) sum_j j n_j."""
        js = np.arange(self.j0, self.j1 + 1)
        return float((js * self.counts).sum() / self.counts.sum())

    def channel(self, ell: int) -> "Scalogram":
        """Single-channel view, for univariate estimation of channel ell."""
        return Scalogram(
            matrices=self.matrices[:, ell : ell + 1, ell : ell + 1],
            counts=self.counts,
            j0=self.j0,
            j1=self.j1,
        )


def scalogram(pyramid: WaveletPyramid, j0: int, j1: int) -> Scalogram:
    """Sum the per-scale outer products of the pyramid over scales j0..j1."""
    if not 1 <= j0 <= j1 <= pyramid.j_max:
        raise ScaleRangeError(
            f"scales {j0}..{j1} not covered by pyramid (1..{pyramid.j_max})"
        )
    if pyramid.counts[j1 - 1] < 1:
        raise ScaleRangeError(f"no coefficients at requested coarsest scale {j1}")
    mats = []
    for j in range(j0, j1 + 1):
        w = pyramid.level(j)
        mats.append(w.T @ w)
    return Scalogram(
        matrices=np.array(mats),
        counts=pyramid.counts[j0 - 1 : j1].copy(),
        j0=j0,
        j1=j1,
    )


def _g_weighted(scal: Scalogram, d: np.ndarray, center: float) -> np.ndarray:
    """(1/n) sum_j Lam_{j-center}(d)^-1 I(j) Lam_{j-center}(d)^-1."""
    js = np.arange(scal.j0, scal.j1 + 1, dtype=np.float64)
    factors = 2.0 ** (-np.outer(js - center, d))
    return np.einsum("jl,jlm,jm->lm", factors, scal.matrices, factors) / scal.n_coefficients


def g_hat(scal: Scalogram, d) -> np.ndarray:
    """Profile covariance G_hat(d), entrywise (1/n) sum_j 2^-j(d_l+d_m) I_lm(j)."""
    d = np.atleast_1d(np.asarray(d, dtype=np.float64))
    return _g_weighted(scal, d, 0.0)


def whittle_likelihood(scal: Scalogram, g_matrix: np.ndarray, d) -> float:
    """Wavelet Whittle criterion L(G, d) in its trace form.

    Equals log det G + 2 log(2) <J> sum(d) + trace(G^-1 G_hat(d)); raises
    LikelihoodError when G is singular or not positive definite.
    """
    d = np.atleast_1d(np.asarray(d, dtype=np.float64))
    g_matrix = np.asarray(g_matrix, dtype=np.float64)
    sign, logdet = np.linalg.slogdet(g_matrix)
    if sign <= 0 or not np.isfinite(logdet):
        raise LikelihoodError("criterion needs a positive definite G")
    try:
        trace_term = float(np.trace(np.linalg.solve(g_matrix, g_hat(scal, d))))
    except np.linalg.LinAlgError as exc:
        raise LikelihoodError("singular G in criterion") from exc
    return logdet + 2.0 * LOG2 * scal.mean_scale * float(d.sum()) + trace_term


def objective_R(scal: Scalogram, d) -> float:
    """Reduced objective R(d) = L(G_hat(d), d) - 1, computed in shifted form.

    Evaluated as log det of the <J>-centred weighted scalogram average plus
    (p - 1), which keeps the exponents small; returns +inf when the profile
    covariance is singular so minimizers treat the point as infeasible.
    """
    d = np.atleast_1d(np.asarray(d, dtype=np.float64))
    g_bar = _g_weighted(scal, d, scal.mean_scale)
    sign, logdet = np.linalg.slogdet(g_bar)
    if sign <= 0 or not np.isfinite(logdet):
        return math.inf
    return logdet + scal.n_channels - 1.0


@dataclass
class EstimationConfig:
    """Scale range and optimizer settings for the Whittle minimization.

    ``j1 = None`` uses the deepest scale with at least p coefficients.
    The search box defaults to (-2, M]; its upper end is resolved against
    the wavelet spec at estimation time when left as None.
    """

    j0: int = 1
    j1: int | None = None
    box_low: float = -2.0
    box_high: float | None = None
    multistart: int = 5
    xatol: float = 1e-5
    fatol: float = 1e-9
    max_iterations: int | None = None
    seed: int = 0
    degeneracy_threshold: float = 0.1
    coord_threshold: int = 12

    def __post_init__(self):
        if self.j0 < 1:
            raise ConfigError("j0 must be at least 1")
        if self.j1 is not None and self.j1 <= self.j0:
            raise ConfigError("j1 must exceed j0")
        if self.multistart < 1:
            raise ConfigError("multistart must be at least 1")

    def resolved_box(self, spec: WaveletSpec) -> tuple[float, float]:
        high = self.box_high if self.box_high is not None else float(spec.vanishing_moments)
        if not high > self.box_low:
            raise ConfigError("search box is empty")
        return self.box_low, high


def rate_rule_j0(n_samples: int, beta: float) -> int:
    """Finest scale from the optimal-rate rule 2^j0 = N**(1/(1+2*beta))."""
    if beta <= 0:
        raise ConfigError("beta must be positive")
    return max(1, round(math.log2(n_samples) / (1.0 + 2.0 * beta)))


def _log_regression_init(scal: Scalogram, box: tuple[float, float]) -> np.ndarray:
    """Per-channel slope of log2(I_ll(j)/n_j) on j, halved."""
    js = np.arange(scal.j0, scal.j1 + 1, dtype=np.float64)
    init = np.empty(scal.n_channels)
    for ell in range(scal.n_channels):
        with np.errstate(divide="ignore", invalid="ignore"):
            y = np.log2(np.diagonal(scal.matrices, axis1=1, axis2=2)[:, ell] / scal.counts)
        good = np.isfinite(y)
        if good.sum() >= 2:
            slope = np.polyfit(js[good], y[good], 1)[0]
            init[ell] = 0.5 * slope
        else:
            init[ell] = 0.25
    margin = 1e-3 * (box[1] - box[0])
    return np.clip(init, box[0] + margin, box[1] - margin)


def _minimize_simplex(fun, x0, box, config):
    lo, hi = box
    options = {"xatol": config.xatol, "fatol": config.fatol, "adaptive": x0.size > 4}
    if config.max_iterations is not None:
        options["maxiter"] = config.max_iterations
        options["maxfev"] = config.max_iterations
    return minimize(
        fun,
        x0,
        method="Nelder-Mead",
        bounds=Bounds(np.full(x0.size, lo), np.full(x0.size, hi)),
        options=options,
    )


def _coordinate_descent(fun, x0, box, config):
    """Cyclic 1-D minimization fallback for large channel counts."""
    lo, hi = box
    x = x0.copy()
    value = fun(x)
    converged = False
    sweeps = 0
    for sweeps in range(1, 61):
        moved = 0.0
        for ell in range(x.size):
            def line(t, ell=ell):
                trial = x.copy()
                trial[ell] = t
                return fun(trial)

            res = minimize_scalar(line, bounds=(lo, hi), method="bounded",
                                  options={"xatol": config.xatol})
            if res.fun < value:
                moved = max(moved, abs(res.x - x[ell]))
                x[ell] = res.x
                value = res.fun
        if moved < 10 * config.xatol:
            converged = True
            break
    return x, value, converged, sweeps


def estimate_d(scal: Scalogram, config: EstimationConfig, spec: WaveletSpec):
    """Minimize R(d) over the search box; returns (d_hat, R(d_hat), diagnostics).

    Multi-start simplex search seeded by the per-channel log-regression of
    scalogram diagonals, plus seeded jitter; deterministic given the config.
    """
    p = scal.n_channels
    if scal.n_coefficients < p:
        raise ConfigError(
            f"only {scal.n_coefficients} coefficients for {p} channels; estimation refused"
        )
    if scal.j1 == scal.j0:
        raise ConfigError("single-scale objective is flat in d; need j0 < j1")
    box = config.resolved_box(spec)

    def fun(d):
        return objective_R(scal, d)

    x_init = _log_regression_init(scal, box)

    if p > config.coord_threshold:
        x, value, converged, sweeps = _coordinate_descent(fun, x_init, box, config)
        diagnostics = {
            "method": "coordinate-descent",
            "sweeps": sweeps,
            "converged": converged,
            "starts": 1,
        }
        return x, value, diagnostics

    rng = np.random.default_rng(config.seed)
    starts = [x_init]
    margin = 1e-3 * (box[1] - box[0])
    for _ in range(config.multistart - 1):
        jitter = x_init + rng.uniform(-0.5, 0.5, size=p)
        starts.append(np.clip(jitter, box[0] + margin, box[1] - margin))

    best = None
    n_converged = 0
    total_evals = 0
    for x0 in starts:
        res = _minimize_simplex(fun, x0, box, config)
        total_evals += res.nfev
        n_converged += bool(res.success)
        if best is None or res.fun < best.fun:
            best = res
    diagnostics = {
        "method": "nelder-mead",
        "starts": len(starts),
        "converged": bool(best.success),
        "all_converged": n_converged == len(starts),
        "function_evaluations": total_evals,
        "iterations": int(best.nit),
    }
    return np.asarray(best.x, dtype=np.float64), float(best.fun), diagnostics


def estimate_omega(scal: Scalogram, d_hat, spec: WaveletSpec, config: EstimationConfig):
    """Phase-corrected long-run covariance from the profile covariance at d_hat.

    Omega_hat[l, m] = G_hat[l, m] / (cos(pi (d_l - d_m)/2) * K(d_l + d_m)/2pi);
    the 2*pi matches the model normalization under which unit white noise has
    unit wavelet variance.  Pairs with |cos| below the degeneracy threshold
    are flagged; an exactly vanishing cosine (or a K-domain violation) marks
    the pair undefined (NaN).  Returns (omega, correlation, g_matrix, warnings).
    """
    d_hat = np.atleast_1d(np.asarray(d_hat, dtype=np.float64))
    p = d_hat.size
    g_matrix = g_hat(scal, d_hat)
    omega = np.full((p, p), np.nan)
    warnings: dict[str, list] = {
        "degenerate_pairs": [],
        "undefined_pairs": [],
        "invalid_channels": [],
        "out_of_range_correlation": [],
    }

    k_cache: dict[float, float] = {}

    def k_norm(delta: float) -> float:
        if delta not in k_cache:
            k_cache[delta] = spectral_k(delta, spec) / (2.0 * math.pi)
        return k_cache[delta]

    for ell in range(p):
        for m in range(ell, p):
            cosine = math.cos(math.pi * (d_hat[ell] - d_hat[m]) / 2.0)
            if m > ell and abs(cosine) < config.degeneracy_threshold:
                warnings["degenerate_pairs"].append((ell, m))
            if abs(cosine) < 1e-12:  # d_l - d_m congruent to 1 mod 2
                warnings["undefined_pairs"].append((ell, m))
                continue
            try:
                denom = cosine * k_norm(float(d_hat[ell] + d_hat[m]))
            except DomainError:
                warnings["undefined_pairs"].append((ell, m))
                continue
            omega[ell, m] = omega[m, ell] = g_matrix[ell, m] / denom

    diag = np.diagonal(omega).copy()
    for ell in range(p):
        if not diag[ell] > 0:
            warnings["invalid_channels"].append(ell)
            diag[ell] = np.nan
    scale = np.sqrt(diag)
    with np.errstate(invalid="ignore", divide="ignore"):
        correlation = omega / np.outer(scale, scale)
    for ell in range(p):
        for m in range(ell + 1, p):
            c = correlation[ell, m]
            if np.isfinite(c) and abs(c) > 1.05:
                warnings["out_of_range_correlation"].append((ell, m))
    return omega, correlation, g_matrix, warnings


@dataclass
class MwwEstimate:
    """Joint estimate of d, the profile covariance, and the long-run covariance."""

    d_hat: np.ndarray
    g_matrix: np.ndarray
    omega: np.ndarray
    correlation: np.ndarray
    objective_value: float
    j0: int
    j1: int
    counts: np.ndarray
    diagnostics: dict
    warnings: dict


def resolve_scales(
    n_samples: int, spec: WaveletSpec, config: EstimationConfig, n_channels: int = 1
) -> tuple[int, int]:
    """Clamp the configured scale range to what the sample length supports.

    The requested coarsest scale is reduced to the deepest level holding at
    least one coefficient (defaulting to the deepest level with at least p
    when unset); an empty or single-scale result raises ScaleRangeError.
    """
    feasible = max_feasible_level(n_samples, spec)
    if config.j1 is None:
        counts = coefficient_counts(n_samples, spec, feasible)
        deep_enough = np.nonzero(counts >= max(1, n_channels))[0]
        j1 = int(deep_enough[-1]) + 1 if deep_enough.size else feasible
    else:
        j1 = min(config.j1, feasible)
    if config.j0 > feasible:
        raise ScaleRangeError(
            f"finest scale j0={config.j0} infeasible for N={n_samples} (max {feasible})"
        )
    if j1 <= config.j0:
        raise ScaleRangeError(
            f"scale range j0={config.j0}, j1={j1} leaves fewer than two scales"
        )
    return config.j0, j1


def estimate_panel(panel: np.ndarray, spec: WaveletSpec, config: EstimationConfig) -> MwwEstimate:
    """Full estimation pipeline on an (N, p) sample panel."""
    x = np.asarray(panel, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    j0, j1 = resolve_scales(x.shape[0], spec, config, x.shape[1])
    pyramid = dwt_pyramid(x, spec, j1)
    scal = scalogram(pyramid, j0, j1)
    d_hat, value, diagnostics = estimate_d(scal, config, spec)
    omega, correlation, g_matrix, warnings = estimate_omega(scal, d_hat, spec, config)
    if config.j1 is not None and j1 != config.j1:
        diagnostics["requested_j1"] = config.j1
    return MwwEstimate(
        d_hat=d_hat,
        g_matrix=g_matrix,
        omega=omega,
        correlation=correlation,
        objective_value=value,
        j0=j0,
        j1=j1,
        counts=scal.counts,
        diagnostics=diagnostics,
        warnings=warnings,
    )


def estimate_univariate_each(
    panel: np.ndarray, spec: WaveletSpec, config: EstimationConfig
) -> tuple[np.ndarray, list[dict]]:
    """Estimate d channel by channel with p = 1 runs of the same pipeline."""
    x = np.asarray(panel, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    j0, j1 = resolve_scales(x.shape[0], spec, config, 1)
    pyramid = dwt_pyramid(x, spec, j1)
    scal = scalogram(pyramid, j0, j1)
    d_hats = np.empty(x.shape[1])
    diags = []
    for ell in range(x.shape[1]):
        d_ell, _, diag = estimate_d(scal.channel(ell), config, spec)
        d_hats[ell] = d_ell[0]
        diags.append(diag)
    return d_hats, diags
