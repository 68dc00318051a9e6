"""Analytic energy functional and radius-of-analyticity measurements.

``energy_term`` evaluates, for a 1-D field,

    E_N^eps[f] = eps^(N-1) / N! * ||d^N f||_s

in log space.  ``analytic_profile`` tabulates it for ``N = 1..N_max`` and
flags non-convergence instead of pretending the supremum was reached.

``radius_from_spectrum`` measures the strip width by fitting the exponential
decay rate of the Fourier coefficients (a function holomorphic in
``|Im z| < r`` has ``|f_hat(k)| ~ exp(-r |k|)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .spectral import SpectralField, sobolev_norm

__all__ = [
    "AnalyticProfile",
    "FitOptions",
    "RadiusEstimate",
    "energy_term",
    "log_energy_term",
    "analytic_profile",
    "radius_from_spectrum",
    "pole_radius",
    "DEFAULT_N_MAX",
    "NOISE_FLOOR",
]

DEFAULT_N_MAX = 24
NOISE_FLOOR = 1e-13
_DECAY_WINDOW = 5


def _floored_spectrum(f: SpectralField, floor: float) -> np.ndarray:
    c = np.array(f.spectrum)
    amp = np.abs(c)
    peak = amp.max() if amp.size else 0.0
    if peak > 0:
        c[amp < floor * peak] = 0.0
    return c


def _log_derivative_norm(f: SpectralField, c: np.ndarray, N: int, s: float) -> float:
    """``log ||d^N f||_s`` from (floored) coefficients ``c``."""
    k = f.grid.k
    mask = np.abs(c) > 0
    mask[:, k == 0] = False
    if N % 2:
        mask[:, f.grid.nyquist_index] = False
    if not mask.any():
        return -math.inf
    kk = np.broadcast_to(k, c.shape)[mask]
    logs = s * np.log1p(kk ** 2) + 2 * N * np.log(np.abs(kk)) + 2 * np.log(np.abs(c[mask]))
    return 0.5 * float(logsumexp(logs))


def log_energy_term(
    f: SpectralField, epsilon: float, N: int, s: float = 2.0, floor: float = NOISE_FLOOR
) -> float:
    """Natural log of :func:`energy_term` (``-inf`` for a zero term)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    c = _floored_spectrum(f, floor)
    log_norm = _log_derivative_norm(f, c, N, s)
    if log_norm == -math.inf:
        return -math.inf
    return (N - 1) * math.log(epsilon) - math.lgamma(N + 1) + log_norm


def energy_term(
    f: SpectralField, epsilon: float, N: int, s: float = 2.0, floor: float = NOISE_FLOOR
) -> float:
    """``eps^(N-1) / N! * ||d^N f||_s`` (1-D, summed over components)."""
    return math.exp(log_energy_term(f, epsilon, N, s, floor))


@dataclass(frozen=True)
class AnalyticProfile:
    epsilon: float
    s: float
    N_max: int
    log_terms: np.ndarray = field(repr=False)
    sup_value: float
    argmax_N: int
    converged: bool

    @property
    def terms(self) -> np.ndarray:
        """``E_N^eps`` for ``N = 1..N_max``."""
        return np.exp(self.log_terms)


def analytic_profile(
    f: SpectralField,
    epsilon: float,
    N_max: int = DEFAULT_N_MAX,
    s: float = 2.0,
    floor: float = NOISE_FLOOR,
) -> AnalyticProfile:
    """Tabulate ``E_N^eps[f]`` for ``N = 1..N_max``.

    ``converged`` is true iff the terms strictly decrease over the last five
    indices (trivially true for the zero field).
    """
    if N_max < 8:
        raise ValueError("N_max must be >= 8")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    c = _floored_spectrum(f, floor)
    log_terms = np.array(
        [
            (N - 1) * math.log(epsilon) - math.lgamma(N + 1) + _log_derivative_norm(f, c, N, s)
            for N in range(1, N_max + 1)
        ]
    )
    if np.all(log_terms == -np.inf):
        return AnalyticProfile(epsilon, s, N_max, log_terms, 0.0, 1, True)
    i = int(np.argmax(log_terms))
    tail = log_terms[-(_DECAY_WINDOW + 1):]
    decaying = bool(np.all(np.diff(tail) < 0))
    converged = decaying and (i + 1) <= N_max - _DECAY_WINDOW
    return AnalyticProfile(
        epsilon, s, N_max, log_terms, float(np.exp(log_terms[i])), i + 1, converged
    )


@dataclass(frozen=True)
class FitOptions:
    """Heuristics of the spectrum-fit estimator.

    Bins with ``|k| < low_k_fraction * k_nyquist`` are excluded, the band
    stops where the envelope first falls below ``floor * max``.
    """

    low_k_fraction: float = 0.1
    floor: float = NOISE_FLOOR
    min_decades: float = 4.0
    max_residual: float = 0.5
    min_bins: int = 8

    def __post_init__(self):
        if not 0 <= self.low_k_fraction < 1:
            raise ValueError("low_k_fraction must lie in [0, 1)")
        if not 0 < self.floor < 1:
            raise ValueError("floor must lie in (0, 1)")
        if self.min_bins < 2:
            raise ValueError("min_bins must be >= 2")


@dataclass(frozen=True)
class RadiusEstimate:
    value: float | None
    method: str  # spectrum_fit | pole | oracle
    fit_band: tuple[float, float] | None = None
    decades: float = 0.0
    residual: float = 0.0
    reliable: bool = False
    n_bins: int = 0


def spectral_envelope(f: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    """``(|k|, amplitude)`` for ``|k| = 0..k_nyquist``.

    The amplitude at ``|k|`` is the largest coefficient modulus at ``+k`` or
    ``-k`` over all components.
    """
    M = f.grid.M
    h = M // 2
    amp = np.abs(f.spectrum)
    pos = amp[:, : h + 1]
    neg = np.concatenate([amp[:, :1], amp[:, :h:-1], amp[:, h : h + 1]], axis=1)
    env = np.maximum(pos, neg).max(axis=0)
    kabs = 2 * np.pi * np.arange(h + 1) / f.grid.L
    return kabs, env


def radius_from_spectrum(f: SpectralField, options: FitOptions | None = None) -> RadiusEstimate:
    """Least-squares fit of ``log|f_hat|`` against ``|k|``; radius = -slope."""
    opts = options or FitOptions()
    kabs, env = spectral_envelope(f)
    peak = env.max()
    if peak == 0:
        raise ValueError("cannot measure the radius of the zero field")
    h = len(kabs) - 1
    start = int(np.searchsorted(kabs, opts.low_k_fraction * f.grid.k_nyquist, side="left"))
    start = max(start, 1)
    stop = start
    # Nyquist bin is ambiguous and never fitted
    while stop < h and env[stop] >= opts.floor * peak:
        stop += 1
    n = stop - start
    if n < opts.min_bins:
        return RadiusEstimate(None, "spectrum_fit", None, 0.0, 0.0, False, n)
    kk = kabs[start:stop]
    logs = np.log(env[start:stop])
    slope, intercept = np.polyfit(kk, logs, 1)
    residual = float(np.sqrt(np.mean((logs - (slope * kk + intercept)) ** 2)))
    decades = float((logs.max() - logs.min()) / math.log(10))
    value = float(-slope)
    reliable = value > 0 and decades >= opts.min_decades and residual <= opts.max_residual
    return RadiusEstimate(value, "spectrum_fit", (float(kk[0]), float(kk[-1])), decades, residual, reliable, n)


def pole_radius(oracle_id: str, params: dict | None = None, t: float = 0.0) -> float:
    """Exact strip width of the closed-form example solutions at time ``t``.

    ``example1``: ``u = (1 + x^2 e^{2t})^{-1}``, poles at ``x = +-i e^{-t}``.
    ``example2``: ``u = ((1 + x^2)^{p-1} - t)^{-1/(p-1)}``, singularities at
    ``|Im x| = sqrt(1 - t^{1/(p-1)})``; requires ``0 <= t < 1``.
    """
    params = params or {}
    if t < 0:
        raise ValueError("t must be nonnegative")
    if oracle_id == "example1":
        return math.exp(-t)
    if oracle_id == "example2":
        p = int(params.get("p", 2))
        if p < 2:
            raise ValueError("example2 needs an integer p >= 2")
        if t >= 1:
            raise ValueError(f"t = {t} is outside the lifespan [0, 1) of example2")
        return math.sqrt(1.0 - t ** (1.0 / (p - 1)))
    raise ValueError(f"unknown oracle {oracle_id!r}")
