"""Periodic grids, Fourier transforms, spectral derivatives and norms.

Spectral coefficients use the normalization

    f_hat[k] = sqrt(L) / M * sum_j f(x_j) exp(-2 pi i j k / M)

so that ``sum |f_hat|^2`` equals the trapezoidal ``L^2`` norm over the box,
and the ``s = 0`` Sobolev norm is exactly the box ``L^2`` norm.  The phase is
relative to the first node of the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "PeriodicGrid",
    "SpectralField",
    "to_spectrum",
    "from_spectrum",
    "spectral_derivative",
    "sobolev_norm",
    "sup_norm",
    "boundary_decay",
    "pad_spectrum",
    "truncate_spectrum",
    "trig_interpolate",
]


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform periodic grid on ``[origin, origin + L)`` (1-D).

    The default origin is ``-L/2``, giving nodes ``x_j = -L/2 + j L / M``.
    """

    L: float
    M: int
    origin: float | None = None

    def __post_init__(self):
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError(f"box length must be positive, got {self.L}")
        M = int(self.M)
        if M != self.M or M < 4 or M & (M - 1):
            raise ValueError(f"node count must be a power of two >= 4, got {self.M}")
        if self.origin is None:
            object.__setattr__(self, "origin", -self.L / 2)

    @property
    def d(self) -> int:
        return 1

    @property
    def dx(self) -> float:
        return self.L / self.M

    @cached_property
    def x(self) -> np.ndarray:
        return self.origin + np.arange(self.M) * (self.L / self.M)

    @cached_property
    def k(self) -> np.ndarray:
        """Physical wavenumbers ``2 pi k / L`` in FFT order, ``k in [-M/2, M/2)``."""
        return 2 * np.pi * np.fft.fftfreq(self.M, d=self.L / self.M)

    @property
    def k_nyquist(self) -> float:
        return np.pi * self.M / self.L

    @property
    def nyquist_index(self) -> int:
        return self.M // 2

    def refined(self, factor: int) -> "PeriodicGrid":
        return PeriodicGrid(self.L, self.M * factor, self.origin)

    def with_size(self, M: int) -> "PeriodicGrid":
        """Same box, ``M`` nodes (``M`` need not be a power of two)."""
        g = object.__new__(PeriodicGrid)
        object.__setattr__(g, "L", self.L)
        object.__setattr__(g, "M", int(M))
        object.__setattr__(g, "origin", self.origin)
        return g


def _as_components(values) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise ValueError(f"expected (n, M) samples, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class SpectralField:
    """An ``n``-component complex field sampled on a periodic grid.

    ``values`` has shape ``(n, M)``.  The spectrum is computed on first use
    and cached; fields are treated as immutable.
    """

    grid: PeriodicGrid
    values: np.ndarray
    _spectrum: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        values = _as_components(self.values)
        if values.shape[1] != self.grid.M:
            raise ValueError(
                f"size mismatch: {values.shape[1]} samples for a grid of {self.grid.M} nodes"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, func, *components) -> "SpectralField":
        """Sample one or more callables ``f(x)`` at the grid nodes."""
        funcs = (func,) + components
        return cls(grid, np.array([np.broadcast_to(f(grid.x), grid.x.shape) for f in funcs]))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @cached_property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is not None:
            return self._spectrum
        c = np.fft.fft(self.values, axis=-1) * (np.sqrt(self.grid.L) / self.grid.M)
        c.setflags(write=False)
        return c

    def component(self, i: int) -> "SpectralField":
        return SpectralField(self.grid, self.values[i:i + 1])

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.values + _values_of(other, self.grid))

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.values - _values_of(other, self.grid))

    def __mul__(self, c) -> "SpectralField":
        return SpectralField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.values)


def _values_of(other, grid: PeriodicGrid) -> np.ndarray:
    if isinstance(other, SpectralField):
        if other.grid != grid:
            raise ValueError("fields live on different grids")
        return other.values
    return np.asarray(other)


def to_spectrum(f: SpectralField) -> np.ndarray:
    """Spectral coefficients, shape ``(n, M)``, FFT order."""
    return f.spectrum


def from_spectrum(grid: PeriodicGrid, coeffs) -> SpectralField:
    """Inverse of :func:`to_spectrum`."""
    c = _as_components(coeffs)
    if c.shape[1] != grid.M:
        raise ValueError(f"size mismatch: {c.shape[1]} coefficients for a grid of {grid.M} nodes")
    values = np.fft.ifft(c, axis=-1) * (grid.M / np.sqrt(grid.L))
    c = c.copy()
    c.setflags(write=False)
    return SpectralField(grid, values, c)


def derivative_symbol(grid: PeriodicGrid, order: int) -> np.ndarray:
    """``(i k)^order`` with the Nyquist bin zeroed for odd orders."""
    if order < 0:
        raise ValueError("derivative order must be nonnegative")
    sym = (1j * grid.k) ** order
    if order % 2:
        sym[grid.nyquist_index] = 0.0
    return sym


def spectral_derivative(f: SpectralField, order: int = 1) -> SpectralField:
    """``d^order f / dx^order`` by multiplication with ``(i k)^order``."""
    if order == 0:
        return f
    return from_spectrum(f.grid, f.spectrum * derivative_symbol(f.grid, order))


def sobolev_weight(grid: PeriodicGrid, s: float) -> np.ndarray:
    return (1.0 + grid.k ** 2) ** s


def sobolev_norm(f: SpectralField, s: float = 2.0) -> float:
    """``( sum_k (1 + k^2)^s |f_hat_k|^2 )^(1/2)``, summed over components."""
    if s < 0:
        raise ValueError("Sobolev exponent must be nonnegative")
    w = sobolev_weight(f.grid, s)
    return float(np.sqrt(np.sum(w * np.abs(f.spectrum) ** 2)))


def pad_spectrum(coeffs: np.ndarray, M_new: int) -> np.ndarray:
    """Zero-pad FFT-ordered coefficients from ``M`` to ``M_new >= M`` bins.

    The Nyquist coefficient is split evenly between ``+M/2`` and ``-M/2`` so
    real fields stay real.  Coefficients keep their continuum normalization.
    """
    c = np.atleast_2d(coeffs)
    M = c.shape[-1]
    if M_new < M:
        raise ValueError("padding target smaller than source")
    if M_new == M:
        return c.copy()
    h = M // 2
    out = np.zeros(c.shape[:-1] + (M_new,), dtype=complex)
    out[..., :h] = c[..., :h]
    out[..., M_new - h + 1:] = c[..., h + 1:]
    out[..., h] = 0.5 * c[..., h]
    out[..., M_new - h] = 0.5 * c[..., h]
    return out


def truncate_spectrum(coeffs: np.ndarray, M_new: int) -> np.ndarray:
    """Inverse of :func:`pad_spectrum` (drops modes beyond the new Nyquist)."""
    c = np.atleast_2d(coeffs)
    M = c.shape[-1]
    h = M_new // 2
    out = np.zeros(c.shape[:-1] + (M_new,), dtype=complex)
    out[..., :h] = c[..., :h]
    out[..., h + 1:] = c[..., M - h + 1:]
    out[..., h] = c[..., h] + c[..., M - h]
    return out


def trig_interpolate(f: SpectralField, x) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``f`` at arbitrary points.

    Returns shape ``(n, len(x))``.  The Nyquist mode is taken as a cosine.
    """
    g = f.grid
    x = np.atleast_1d(np.asarray(x, dtype=float)) - g.origin
    c = f.spectrum.copy()
    h = g.nyquist_index
    k = g.k.copy()
    phase = np.exp(1j * np.outer(x, k))
    nyq = c[:, h].copy()
    c[:, h] = 0.0
    vals = c @ phase.T
    vals += np.outer(nyq, np.cos(g.k_nyquist * x))
    return vals / np.sqrt(g.L)


def sup_norm(f: SpectralField, oversample: int = 4, polish: bool = True) -> float:
    """Maximum modulus over components.

    The spectrum is zero-padded ``oversample``-fold before scanning; with
    ``polish`` the best node is refined by a bounded 1-D search on the
    trigonometric interpolant.
    """
    if oversample not in (1, 2, 4):
        raise ValueError("oversample must be 1, 2 or 4")
    g = f.grid
    fine = g.refined(oversample) if oversample > 1 else g
    if oversample > 1:
        vals = np.fft.ifft(pad_spectrum(f.spectrum, fine.M), axis=-1) * (fine.M / np.sqrt(g.L))
    else:
        vals = f.values
    mod = np.abs(vals)
    best = float(mod.max()) if mod.size else 0.0
    if not polish or best == 0.0:
        return best
    h = fine.dx
    for i in range(f.n):
        j = int(np.argmax(mod[i]))
        x0 = fine.x[j]
        comp = f.component(i)
        res = minimize_scalar(
            lambda x: -abs(trig_interpolate(comp, x)[0, 0]),
            bounds=(x0 - h, x0 + h),
            method="bounded",
            options={"xatol": 1e-13 * max(1.0, g.L)},
        )
        best = max(best, float(-res.fun))
    return best


def boundary_decay(f: SpectralField) -> float:
    """Largest modulus at the two box-edge nodes relative to the field maximum.

    Quantifies how far a box sample is from a decaying whole-line function.
    """
    peak = float(np.abs(f.values).max())
    if peak == 0.0:
        return 0.0
    edge = float(np.abs(f.values[:, [0, -1]]).max())
    return edge / peak
