"""Lower bounds on the radius of analyticity and the accompanying budgets.

Given the running integral ``I(t)`` of ``1 + ||u||_inf^(p-1)`` (or of the
bare ``||u||_inf^(p-1)``), the guaranteed strip width is

    eps(t) = eps_0 * exp(-A * I(t))

with a rate ``A`` fixed by the size of the initial datum.  The constants are
existential; the defaults here (``kappa = 1``, linear constant ``1``) are
declared knobs, and what is tested is order relations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .analytic import DEFAULT_N_MAX, AnalyticProfile, analytic_profile
from .spectral import SpectralField, sobolev_norm

__all__ = [
    "BoundsTrace",
    "NonConvergedProfileError",
    "STRICT_MARGIN",
    "datum_size",
    "estimate_A",
    "radius_lower_bound",
    "radius_lower_bound_remark",
    "c0_floor",
    "phi_budget",
    "gronwall_bound",
    "bounds_trace",
]

STRICT_MARGIN = 1e-6


class NonConvergedProfileError(ValueError):
    """The analytic profile of the datum did not converge at ``eps_0``."""


def datum_size(
    u0: SpectralField, eps0: float, s: float = 2.0, N_max: int = DEFAULT_N_MAX
) -> tuple[float, AnalyticProfile]:
    """``||u0||_s + sup_N E_N^{eps0}[u0]`` and the profile it came from.

    Raises :class:`NonConvergedProfileError` when the supremum is not reached
    within ``N_max`` terms.
    """
    profile = analytic_profile(u0, eps0, N_max, s)
    if not profile.converged:
        raise NonConvergedProfileError(
            f"analytic profile of the datum does not converge at eps0 = {eps0:g} "
            f"(argmax N = {profile.argmax_N} of {N_max}); use a smaller eps0 or a larger N_max"
        )
    return sobolev_norm(u0, s) + profile.sup_value, profile


def estimate_A(
    u0: SpectralField,
    eps0: float,
    s: float = 2.0,
    p: int = 2,
    N_max: int = DEFAULT_N_MAX,
    kappa: float = 1.0,
    linear_constant: float = 1.0,
) -> float:
    """Rate constant ``max(1, kappa * (||u0||_s + sup_N E_N^{eps0}[u0])^(p-1))``.

    For linear equations (``p = 1``) the constant depends on the equation only
    and ``linear_constant`` is returned unchanged.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if p == 1:
        return float(linear_constant)
    if p < 1:
        raise ValueError("degree p must be >= 1")
    size, _ = datum_size(u0, eps0, s, N_max)
    return max(1.0, kappa * size ** (p - 1))


def radius_lower_bound(I_samples, eps0: float, A: float) -> np.ndarray:
    """``eps0 * exp(-A * I)`` pointwise."""
    return eps0 * np.exp(-A * np.asarray(I_samples, dtype=float))


def radius_lower_bound_remark(I_samples, B_const: float, A: float) -> np.ndarray:
    """``exp(-A * I) / B`` with a datum-dependent prefactor ``B``."""
    if B_const <= 0:
        raise ValueError("B must be positive")
    return np.exp(-A * np.asarray(I_samples, dtype=float)) / B_const


def c0_floor(profile_or_sup, C: float) -> float:
    """Smallest admissible budget constant, ``C max(4 sup_N E_N, 2)``, made
    strict by a relative margin of ``1e-6``."""
    if C <= 0:
        raise ValueError("C must be positive")
    if isinstance(profile_or_sup, AnalyticProfile):
        if not profile_or_sup.converged:
            raise NonConvergedProfileError("profile did not converge")
        sup = profile_or_sup.sup_value
    else:
        sup = float(profile_or_sup)
    return C * max(4.0 * sup, 2.0) * (1.0 + STRICT_MARGIN)


def phi_budget(I_samples, C0: float) -> np.ndarray:
    """``C0 * exp(C0 * I)`` for the conservative integral ``I``."""
    return C0 * np.exp(C0 * np.asarray(I_samples, dtype=float))


def gronwall_bound(t, g, h, a) -> np.ndarray:
    """Right-hand side of the integral Gronwall inequality.

    If ``psi(t) <= g(t) + a(t) int_0^t h psi / a``, then

        psi(t) <= g(t) + a(t) e^{H(t)} int_0^t e^{-H} h g / a,   H = int_0^t h,

    with both integrals evaluated by the trapezoid rule on the samples.
    """
    t = np.asarray(t, dtype=float)
    g, h, a = (np.broadcast_to(np.asarray(v, dtype=float), t.shape) for v in (g, h, a))
    if np.any(a <= 0):
        raise ValueError("a must be positive")
    if np.any(g < 0) or np.any(h < 0):
        raise ValueError("g and h must be nonnegative")
    H = cumulative_trapezoid(h, t, initial=0.0)
    inner = cumulative_trapezoid(np.exp(-H) * h * g / a, t, initial=0.0)
    return g + a * np.exp(H) * inner


@dataclass(frozen=True)
class BoundsTrace:
    times: np.ndarray
    epsilon_lower: np.ndarray
    A: float
    B_const: float | None
    phi: np.ndarray
    C0: float
    variant: str


def bounds_trace(
    times,
    I_conservative,
    eps0: float,
    A: float,
    C0: float,
    I_variant=None,
    variant: str = "conservative",
    B_const: float | None = None,
) -> BoundsTrace:
    """Bundle ``eps(t)`` and ``Phi(t)``.

    ``eps`` uses ``I_variant`` when given (e.g. the bare integral), ``Phi``
    always the conservative integral.  With ``B_const`` the remark form
    ``exp(-A I) / B`` replaces ``eps0 exp(-A I)``.
    """
    I_eps = I_conservative if I_variant is None else I_variant
    if B_const is None:
        eps = radius_lower_bound(I_eps, eps0, A)
    else:
        eps = radius_lower_bound_remark(I_eps, B_const, A)
    return BoundsTrace(
        np.asarray(times, dtype=float), eps, A, B_const, phi_budget(I_conservative, C0), C0, variant
    )
