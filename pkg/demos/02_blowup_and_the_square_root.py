"""
Blow-up and the square-root law
================================

u_t = u^2 with u0 = 1/(1+x^2) blows up at t = 1 and the solution
1/(1 + x^2 - t) keeps its poles at x = +-i sqrt(1 - t). With A = 1/2 and the
bare integral of |u|_inf, the lower bound reproduces sqrt(1 - t) exactly.
"""

import math

import numpy as np

from strip_radius import PeriodicGrid, SpectralField, SystemSpec, solve
from strip_radius.bounds import radius_lower_bound
from strip_radius.evolution import integral_from_path

# First the ODE at a single point: the constant datum 1 blows up at t = 1.
spec = SystemSpec.build(1, nonlinearity=[(0, [2], "1")])
u0 = SpectralField(PeriodicGrid(2 * math.pi, 8), np.ones(8))
res = solve(spec, u0, 1.2, 1e-4)
print(f"blow-up flagged: {res.blowup} at t = {res.blowup_time:.6f}")
print(f"last stable time {res.last_stable_time:.6f}, |u| there {res.linf_path[-1]:.3g}")

# The sup norm of the exact solution is 1 / (1 - t); integrate it.
t = np.linspace(0, 0.99, 10 ** 4)
I = integral_from_path(t, 1 / (1 - t), 2, "example")
eps = radius_lower_bound(I, 1.0, 0.5)
print(f"max |eps(t) - sqrt(1 - t)| on [0, 0.99]: {np.abs(eps - np.sqrt(1 - t)).max():.2e}")
for s in (0.0, 0.5, 0.75, 0.96):
    k = np.searchsorted(t, s)
    print(f"t = {t[k]:.4f}: bound {eps[k]:.6f}, exact {math.sqrt(1 - t[k]):.6f}")
