"""
Transport by sin(x) on the circle
=================================

u_t + sin(x) u_x = 0 compresses characteristics toward x = 0 and stretches
them near x = pi. Starting from 1/(cosh r0 + cos x), whose poles sit at
pi +- i r0, the width shrinks to 2 artanh(e^{-t} tanh(r0/2)). We solve with
the pseudospectral RK4 solver, check it against the characteristics ODE, and
watch the fitted radius track the exact one.
"""

import math

from strip_radius import run_case_full
from strip_radius.oracles import transport_sinx_radius

run = run_case_full("transport_sinx", {"times": [0.0, 0.5, 1.0, 1.5, 2.0], "M": 256})
print(f"eps0 = {run.eps0:.6f}, A = {run.A}")
print(f"{'t':>4} {'exact':>9} {'fit':>9} {'bound':>9} {'solver err':>11} {'pass':>5}")
for row in run.rows:
    print(
        f"{row.t:4.1f} {transport_sinx_radius(row.t, 1.0):9.5f} {row.measured:9.5f} "
        f"{row.bound:9.5f} {row.diagnostics['solver_error']:11.2e} {str(row.passed):>5}"
    )
print(f"all rows pass: {run.passed}")

# For large t the exact width behaves like 2 tanh(r0/2) e^{-t}; the bound
# decays like e^{-A int (1 + 1)} = e^{-2t} and therefore stays below it.
t = 4.0
print(f"t = {t}: exact {transport_sinx_radius(t, 1.0):.5f}, 2 tanh(1/2) e^-t = {2 * math.tanh(0.5) * math.exp(-t):.5f}")
