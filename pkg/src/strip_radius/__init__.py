"""Measure and bound the radius of spatial analyticity of solutions to
semilinear symmetric hyperbolic and Schrödinger-type systems.

The package samples periodic fields, evolves them with a pseudospectral
integrating-factor Runge-Kutta scheme, measures the width of the strip of
holomorphy from the Fourier tail and compares it with the lower bound
``eps0 * exp(-A * int_0^t (1 + ||u||_inf^(p-1)))``.
"""

__version__ = "0.1.0"

from .analytic import (  # noqa: E402
    AnalyticProfile,
    FitOptions,
    RadiusEstimate,
    analytic_profile,
    energy_term,
    pole_radius,
    radius_from_spectrum,
)
from .bounds import (  # noqa: E402
    BoundsTrace,
    c0_floor,
    estimate_A,
    gronwall_bound,
    phi_budget,
    radius_lower_bound,
    radius_lower_bound_remark,
)
from .evolution import (  # noqa: E402
    SolveOptions,
    SolveResult,
    StabilityError,
    accumulate_integral,
    energy_monitor,
    solve,
)
from .expressions import evaluate, parse_expr, to_source  # noqa: E402
from .oracles import ComparisonRow, CaseRun, example1, example2, run_case, run_case_full, transport_sinx  # noqa: E402
from .spectral import (  # noqa: E402
    PeriodicGrid,
    SpectralField,
    from_spectrum,
    sobolev_norm,
    spectral_derivative,
    sup_norm,
    to_spectrum,
)
from .system import (  # noqa: E402
    SystemSpec,
    commutator_action,
    schrodinger_system,
    validate_symmetric,
)
