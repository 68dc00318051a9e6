"""Semilinear systems ``L u = N[u]`` in one space dimension.

The operator is

    L = d/dt + i A0(D) + A(t, x) d/dx + B(t, x)

with ``A0`` a Hermitian Fourier multiplier (``D = -i d/dx``, symbol given as
expressions in ``xi``), ``A`` and ``B`` ``n x n`` matrices of expressions in
``(t, x)``, and ``N[u]_k = sum g_{k,gamma}(t, x) u^gamma`` a polynomial
nonlinearity with ``2 <= |gamma| <= p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .expressions import (
    BinOp,
    Call,
    Const,
    Derivative,
    Expr,
    Neg,
    Num,
    Pow,
    derivatives,
    evaluate,
    free_variables,
    is_zero,
    parse_expr,
    to_source,
)
from .spectral import (
    PeriodicGrid,
    SpectralField,
    from_spectrum,
    pad_spectrum,
    spectral_derivative,
    truncate_spectrum,
)

__all__ = [
    "Monomial",
    "SystemSpec",
    "SampleLattice",
    "CheckResult",
    "ValidationReport",
    "HyperbolicityReport",
    "validate_symmetric",
    "strict_hyperbolicity_check",
    "schrodinger_system",
    "apply_L_spatial",
    "apply_multiplier",
    "apply_coefficient_part",
    "apply_nonlinearity",
    "commutator_action",
    "HERMITIAN_TOL",
]

HERMITIAN_TOL = 1e-10
SEPARATION_TOL = 1e-8

Matrix = tuple[tuple[Expr, ...], ...]


def _matrix(entries, n: int, variables: tuple[str, ...], what: str) -> Matrix | None:
    if entries is None:
        return None
    rows = []
    if isinstance(entries, (str, Expr)) and n == 1:
        entries = [[entries]]
    if len(entries) != n or any(len(row) != n for row in entries):
        raise ValueError(f"{what} must be an {n}x{n} matrix")
    for row in entries:
        rows.append(tuple(e if isinstance(e, Expr) else parse_expr(str(e), variables) for e in row))
    return tuple(rows)


def _matrix_is_zero(mat: Matrix | None) -> bool:
    return mat is None or all(is_zero(e) for row in mat for e in row)


@dataclass(frozen=True)
class Monomial:
    """``g(t, x) * prod_j u_j^gamma_j`` contributing to component ``k``."""

    k: int
    gamma: tuple[int, ...]
    g: Expr

    @property
    def degree(self) -> int:
        return sum(self.gamma)


@dataclass(frozen=True)
class SystemSpec:
    n: int
    A0: Matrix | None = None
    A: tuple[Matrix, ...] = ()
    B: Matrix | None = None
    nonlinearity: tuple[Monomial, ...] = ()
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("component count must be >= 1")
        if len(self.A) > 1:
            raise ValueError("only one space dimension is supported")
        for m in self.nonlinearity:
            if not 0 <= m.k < self.n:
                raise ValueError(f"monomial target component {m.k} out of range")
            if len(m.gamma) != self.n or any(g < 0 for g in m.gamma):
                raise ValueError(f"multi-index {m.gamma} does not match n = {self.n}")
            if not 2 <= m.degree:
                raise ValueError(f"monomial degree {m.degree} < 2; linear terms belong in B")

    @classmethod
    def build(cls, n: int, A0=None, A=None, B=None, nonlinearity=(), meta=None) -> "SystemSpec":
        """Construct from expression strings (or parsed expressions).

        ``nonlinearity`` items are ``(k, gamma, g)`` triples or dicts with
        those keys; ``A`` is a single ``n x n`` matrix (one space dimension).
        """
        monos = []
        for item in nonlinearity:
            if isinstance(item, dict):
                k, gamma, g = item["k"], item["gamma"], item.get("g", "1")
            else:
                k, gamma, g = item
            gamma = tuple(int(x) for x in (gamma if isinstance(gamma, (list, tuple)) else [gamma]))
            monos.append(Monomial(int(k), gamma, g if isinstance(g, Expr) else parse_expr(str(g))))
        A_mats = () if A is None else (_matrix(A, n, ("x", "t"), "A"),)
        return cls(
            n=n,
            A0=_matrix(A0, n, ("xi",), "A0"),
            A=A_mats,
            B=_matrix(B, n, ("x", "t"), "B"),
            nonlinearity=tuple(monos),
            meta=dict(meta or {}),
        )

    @property
    def p(self) -> int:
        """Polynomial degree of the nonlinearity (1 for linear systems)."""
        return max((m.degree for m in self.nonlinearity), default=1)

    @property
    def is_linear(self) -> bool:
        return not self.nonlinearity

    @property
    def has_multiplier(self) -> bool:
        return not _matrix_is_zero(self.A0)

    @property
    def has_transport(self) -> bool:
        return any(not _matrix_is_zero(a) for a in self.A)

    @property
    def time_dependent(self) -> bool:
        exprs = [e for mat in (*self.A, self.B) if mat for row in mat for e in row]
        exprs += [m.g for m in self.nonlinearity]
        return any("t" in free_variables(e) for e in exprs)

    # -- coefficient sampling ------------------------------------------------

    def multiplier(self, k: np.ndarray) -> np.ndarray:
        """``A0(k)`` as an array of shape ``(n, n, len(k))``."""
        return _eval_matrix(self.A0, self.n, np.shape(k), xi=np.asarray(k, dtype=float))

    def transport(self, x: np.ndarray, t: float) -> np.ndarray:
        if not self.A:
            return np.zeros((self.n, self.n) + np.shape(x), dtype=complex)
        return _eval_matrix(self.A[0], self.n, np.shape(x), x=x, t=np.float64(t))

    def zeroth_order(self, x: np.ndarray, t: float) -> np.ndarray:
        return _eval_matrix(self.B, self.n, np.shape(x), x=x, t=np.float64(t))

    def transport_derivatives(self, x, t, order: int) -> np.ndarray:
        """``d^j A / dx^j`` for ``j = 0..order``, shape ``(order+1, n, n, M)``."""
        if not self.A:
            return np.zeros((order + 1, self.n, self.n) + np.shape(x), dtype=complex)
        return _matrix_derivatives(self.A[0], self.n, x, t, order)

    def zeroth_order_derivatives(self, x, t, order: int) -> np.ndarray:
        return _matrix_derivatives(self.B, self.n, x, t, order)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        if "schrodinger" in self.meta:
            out = {"schrodinger": dict(self.meta["schrodinger"])}
            if self.nonlinearity:
                out["nonlinearity"] = _monomials_to_list(self.nonlinearity)
            return out

        def mat(m):
            return None if m is None else [[to_source(e) for e in row] for row in m]

        return {
            "n": self.n,
            "A0": mat(self.A0),
            "A": mat(self.A[0]) if self.A else None,
            "B": mat(self.B),
            "nonlinearity": _monomials_to_list(self.nonlinearity),
        }


def _monomials_to_list(monos) -> list:
    return [{"k": m.k, "gamma": list(m.gamma), "g": to_source(m.g)} for m in monos]


def _eval_matrix(mat: Matrix | None, n: int, shape: tuple, **env) -> np.ndarray:
    out = np.zeros((n, n) + shape, dtype=complex)
    if mat is None:
        return out
    for i, j in product(range(n), range(n)):
        if not is_zero(mat[i][j]):
            out[i, j] = evaluate(mat[i][j], **env)
    return out


def _matrix_derivatives(mat: Matrix | None, n: int, x, t, order: int) -> np.ndarray:
    out = np.zeros((order + 1, n, n) + np.shape(x), dtype=complex)
    if mat is None:
        return out
    for i, j in product(range(n), range(n)):
        if not is_zero(mat[i][j]):
            out[:, i, j] = derivatives(mat[i][j], "x", order, x=x, t=np.float64(t))
    return out


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleLattice:
    """Sample points for the validators: all combinations of ``t`` and ``x``
    for ``A``/``B``; ``xi`` for the multiplier."""

    t: tuple[float, ...] = (0.0,)
    x: tuple[float, ...] = tuple(np.linspace(-10, 10, 41))
    xi: tuple[float, ...] = tuple(np.linspace(-20, 20, 81))

    @classmethod
    def for_grid(cls, grid: PeriodicGrid, T: float = 0.0, n_t: int = 5, n_xi: int = 65):
        ts = tuple(np.linspace(0.0, T, n_t)) if T > 0 else (0.0,)
        xis = tuple(np.linspace(-grid.k_nyquist, grid.k_nyquist, n_xi))
        return cls(ts, tuple(grid.x), xis)


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    worst: float


@dataclass(frozen=True)
class HyperbolicityReport:
    passed: bool
    min_gap: float
    max_imag: float


@dataclass(frozen=True)
class ValidationReport:
    hermitian_A0: CheckResult
    hermitian_Aj: CheckResult
    bounded_B: float
    strict_hyperbolic: str  # pass | fail | not-checked
    messages: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.hermitian_A0.passed and self.hermitian_Aj.passed and math.isfinite(self.bounded_B)

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "hermitian_A0": {"pass": self.hermitian_A0.passed, "worst_deviation": self.hermitian_A0.worst},
            "hermitian_Aj": {"pass": self.hermitian_Aj.passed, "worst_deviation": self.hermitian_Aj.worst},
            "bounded_B": self.bounded_B,
            "strict_hyperbolic": self.strict_hyperbolic,
            "messages": list(self.messages),
        }


def _hermitian_defect(mats: np.ndarray) -> float:
    """Worst Frobenius norm of ``M - M^*`` over a stack ``(n, n, ...)``."""
    if mats.size == 0:
        return 0.0
    dev = mats - np.conj(np.swapaxes(mats, 0, 1))
    return float(np.sqrt(np.sum(np.abs(dev) ** 2, axis=(0, 1))).max())


def _lattice_arrays(samples: SampleLattice) -> tuple[np.ndarray, np.ndarray]:
    if not samples.t or not samples.x:
        raise ValueError("sample lattice must be nonempty")
    return np.asarray(samples.t, dtype=float), np.asarray(samples.x, dtype=float)


def validate_symmetric(spec: SystemSpec, samples: SampleLattice | None = None) -> ValidationReport:
    """Check Hermitian symbols and coefficients at every lattice sample."""
    samples = samples or SampleLattice()
    ts, xs = _lattice_arrays(samples)
    messages = []

    a0_worst = 0.0
    if spec.A0 is not None:
        if not samples.xi:
            raise ValueError("sample lattice has no xi points")
        a0_worst = _hermitian_defect(spec.multiplier(np.asarray(samples.xi, dtype=float)))
    a0 = CheckResult(a0_worst < HERMITIAN_TOL, a0_worst)
    if not a0.passed:
        messages.append(f"A0(xi) is not Hermitian (worst Frobenius deviation {a0_worst:.3e})")

    aj_worst = 0.0
    b_sup = 0.0
    for t in ts:
        aj_worst = max(aj_worst, _hermitian_defect(spec.transport(xs, t)))
        if spec.B is not None:
            Bs = np.moveaxis(spec.zeroth_order(xs, t), -1, 0)
            b_sup = max(b_sup, float(np.linalg.norm(Bs, ord=2, axis=(1, 2)).max()))
    aj = CheckResult(aj_worst < HERMITIAN_TOL, aj_worst)
    if not aj.passed:
        messages.append(f"A_1(t, x) is not Hermitian (worst Frobenius deviation {aj_worst:.3e})")
    if not math.isfinite(b_sup):
        messages.append("B(t, x) is not bounded on the samples")

    if spec.has_multiplier:
        strict = "not-checked"
    else:
        strict = "pass" if strict_hyperbolicity_check(spec, samples).passed else "fail"
    return ValidationReport(a0, aj, b_sup, strict, tuple(messages))


def strict_hyperbolicity_check(spec: SystemSpec, samples: SampleLattice | None = None) -> HyperbolicityReport:
    """Distinct real eigenvalues of ``A_1(t, x) xi`` at ``|xi| = 1``."""
    if spec.has_multiplier:
        raise ValueError("strict hyperbolicity is only checked for A0 = 0")
    samples = samples or SampleLattice()
    ts, xs = _lattice_arrays(samples)
    if spec.n == 1:
        return HyperbolicityReport(True, math.inf, 0.0)
    min_gap = math.inf
    max_imag = 0.0
    for t in ts:
        mats = np.moveaxis(spec.transport(xs, t), -1, 0)
        for xi in (1.0, -1.0):
            try:
                ev = np.linalg.eigvals(mats * xi)
            except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
                raise RuntimeError(f"eigenvalue solver failed: {exc}") from exc
            max_imag = max(max_imag, float(np.abs(ev.imag).max()))
            srt = np.sort(ev.real, axis=-1)
            min_gap = min(min_gap, float(np.diff(srt, axis=-1).min()))
    passed = max_imag < HERMITIAN_TOL * max(1.0, min_gap) and min_gap > SEPARATION_TOL
    return HyperbolicityReport(passed, min_gap, max_imag)


# ---------------------------------------------------------------------------
# Magnetic Schrödinger
# ---------------------------------------------------------------------------


def _as_expr(e) -> Expr:
    return e if isinstance(e, Expr) else parse_expr(str(e))


def schrodinger_system(a: Sequence, V, nonlinearity=()) -> SystemSpec:
    """Scalar system for ``du/dt - i Delta_a u - i V u = N[u]`` in 1-D.

    Expanding the magnetic Laplacian ``(d/dx + i a)^2`` gives ``A0(xi) = xi^2``,
    ``A_1 = 2 a`` and ``B = a' + i a^2 - i V``.
    """
    if isinstance(a, (str, Expr)):
        a = [a]
    if len(a) != 1:
        raise ValueError("only one space dimension is supported")
    a_src = [e if isinstance(e, str) else to_source(e) for e in a]
    V_src = V if isinstance(V, str) else to_source(V)
    ae = _as_expr(a[0])
    Ve = _as_expr(V)
    A1 = Num(0.0) if is_zero(ae) else BinOp("*", Num(2.0), ae)
    terms = []
    if not is_zero(ae):
        if "x" in free_variables(ae):
            terms.append(Derivative(ae, "x", 1))
        terms.append(BinOp("*", Const("i"), Pow(ae, 2)))
    if not is_zero(Ve):
        terms.append(Neg(BinOp("*", Const("i"), Ve)))
    B: Expr = Num(0.0)
    for term in terms:
        B = term if is_zero(B) else BinOp("+", B, term)
    base = SystemSpec.build(1, A0=[[parse_expr("xi^2", ("xi",))]], A=[[A1]], B=[[B]], nonlinearity=nonlinearity)
    meta = {"schrodinger": {"a": a_src, "V": V_src}}
    return SystemSpec(base.n, base.A0, base.A, base.B, base.nonlinearity, meta)


# ---------------------------------------------------------------------------
# Operator application
# ---------------------------------------------------------------------------


def _check_field(spec: SystemSpec, f: SpectralField):
    if f.n != spec.n:
        raise ValueError(f"field has {f.n} components, system has {spec.n}")


def _matvec(mat: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("ijm,jm->im", mat, v)


def apply_multiplier(spec: SystemSpec, f: SpectralField) -> SpectralField:
    """``i A0(D) f``."""
    _check_field(spec, f)
    if not spec.has_multiplier:
        return SpectralField(f.grid, np.zeros_like(f.values))
    sym = spec.multiplier(f.grid.k)
    return from_spectrum(f.grid, 1j * _matvec(sym, f.spectrum))


def apply_coefficient_part(spec: SystemSpec, f: SpectralField, t: float, A=None, B=None) -> SpectralField:
    """``A(t, x) df/dx + B(t, x) f`` (products in physical space).

    Pre-sampled ``A`` / ``B`` arrays of shape ``(n, n, M)`` may be passed to
    skip re-evaluating the coefficient expressions.
    """
    _check_field(spec, f)
    out = np.zeros_like(f.values)
    if spec.has_transport:
        A = spec.transport(f.grid.x, t) if A is None else A
        out += _matvec(A, spectral_derivative(f, 1).values)
    if spec.B is not None:
        B = spec.zeroth_order(f.grid.x, t) if B is None else B
        out += _matvec(B, f.values)
    return SpectralField(f.grid, out)


def apply_L_spatial(spec: SystemSpec, f: SpectralField, t: float = 0.0) -> SpectralField:
    """``i A0(D) f + A(t, .) df/dx + B(t, .) f`` -- ``L`` without ``d/dt``."""
    return SpectralField(f.grid, apply_multiplier(spec, f).values + apply_coefficient_part(spec, f, t).values)


def dealias_size(M: int, p: int) -> int:
    """Padded size for exact dealiasing of degree-``p`` products."""
    size = -(-M * (p + 1) // 2)
    return size + (size % 2)


def apply_nonlinearity(spec: SystemSpec, f: SpectralField, t: float = 0.0, dealias: bool = True) -> SpectralField:
    """``N[f]_k = sum g_{k,gamma}(t, x) f^gamma`` with zero-padded products."""
    _check_field(spec, f)
    grid = f.grid
    if spec.is_linear:
        return SpectralField(grid, np.zeros_like(f.values))
    if dealias:
        Mp = dealias_size(grid.M, spec.p)
        fine = grid.with_size(Mp)
        u = np.fft.ifft(pad_spectrum(f.spectrum, Mp), axis=-1) * (Mp / np.sqrt(grid.L))
    else:
        fine = grid
        u = f.values
    out = np.zeros((spec.n, fine.M), dtype=complex)
    for m in spec.nonlinearity:
        term = np.ones(fine.M, dtype=complex)
        for j, e in enumerate(m.gamma):
            if e:
                term = term * u[j] ** e
        if not (isinstance(m.g, Num) and m.g.value == 1.0):
            term = term * evaluate(m.g, x=fine.x, t=np.float64(t))
        out[m.k] += term
    if not dealias:
        return SpectralField(grid, out)
    c = np.fft.fft(out, axis=-1) * (np.sqrt(grid.L) / fine.M)
    return from_spectrum(grid, truncate_spectrum(c, grid.M))


def commutator_action(spec: SystemSpec, f: SpectralField, alpha: int, t: float = 0.0) -> SpectralField:
    """``[L, d^alpha] f`` by the Leibniz expansion.

        [L, d^a] f = - sum_{g=1..a} C(a, g) ((d^g A) d^(a-g+1) f + (d^g B) d^(a-g) f)

    The multiplier part commutes with ``d/dx`` and drops out.  Coefficient
    derivatives are exact (Taylor-mode evaluation of the expressions).
    """
    _check_field(spec, f)
    if not 0 <= alpha <= 6:
        raise ValueError("alpha must lie in 0..6")
    grid = f.grid
    out = np.zeros_like(f.values)
    if alpha == 0:
        return SpectralField(grid, out)
    dA = spec.transport_derivatives(grid.x, t, alpha)
    dB = spec.zeroth_order_derivatives(grid.x, t, alpha)
    df = [f.values] + [spectral_derivative(f, m).values for m in range(1, alpha + 2)]
    for g in range(1, alpha + 1):
        c = math.comb(alpha, g)
        if spec.has_transport:
            out -= c * _matvec(dA[g], df[alpha - g + 1])
        if spec.B is not None:
            out -= c * _matvec(dB[g], df[alpha - g])
    return SpectralField(grid, out)
