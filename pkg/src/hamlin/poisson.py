"""Jacobian-determinant Poisson brackets and the realization checks.

The bracket of two scalar fields is

    {f, g} = nu(x) * det d(C1, ..., C_{n-2}, f, g) / d(x1, ..., xn)

with the casimirs occupying the first n-2 determinant rows.  No bivector
matrix is materialized; everything is evaluated pointwise from gradients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calculus import ScalarField, hadamard_bound, product
from .errors import EvalDomainError
from .expr import Bin, Expression
from .model import IntegrableSystem
from .report import VerificationReport
from .scales import nu_threshold, zero_band
from .randexpr import random_polynomial

__all__ = [
    "BracketContext",
    "bracket",
    "hamiltonian_vector_field",
    "verify_realization",
    "verify_divergence_free",
    "verify_conservation",
    "verify_bracket_axioms",
]


@dataclass(frozen=True)
class BracketContext:
    """The data defining a bracket: n-2 casimirs and the scaling nu."""

    casimirs: tuple
    nu: ScalarField
    n: int

    def __post_init__(self):
        if len(self.casimirs) != self.n - 2:
            raise ValueError(
                f"need {self.n - 2} casimirs for dimension {self.n}, "
                f"got {len(self.casimirs)}")

    @classmethod
    def from_system(cls, system: IntegrableSystem) -> "BracketContext":
        return cls(casimirs=system.casimir_fields, nu=system.nu_field,
                   n=system.n)

    def _casimir_rows(self, x, rows: np.ndarray) -> None:
        for k, c in enumerate(self.casimirs):
            rows[k] = c.gradient(x)


def _bracket_rows(ctx: BracketContext, f: ScalarField, g: ScalarField, x) -> np.ndarray:
    rows = np.empty((ctx.n, ctx.n), dtype=np.float64)
    ctx._casimir_rows(x, rows)
    rows[ctx.n - 2] = f.gradient(x)
    rows[ctx.n - 1] = g.gradient(x)
    return rows


def bracket(ctx: BracketContext, f: ScalarField, g: ScalarField, x) -> float:
    """{f,g}(x) = nu(x) * det(grad C1, ..., grad f, grad g)."""
    rows = _bracket_rows(ctx, f, g, x)
    return float(ctx.nu.value(x) * np.linalg.det(rows))


def bracket_with_scale(ctx: BracketContext, f: ScalarField, g: ScalarField, x):
    """(bracket value, |nu|*Hadamard bound): value plus its natural scale."""
    rows = _bracket_rows(ctx, f, g, x)
    nu = ctx.nu.value(x)
    return float(nu * np.linalg.det(rows)), abs(nu) * hadamard_bound(rows)


def hamiltonian_vector_field(ctx: BracketContext, h: ScalarField, x) -> np.ndarray:
    """Component i is bracket(ctx, coordinate x_i, h, x).

    The coordinate gradients are the standard basis vectors, so the casimir
    and h gradients are evaluated once and reused across components.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = ctx.n
    rows = np.empty((n, n), dtype=np.float64)
    ctx._casimir_rows(x, rows)
    rows[n - 1] = h.gradient(x)
    nu = ctx.nu.value(x)
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        rows[n - 2] = 0.0
        rows[n - 2, i] = 1.0
        out[i] = nu * np.linalg.det(rows)
    return out


# ---------------------------------------------------------------------------
# Sampled verifications


def verify_realization(system: IntegrableSystem, pts,
                       tolerance: float = 1e-8) -> VerificationReport:
    """Check X_i = nu * det(grad C_1, ..., e_i, grad H) pointwise.

    Per-point, per-component relative residual |X_i - nu*det|/(1+|X_i|).
    Points with |nu| at or below the Z(nu) threshold, or where any field is
    unevaluable, are skipped and counted.
    """
    ctx = BracketContext.from_system(system)
    h = system.hamiltonian_field
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    worst = 0.0
    total = 0.0
    used = 0
    skipped = 0
    for x in pts:
        try:
            nu = system.nu_field.value(x)
            if abs(nu) <= nu_threshold(x):
                skipped += 1
                continue
            built = hamiltonian_vector_field(ctx, h, x)
            given = system.vector_field.value(x)
        except EvalDomainError:
            skipped += 1
            continue
        residual = float(np.max(np.abs(given - built) / (1.0 + np.abs(given))))
        worst = max(worst, residual)
        total += residual
        used += 1
    return VerificationReport(
        name="realization",
        n_points=used,
        n_skipped=skipped,
        max_residual=worst,
        mean_residual=total / used if used else float("nan"),
        tolerance=tolerance,
        passed=used > 0 and worst <= tolerance,
    )


def verify_divergence_free(system: IntegrableSystem, pts,
                           tolerance: float = 1e-6) -> VerificationReport:
    """Check div((1/nu) X) = 0 away from Z(nu).

    The rescaled field is formed componentwise as the expression X_i/nu, so
    its divergence is computed from exact partials.
    """
    names = frozenset(system.parameters)
    rescaled = [
        ScalarField.from_expression(
            Expression(Bin("/", eq.ast, system.nu.ast), system.n, names),
            system.parameters)
        for eq in system.equations
    ]
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    worst = 0.0
    total = 0.0
    used = 0
    skipped = 0
    for x in pts:
        try:
            nu = system.nu_field.value(x)
            if abs(nu) <= nu_threshold(x):
                skipped += 1
                continue
            div = sum(c.partial(x, i + 1) for i, c in enumerate(rescaled))
        except EvalDomainError:
            skipped += 1
            continue
        residual = abs(float(div))
        worst = max(worst, residual)
        total += residual
        used += 1
    return VerificationReport(
        name="divergence-free",
        n_points=used,
        n_skipped=skipped,
        max_residual=worst,
        mean_residual=total / used if used else float("nan"),
        tolerance=tolerance,
        passed=used > 0 and worst <= tolerance,
    )


def verify_conservation(system: IntegrableSystem, pts,
                        tolerance: float = 1e-8) -> VerificationReport:
    """Check <grad C_i, X> = 0 and <grad H, X> = 0 at the sample points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    fields = system.conserved_fields
    worst = 0.0
    total = 0.0
    used = 0
    skipped = 0
    for x in pts:
        try:
            xdot = system.vector_field.value(x)
            residual = max(abs(float(np.dot(f.gradient(x), xdot)))
                           for f in fields)
        except EvalDomainError:
            skipped += 1
            continue
        worst = max(worst, residual)
        total += residual
        used += 1
    return VerificationReport(
        name="conservation",
        n_points=used,
        n_skipped=skipped,
        max_residual=worst,
        mean_residual=total / used if used else float("nan"),
        tolerance=tolerance,
        passed=used > 0 and worst <= tolerance,
    )


# ---------------------------------------------------------------------------
# Bracket axioms at sampled points with random polynomial test functions


def _report(name, residuals, skipped, tolerance) -> VerificationReport:
    return VerificationReport(
        name=name,
        n_points=len(residuals),
        n_skipped=skipped,
        max_residual=max(residuals) if residuals else 0.0,
        mean_residual=float(np.mean(residuals)) if residuals else float("nan"),
        tolerance=tolerance,
        passed=bool(residuals) and max(residuals) <= tolerance,
    )


def verify_bracket_axioms(system: IntegrableSystem, pts, seed: int = 42,
                          tol_antisym: float = 1e-12,
                          tol_leibniz: float = 1e-8,
                          tol_casimir: float = 1e-10,
                          tol_jacobi: float = 1e-4,
                          tol_h_conservation: float = 1e-10) -> dict:
    """Antisymmetry, Leibniz, Casimir annihilation, Jacobi, H-conservation.

    Returns a dict of VerificationReports keyed by axiom name.  Residuals
    for the first two are relative; Casimir/Jacobi/H-conservation use the
    bracket's natural scale (|nu| times the Hadamard bound, or the sum of
    the cancelling terms for Jacobi).  Jacobi nests one finite-difference
    gradient over exact bracket values, hence its looser tolerance.
    """
    ctx = BracketContext.from_system(system)
    n = system.n
    rng = np.random.default_rng(seed)
    f, g, h = (ScalarField.from_expression(random_polynomial(n, rng))
               for _ in range(3))
    extra = [ScalarField.from_expression(random_polynomial(n, rng))
             for _ in range(20)]
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))

    anti, leib, casi, jaco, hcons = [], [], [], [], []
    skipped = 0
    product_field = product(f, g)

    for x in pts:
        try:
            b_fg = bracket(ctx, f, g, x)
            b_gf = bracket(ctx, g, f, x)
        except EvalDomainError:
            skipped += 1
            continue
        anti.append(abs(b_fg + b_gf) / (1.0 + max(abs(b_fg), abs(b_gf))))

        b_gh = bracket(ctx, g, h, x)
        b_fh = bracket(ctx, f, h, x)
        b_fg_h = bracket(ctx, product_field, h, x)
        fx = f.value(x)
        gx = g.value(x)
        wanted = fx * b_gh + gx * b_fh
        leib.append(abs(b_fg_h - wanted)
                    / (1.0 + abs(fx * b_gh) + abs(gx * b_fh)))

        for c in ctx.casimirs:
            for gk in extra:
                value, scale = bracket_with_scale(ctx, c, gk, x)
                casi.append(abs(value) / (1.0 + scale))

        hv = hamiltonian_vector_field(ctx, system.hamiltonian_field, x)
        grad_h = system.hamiltonian_field.gradient(x)
        nu_val = ctx.nu.value(x)
        rows = np.empty((n, n))
        ctx._casimir_rows(x, rows)
        rows[n - 2] = grad_h
        rows[n - 1] = grad_h
        hscale = abs(nu_val) * hadamard_bound(rows)
        hcons.append(abs(float(np.dot(grad_h, hv))) / (1.0 + hscale))

    # Jacobi at the sampled points: outer brackets differentiate the inner
    # bracket values by central differences (the second-derivative scheme)
    sqrt_eps = float(np.finfo(np.float64).eps) ** 0.5
    inner_gh = ScalarField.from_callable(lambda y: bracket(ctx, g, h, y), n,
                                         fd_coeff=sqrt_eps)
    inner_hf = ScalarField.from_callable(lambda y: bracket(ctx, h, f, y), n,
                                         fd_coeff=sqrt_eps)
    inner_fg = ScalarField.from_callable(lambda y: bracket(ctx, f, g, y), n,
                                         fd_coeff=sqrt_eps)
    for x in pts:
        try:
            t1 = bracket(ctx, f, inner_gh, x)
            t2 = bracket(ctx, g, inner_hf, x)
            t3 = bracket(ctx, h, inner_fg, x)
        except EvalDomainError:
            continue
        scale = 1.0 + abs(t1) + abs(t2) + abs(t3)
        jaco.append(abs(t1 + t2 + t3) / scale)

    return {
        "antisymmetry": _report("antisymmetry", anti, skipped, tol_antisym),
        "leibniz": _report("leibniz", leib, skipped, tol_leibniz),
        "casimir": _report("casimir", casi, skipped, tol_casimir),
        "jacobi": _report("jacobi", jaco, skipped, tol_jacobi),
        "h-conservation": _report("h-conservation", hcons, skipped,
                                  tol_h_conservation),
    }
