"""The linearizing chart, domain classification, and certification.

The chart u = (1/nu, C1/nu, ..., C_{n-2}/nu, H/nu) together with the time
reparametrization ds = -div(X) dt turns the system into u_i' = u_i on the
good set Omega00.  This module classifies points into the working sets,
checks mu-admissibility for constant-nu systems, and certifies
u_i(t) = u_i(0) * e^{s(t)} along integrated trajectories.

Working sets (all relative to explicit tolerance bands):
  Omega0   nu evaluable and |nu| above the Z(nu) threshold
  E        chart Jacobian det d(1/nu, C1, ..., H)/dx inside the zero band
  O        div(X) * (that Jacobian) inside the zero band
  Omega00  Omega0 minus O
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .calculus import ScalarField, divergence, hadamard_bound
from .errors import DomainSetError, EvalDomainError, SystemDocumentError
from .expr import Bin, Const, Expression
from .flow import IntegratorConfig, Trajectory, integrate
from .model import (IntegrableSystem, SampleBox, nu_is_constant,
                    rescaled_system, sample_points, system_hash)
from .report import VerificationReport
from .scales import NU_COEFF, ZERO_COEFF, nu_threshold, point_scale, zero_band

__all__ = [
    "Tolerances",
    "DomainVerdict",
    "LinearizationCertificate",
    "MuAdmissibilityReport",
    "chart",
    "classify",
    "check_mu_admissibility",
    "certify_linearization",
    "identity_residuals",
]


@dataclass(frozen=True)
class Tolerances:
    """Tolerance coefficients for the zero bands and the defect bound."""

    nu_coeff: float = NU_COEFF
    zero_coeff: float = ZERO_COEFF
    defect: float = 1e-6

    def scaled(self, factor: float) -> "Tolerances":
        """Scale the zero-test coefficients (defect bound unchanged)."""
        return Tolerances(nu_coeff=self.nu_coeff * factor,
                          zero_coeff=self.zero_coeff * factor,
                          defect=self.defect)

    def to_dict(self) -> dict:
        return {"nu_coeff": self.nu_coeff, "zero_coeff": self.zero_coeff,
                "defect": self.defect}


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class DomainVerdict:
    """Membership report for one point.

    ``evaluable`` is False when some system field could not be evaluated at
    the point; every membership is then False (an unevaluable point cannot
    be attested to lie in any working set).
    """

    in_omega0: bool
    in_E: bool
    in_O: bool
    in_omega00: bool
    evaluable: bool
    tolerances: Tolerances
    values: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "in_omega0": self.in_omega0,
            "in_E": self.in_E,
            "in_O": self.in_O,
            "in_omega00": self.in_omega00,
            "evaluable": self.evaluable,
            "tolerances": self.tolerances.to_dict(),
            "values": self.values,
        }


class _ChartTools:
    """Per-system machinery shared by chart/classify/certify loops."""

    def __init__(self, system: IntegrableSystem):
        self.system = system
        n = system.n
        names = frozenset(system.parameters)
        inv_nu = Expression(Bin("/", Const(1.0), system.nu.ast), n, names)
        self.inv_nu_field = ScalarField.from_expression(inv_nu,
                                                        system.parameters)
        # rows of the classification Jacobian: (1/nu, C1, ..., C_{n-2}, H)
        self.jacobian_fields = ((self.inv_nu_field,)
                                + system.casimir_fields
                                + (system.hamiltonian_field,))
        # the chart components as expressions (exact gradients for the
        # identity residuals): u1 = 1/nu, u_{k+1} = C_k/nu, u_n = H/nu
        quotients = [inv_nu]
        for q in (*system.casimirs, system.hamiltonian):
            quotients.append(Expression(Bin("/", q.ast, system.nu.ast),
                                        n, names))
        self.u_fields = tuple(ScalarField.from_expression(q, system.parameters)
                              for q in quotients)

    def chart_values(self, x, nu: float) -> np.ndarray:
        n = self.system.n
        u = np.empty(n, dtype=np.float64)
        u[0] = 1.0 / nu
        for k, f in enumerate(self.system.conserved_fields):
            u[k + 1] = f.value(x) / nu
        return u

    def jacobian_rows(self, x) -> np.ndarray:
        n = self.system.n
        rows = np.empty((n, n), dtype=np.float64)
        for k, f in enumerate(self.jacobian_fields):
            rows[k] = f.gradient(x)
        return rows


def chart(system: IntegrableSystem, x,
          tols: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """u = (1/nu, C1/nu, ..., C_{n-2}/nu, H/nu) at x.

    Rejects points inside the Z(nu) band with a domain-set error.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    nu = system.nu_field.value(x)
    if abs(nu) <= nu_threshold(x, tols.nu_coeff):
        raise DomainSetError(
            f"point is within the Z(nu) band: |nu| = {abs(nu):.3e} <= "
            f"{nu_threshold(x, tols.nu_coeff):.3e}")
    return _ChartTools(system).chart_values(x, nu)


def classify(system: IntegrableSystem, x,
             tols: Tolerances = DEFAULT_TOLERANCES,
             _tools: "_ChartTools | None" = None) -> DomainVerdict:
    """Membership of x in Omega0, E, O, and Omega00 under tolerance bands.

    E uses the Hadamard bound of the Jacobian rows as the determinant's
    natural scale; O uses the product of that scale with max(1, |x|^2) for
    the divergence factor.  in_E implies in_O by construction.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    tools = _tools if _tools is not None else _ChartTools(system)
    try:
        nu = system.nu_field.value(x)
        rows = tools.jacobian_rows(x)
        jac = float(np.linalg.det(rows))
        div = divergence(system.vector_field, x)
    except EvalDomainError as exc:
        return DomainVerdict(False, False, False, False, evaluable=False,
                             tolerances=tols, values={"error": str(exc)})
    nu_band = nu_threshold(x, tols.nu_coeff)
    jac_scale = hadamard_bound(rows)
    div_scale = point_scale(x)
    in_omega0 = abs(nu) > nu_band
    in_E = abs(jac) <= zero_band(jac_scale, tols.zero_coeff)
    in_O = in_E or (abs(div * jac)
                    <= zero_band(div_scale * jac_scale, tols.zero_coeff))
    return DomainVerdict(
        in_omega0=in_omega0,
        in_E=in_E,
        in_O=in_O,
        in_omega00=in_omega0 and not in_O,
        evaluable=True,
        tolerances=tols,
        values={
            "nu": nu,
            "nu_threshold": nu_band,
            "chart_jacobian": jac,
            "divergence": div,
            "product": div * jac,
            "jacobian_scale": jac_scale,
            "divergence_scale": div_scale,
        },
    )


# ---------------------------------------------------------------------------
# mu-admissibility (Remark on constant-nu systems)


@dataclass
class MuAdmissibilityReport:
    """Sampled check of the two rescaling conditions.

    Admissible iff div(mu X) and the rescaled chart Jacobian are each
    nonzero on a positive fraction of the sampled points.  The unrescaled
    divergence is reported as well: constant nu forces div(X) = 0, and the
    rescaling exists precisely to repair that degeneracy.
    """

    admissible: bool
    div_mu_x_nonzero_fraction: float
    chart_jacobian_nonzero_fraction: float
    max_unrescaled_divergence: float
    unrescaled_divergence_is_zero: bool
    n_points: int
    n_skipped: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "div_mu_x_nonzero_fraction": self.div_mu_x_nonzero_fraction,
            "chart_jacobian_nonzero_fraction": self.chart_jacobian_nonzero_fraction,
            "max_unrescaled_divergence": self.max_unrescaled_divergence,
            "unrescaled_divergence_is_zero": self.unrescaled_divergence_is_zero,
            "n_points": self.n_points,
            "n_skipped": self.n_skipped,
            "seed": self.seed,
        }


def check_mu_admissibility(system: IntegrableSystem,
                           box: SampleBox,
                           tols: Tolerances = DEFAULT_TOLERANCES) -> MuAdmissibilityReport:
    """Sample the two admissibility conditions for a constant-nu system."""
    if system.mu is None:
        raise SystemDocumentError("system declares no mu to test", path="mu")
    if not nu_is_constant(system):
        raise SystemDocumentError(
            "nu is not constant; mu-admissibility does not apply "
            "(integrate the system directly)", path="nu")
    pts, _ = sample_points(box)
    resc = rescaled_system(system)
    tools = _ChartTools(resc)

    max_div = 0.0
    div_nonzero = 0
    jac_nonzero = 0
    used = 0
    skipped = 0
    for x in pts:
        try:
            base_div = divergence(system.vector_field, x)
            resc_div = divergence(resc.vector_field, x)
            jac = float(np.linalg.det(tools.jacobian_rows(x)))
            jac_scale = hadamard_bound(tools.jacobian_rows(x))
        except EvalDomainError:
            skipped += 1
            continue
        sigma = point_scale(x)
        max_div = max(max_div, abs(base_div))
        if abs(resc_div) > zero_band(sigma, tols.zero_coeff):
            div_nonzero += 1
        if abs(jac) > zero_band(jac_scale, tols.zero_coeff):
            jac_nonzero += 1
        used += 1
    frac_div = div_nonzero / used if used else 0.0
    frac_jac = jac_nonzero / used if used else 0.0
    return MuAdmissibilityReport(
        admissible=frac_div > 0.0 and frac_jac > 0.0,
        div_mu_x_nonzero_fraction=frac_div,
        chart_jacobian_nonzero_fraction=frac_jac,
        max_unrescaled_divergence=max_div,
        unrescaled_divergence_is_zero=max_div <= zero_band(1.0, tols.zero_coeff),
        n_points=used,
        n_skipped=skipped,
        seed=box.seed,
    )


# ---------------------------------------------------------------------------
# End-to-end certification


@dataclass
class LinearizationCertificate:
    """Defect record for u_i(t) = u_i(0) * e^{s(t)} along one trajectory.

    Defects are computed only at samples classified in Omega00; other
    samples are excluded and counted.  Components with u_i(0) = 0 are
    checked absolutely, all others relative with a tiny denominator floor.
    """

    system_name: str
    x0: np.ndarray
    tspan: tuple
    u0: np.ndarray
    trajectory: Trajectory
    retained: np.ndarray        # indices into trajectory samples
    u: np.ndarray               # per retained sample
    defects: np.ndarray         # per retained sample, per component
    max_defect: float
    mean_defect: float
    excluded_samples: int
    passed: bool
    tolerances: Tolerances
    system_hash: str

    def to_json_dict(self) -> dict:
        return {
            "system": self.system_name,
            "x0": self.x0,
            "tspan": list(self.tspan),
            "max_defect": self.max_defect,
            "mean_defect": self.mean_defect,
            "excluded_samples": self.excluded_samples,
            "pass": self.passed,
            "tolerances": self.tolerances.to_dict(),
            "system_hash": self.system_hash,
            "integrator": self.trajectory.meta,
            "truncated": self.trajectory.truncated,
            "n_samples": int(len(self.trajectory)),
            "u0": self.u0,
        }


_DEFECT_FLOOR = 1e-300
_EXP_LIMIT = 700.0  # beyond this e^s overflows float64


def _sample_defects(u: np.ndarray, u0: np.ndarray, s: float) -> np.ndarray:
    es = math.exp(s)
    out = np.empty_like(u0)
    for i in range(u0.shape[0]):
        if u0[i] == 0.0:
            out[i] = abs(u[i])
        else:
            target = u0[i] * es
            out[i] = abs(u[i] - target) / (abs(target) + _DEFECT_FLOOR)
    return out


def certify_linearization(system: IntegrableSystem, x0,
                          cfg: IntegratorConfig,
                          tols: Tolerances = DEFAULT_TOLERANCES) -> LinearizationCertificate:
    """Integrate and check u_i(t) = u_i(0)*e^{s(t)} sample by sample.

    Constant-nu systems are integrated through their mu-rescaling (mu must
    be declared; run check_mu_admissibility beforehand to validate it).
    Raises a domain-set error if x0 is not in Omega00 of the effective
    system, or if every sample lands outside Omega00.
    """
    if nu_is_constant(system):
        if system.mu is None:
            raise SystemDocumentError(
                "constant nu requires a declared mu for certification",
                path="mu")
        eff = rescaled_system(system)
    else:
        eff = system
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    tools = _ChartTools(eff)
    verdict = classify(eff, x0, tols, _tools=tools)
    if not verdict.in_omega00:
        raise DomainSetError(
            f"x0 is not in Omega00 of {eff.name}: {verdict.to_dict()}")

    traj = integrate(eff, x0, cfg)
    retained = []
    us = []
    excluded = 0
    for idx in range(len(traj)):
        x = traj.x[idx]
        v = classify(eff, x, tols, _tools=tools)
        if not v.in_omega00 or abs(traj.s[idx]) > _EXP_LIMIT:
            excluded += 1
            continue
        us.append(tools.chart_values(x, v.values["nu"]))
        retained.append(idx)
    if not retained:
        raise DomainSetError("every trajectory sample fell outside Omega00")

    u = np.vstack(us)
    u0 = u[0] if retained[0] == 0 else tools.chart_values(
        x0, eff.nu_field.value(x0))
    defects = np.vstack([
        _sample_defects(u[k], u0, traj.s[retained[k]])
        for k in range(len(retained))
    ])
    max_defect = float(np.max(defects))
    mean_defect = float(np.mean(defects))
    return LinearizationCertificate(
        system_name=system.name,
        x0=x0,
        tspan=(cfg.t0, cfg.t1),
        u0=u0,
        trajectory=traj,
        retained=np.array(retained, dtype=np.int64),
        u=u,
        defects=defects,
        max_defect=max_defect,
        mean_defect=mean_defect,
        excluded_samples=excluded,
        passed=max_defect <= tols.defect,
        tolerances=tols,
        system_hash=system_hash(system),
    )


# ---------------------------------------------------------------------------
# Pointwise identities behind the theorem


def identity_residuals(system: IntegrableSystem, pts,
                       tolerance: float = 1e-7) -> VerificationReport:
    """Residuals of <grad(1/nu), X> = -(1/nu) div X and du_i/dt = -div(X) u_i.

    Each residual is normalized by 1 + the magnitude bound of its
    cancelling terms (|grad f| |X| + |div f|), which keeps trivially exact
    points at zero and scales out near-singular ones; the reported maximum
    is compared against the bare coefficient (1e-7 by default).  Points
    below the nu threshold or unevaluable are skipped and counted.
    """
    tools = _ChartTools(system)
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    worst = 0.0
    worst_r1 = 0.0
    worst_r2 = 0.0
    total = 0.0
    used = 0
    skipped = 0
    for x in pts:
        try:
            nu = system.nu_field.value(x)
            if abs(nu) <= nu_threshold(x):
                skipped += 1
                continue
            xdot = system.vector_field.value(x)
            xnorm = float(np.linalg.norm(xdot))
            div = divergence(system.vector_field, x)
            g_inv = tools.inv_nu_field.gradient(x)
            lhs = float(np.dot(g_inv, xdot))
            rhs = div / nu
            sigma1 = float(np.linalg.norm(g_inv)) * xnorm + abs(rhs)
            r1n = abs(lhs + rhs) / (1.0 + sigma1)
            r2n = 0.0
            for f in tools.u_fields:
                ui = f.value(x)
                grad = f.gradient(x)
                dui = float(np.dot(grad, xdot))
                sigma = (float(np.linalg.norm(grad)) * xnorm
                         + abs(div * ui))
                r2n = max(r2n, abs(dui + div * ui) / (1.0 + sigma))
        except EvalDomainError:
            skipped += 1
            continue
        worst_r1 = max(worst_r1, r1n)
        worst_r2 = max(worst_r2, r2n)
        point_worst = max(r1n, r2n)
        worst = max(worst, point_worst)
        total += point_worst
        used += 1
    return VerificationReport(
        name="chart-identities",
        n_points=used,
        n_skipped=skipped,
        max_residual=worst,
        mean_residual=total / used if used else float("nan"),
        tolerance=tolerance,
        passed=used > 0 and worst <= tolerance,
        details={"max_r1": worst_r1, "max_r2": worst_r2},
    )
