"""Hamilton-Poisson realization and linearization toolkit.

Realizes n-dimensional systems with n-1 independent conserved quantities
as Hamilton-Poisson systems through Jacobian-determinant brackets, and
certifies numerically that the chart (1/nu, C_1/nu, ..., H/nu) together
with the reparametrized time ds = -div(X) dt linearizes the flow.
"""

from .calculus import (ScalarField, VectorField, divergence, hadamard_bound,
                       jacobian_determinant)
from .dual import Dual
from .errors import (DomainSetError, EvalDomainError, HamlinError,
                     IntegrationError, ParseError, SystemDocumentError,
                     UnboundParameterError)
from .expr import Expression, parse
from .flow import (IntegratorConfig, Trajectory, conservation_drift,
                   integrate, integrate_rescaled, write_trajectory_csv)
from .linearize import (DomainVerdict, LinearizationCertificate,
                        MuAdmissibilityReport, Tolerances,
                        certify_linearization, chart, check_mu_admissibility,
                        classify, identity_residuals)
from .model import (BUILTINS, IntegrableSystem, SampleBox, builtin_euler,
                    builtin_lotka_volterra, load_system, nu_is_constant,
                    rescaled_system, sample_points, system_document,
                    system_hash)
from .poisson import (BracketContext, bracket, hamiltonian_vector_field,
                      verify_bracket_axioms, verify_conservation,
                      verify_divergence_free, verify_realization)
from .report import VerificationReport, dumps17, write_json

__version__ = "0.1.0"

__all__ = [
    "BUILTINS",
    "BracketContext",
    "DomainSetError",
    "DomainVerdict",
    "Dual",
    "EvalDomainError",
    "Expression",
    "HamlinError",
    "IntegrableSystem",
    "IntegrationError",
    "IntegratorConfig",
    "LinearizationCertificate",
    "MuAdmissibilityReport",
    "ParseError",
    "SampleBox",
    "ScalarField",
    "SystemDocumentError",
    "Tolerances",
    "Trajectory",
    "UnboundParameterError",
    "VectorField",
    "VerificationReport",
    "bracket",
    "builtin_euler",
    "builtin_lotka_volterra",
    "certify_linearization",
    "chart",
    "check_mu_admissibility",
    "classify",
    "conservation_drift",
    "divergence",
    "dumps17",
    "hadamard_bound",
    "hamiltonian_vector_field",
    "identity_residuals",
    "integrate",
    "integrate_rescaled",
    "jacobian_determinant",
    "load_system",
    "nu_is_constant",
    "parse",
    "rescaled_system",
    "sample_points",
    "system_document",
    "system_hash",
    "verify_bracket_axioms",
    "verify_conservation",
    "verify_divergence_free",
    "verify_realization",
    "write_json",
    "write_trajectory_csv",
    "__version__",
]
