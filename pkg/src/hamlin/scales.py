"""Scaled zero tests shared by the bracket checks and the domain classifier.

A quantity q with natural scale sigma counts as zero iff
|q| <= coeff*(1+sigma) with coeff = 1e-9 by default.  The default sigma for
low-degree polynomial quantities of the state is max(1, |x|^2); determinant
quantities use the Hadamard bound of their row matrix instead.
"""

from __future__ import annotations

import numpy as np

NU_COEFF = 1e-9
ZERO_COEFF = 1e-9


def point_scale(x) -> float:
    """max(1, |x|^2): natural scale for degree <= 2 polynomials in x."""
    x = np.asarray(x, dtype=np.float64)
    return max(1.0, float(np.dot(x, x)))


def nu_threshold(x, coeff: float = NU_COEFF) -> float:
    """|nu| at or below this marks the point as effectively on Z(nu)."""
    x = np.asarray(x, dtype=np.float64)
    return coeff * (1.0 + float(np.dot(x, x)))


def zero_band(sigma: float, coeff: float = ZERO_COEFF) -> float:
    """Width of the zero band for a quantity with natural scale sigma."""
    return coeff * (1.0 + float(sigma))
