"""Seeded random test expressions for property checks.

Generates low-degree polynomials (optionally simple rational functions)
over x1..xn.  Coefficients are quantized so the printed source re-parses
to the exact same floats.
"""

from __future__ import annotations

import numpy as np

from .expr import Expression, parse

__all__ = ["random_polynomial", "random_rational"]


def _term(rng: np.random.Generator, n: int, max_degree: int,
          min_degree: int = 0) -> str:
    coeff = 0.0
    while coeff == 0.0:
        # multiples of 1/64 are exact in binary and re-parse identically
        coeff = rng.integers(-128, 129) / 64.0
    parts = [format(coeff, ".17g")]
    degree = int(rng.integers(min_degree, max_degree + 1))
    for _ in range(degree):
        v = int(rng.integers(1, n + 1))
        parts.append(f"x{v}")
    return "*".join(parts)


def random_polynomial(n: int, rng: np.random.Generator,
                      max_terms: int = 4, max_degree: int = 2) -> Expression:
    """A random polynomial of total degree <= max_degree per term.

    The first term has degree >= 1, so the result is never constant (the
    axiom checks need test functions the bracket can see).
    """
    k = int(rng.integers(1, max_terms + 1))
    terms = [_term(rng, n, max_degree, min_degree=1)]
    terms += [_term(rng, n, max_degree) for _ in range(k - 1)]
    source = "+".join(terms)
    return parse(source, n)


def random_rational(n: int, rng: np.random.Generator,
                    max_terms: int = 3, max_degree: int = 2) -> Expression:
    """Ratio of a random polynomial and a denominator bounded away from 0.

    The denominator is 2 + p(x)^2 for a random polynomial p, so the result
    is evaluable everywhere.
    """
    num = random_polynomial(n, rng, max_terms, max_degree)
    den = random_polynomial(n, rng, 2, 1)
    from .expr import to_source
    source = f"({to_source(num.ast)})/(2+({to_source(den.ast)})^2)"
    return parse(source, n)
