"""Bracket values, the induced vector field, and sampled verification."""

import numpy as np
import pytest

from hamlin.calculus import ScalarField
from hamlin.expr import parse
from hamlin.model import (SampleBox, load_system, sample_points,
                          system_document)
from hamlin.poisson import (BracketContext, bracket, bracket_with_scale,
                            hamiltonian_vector_field, verify_bracket_axioms,
                            verify_conservation, verify_divergence_free,
                            verify_realization)


@pytest.fixture(scope="module")
def pts():
    box = SampleBox(((0.25, 2.0), (0.25, 2.0), (0.25, 2.0)), 300, seed=42)
    return sample_points(box)[0]


@pytest.fixture(scope="module")
def pts_sym():
    return sample_points(SampleBox(((-2.0, 2.0),) * 3, 300, seed=42))[0]


def test_bracket_oracle_lv(lv):
    ctx = BracketContext.from_system(lv)
    x = np.array([1.0, 1.0, 2.0])
    x2 = ScalarField.coordinate(2, 3)
    # {x2, H} must reproduce the second equation: x2(-x1+x3) = 1
    assert bracket(ctx, x2, lv.hamiltonian_field, x) == pytest.approx(1.0,
                                                                      rel=1e-14)
    v, scale = bracket_with_scale(ctx, x2, lv.hamiltonian_field, x)
    assert v == pytest.approx(1.0, rel=1e-14)
    assert scale >= abs(v)


def test_hamiltonian_vector_field_matches_equations(lv, euler):
    for system, x in ((lv, np.array([1.0, 1.0, 2.0])),
                      (euler, np.array([1.0, 1.0, 1.0]))):
        ctx = BracketContext.from_system(system)
        built = hamiltonian_vector_field(ctx, system.hamiltonian_field, x)
        given = system.vector_field.value(x)
        assert np.allclose(built, given, rtol=1e-12, atol=1e-14)


def test_hvf_oracle_values(lv):
    ctx = BracketContext.from_system(lv)
    built = hamiltonian_vector_field(ctx, lv.hamiltonian_field,
                                     np.array([1.0, 1.0, 2.0]))
    assert np.allclose(built, [3.0, 1.0, -4.0], rtol=1e-13)


def test_casimir_annihilates_everything(lv, rng):
    ctx = BracketContext.from_system(lv)
    C = lv.casimir_fields[0]
    for _ in range(20):
        x = rng.uniform(0.3, 2.0, size=3)
        g = ScalarField.coordinate(int(rng.integers(1, 4)), 3)
        v, scale = bracket_with_scale(ctx, C, g, x)
        assert abs(v) <= 1e-10 * (1.0 + scale)


def test_verify_realization_passes(lv, euler, pts, pts_sym):
    rep = verify_realization(lv, pts)
    assert rep.passed and rep.max_residual <= 1e-8
    assert rep.n_points > 0
    rep = verify_realization(euler, pts_sym)
    assert rep.passed and rep.max_residual <= 1e-8


def test_verify_divergence_free_passes(lv, euler_rescaled, pts, pts_sym):
    assert verify_divergence_free(lv, pts).passed
    assert verify_divergence_free(euler_rescaled, pts_sym).passed


def test_verify_conservation_passes(lv, euler, pts, pts_sym):
    assert verify_conservation(lv, pts).passed
    assert verify_conservation(euler, pts_sym).passed


def test_axiom_suite_passes(lv, euler, pts_sym):
    sub = pts_sym[:60]
    for system in (lv, euler):
        reports = verify_bracket_axioms(system, sub, seed=42)
        assert set(reports) == {"antisymmetry", "leibniz", "casimir",
                                "jacobi", "h-conservation"}
        for name, rep in reports.items():
            assert rep.passed, f"{system.name}: {name}"


def test_corrupted_equation_fails_realization(lv, pts):
    doc = system_document(lv)
    doc["equations"] = list(doc["equations"])
    doc["equations"][0] = doc["equations"][0] + "+1/10"
    bad = load_system(doc)
    rep = verify_realization(bad, pts)
    assert not rep.passed
    assert rep.max_residual >= 1e-3


def test_corrupted_casimir_fails_conservation(lv, pts):
    doc = system_document(lv)
    doc["casimirs"] = [doc["casimirs"][0] + "+x1/10"]
    bad = load_system(doc)
    rep = verify_conservation(bad, pts)
    assert not rep.passed


def test_realization_skips_near_zero_nu(lv):
    # points with x1 + x2 + x3 = 0 make nu blow up; points with x1 or x3
    # near machine zero put nu inside the threshold band and must be skipped
    pts = np.array([[1e-30, 1.0, 1.0], [1.0, 1.0, 2.0]])
    rep = verify_realization(lv, pts)
    assert rep.n_skipped == 1
    assert rep.n_points == 1
    assert rep.passed
