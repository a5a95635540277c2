"""Tests for ou_sector.forms."""

import numpy as np
import pytest

from ou_sector.calculus import (
    combine_functions,
    constant,
    cosine,
    exp_i,
    linear,
    random_complex_function,
    random_real_function,
    scaled_tanh,
    sine,
)
from ou_sector.errors import DomainError
from ou_sector.forms import (
    check_coercivity,
    check_dirichlet_operator,
    check_generator_duality,
    check_sector_condition,
    check_symmetric_part,
    dirichlet_form,
)
from ou_sector.measure import WeightedMeasure, logcosh_weight, quadratic_weight, zero_weight
from ou_sector.model import builtin_model, h_geometry


@pytest.fixture
def model():
    return builtin_model("rotation", alpha=0.5)


@pytest.fixture
def geom(model):
    return h_geometry(model)


@pytest.fixture(params=["none", "quadratic", "logcosh"])
def measure(request, model):
    weights = {
        "none": zero_weight(2),
        "quadratic": quadratic_weight(np.diag([0.5, 1.0])),
        "logcosh": logcosh_weight([1.0, -0.5]),
    }
    return WeightedMeasure(model, weights[request.param])


class TestDirichletForm:
    def test_linear_functions_closed_form(self, geom, model):
        w = WeightedMeasure(model, zero_weight(2))
        b1 = np.array([1.0, 0.3])
        b2 = np.array([-0.4, 0.9])
        est = dirichlet_form(geom, w, linear(b1), linear(b2), n=1000)
        expected = -b1 @ model.A @ model.Q_inf @ b2
        assert est.mean == pytest.approx(expected, abs=1e-12)
        assert est.std_error == pytest.approx(0.0, abs=1e-12)

    def test_diagonal_is_half_gradient_norm(self, geom, model):
        w = WeightedMeasure(model, zero_weight(2))
        b = np.array([0.5, -1.5])
        est = dirichlet_form(geom, w, linear(b), linear(b), n=1000)
        assert est.mean == pytest.approx(0.5 * b @ model.Q @ b, abs=1e-12)

    def test_constants_have_zero_energy(self, geom, measure):
        est = dirichlet_form(geom, measure, constant(2, 4.0), cosine([1.0, 1.0]), n=1000)
        assert est.mean == 0.0

    def test_form_and_dual_form_are_transposes(self, geom, measure):
        u, v = cosine([0.7, 0.2]), sine([-0.3, 1.1])
        e = dirichlet_form(geom, measure, u, v, n=5000, seed=3)
        e_dual = dirichlet_form(geom, measure, v, u, adjoint=True, n=5000, seed=3)
        assert e.mean == pytest.approx(e_dual.mean, rel=1e-10, abs=1e-14)


class TestFormIdentities:
    def test_coercivity(self, geom, measure, model):
        rng = np.random.default_rng(0)
        for _ in range(3):
            for u in (random_real_function(model, rng), random_complex_function(model, rng)):
                for adjoint in (False, True):
                    report = check_coercivity(geom, measure, u, n=5000, seed=1, adjoint=adjoint)
                    assert report.passed, (u.name, report.residual)

    def test_symmetric_part(self, geom, measure, model):
        rng = np.random.default_rng(1)
        for _ in range(3):
            u, v = random_complex_function(model, rng), random_real_function(model, rng)
            report = check_symmetric_part(geom, measure, u, v, n=5000, seed=2)
            assert report.passed, report.details

    def test_generator_duality(self, geom, measure, model):
        rng = np.random.default_rng(2)
        for i in range(3):
            u, v = random_real_function(model, rng), random_complex_function(model, rng)
            report = check_generator_duality(geom, measure, u, v, n=50_000, seed=i)
            assert report.passed, (u.name, v.name, report.residual, report.tolerance)

    def test_adjoint_duality(self, geom, measure, model):
        rng = np.random.default_rng(3)
        for i in range(3):
            u, v = random_real_function(model, rng), random_real_function(model, rng)
            report = check_generator_duality(geom, measure, u, v, n=50_000, seed=i, adjoint=True)
            assert report.passed, (u.name, v.name, report.residual, report.tolerance)
            assert report.name == "adjoint_duality"

    def test_sector_condition(self, geom, measure, model):
        rng = np.random.default_rng(4)
        for i in range(3):
            u, v = random_complex_function(model, rng), random_complex_function(model, rng)
            report = check_sector_condition(geom, measure, u, v, n=20_000, seed=i)
            assert report.passed, report.details

    def test_sector_condition_with_constant(self, geom, measure):
        report = check_sector_condition(geom, measure, cosine([1.0, 0.0]), constant(2, 1.0), n=2000)
        assert report.passed
        assert report.details["form_modulus"] == 0.0


class TestDirichletOperator:
    def test_level_never_crossed(self, geom, measure):
        u = combine_functions([(1.0, sine([1.0, 0.5]))], c0=-2.0)
        report = check_dirichlet_operator(geom, measure, u, n=2000)
        assert report.passed
        assert report.details["form_side"] == 0.0
        assert report.details["fraction_above_one"] == 0.0

    def test_level_crossed(self, geom, measure):
        u = scaled_tanh([1.0, 0.5], scale=2.0)
        report = check_dirichlet_operator(geom, measure, u, n=20_000, seed=5)
        assert report.passed
        assert report.details["form_side"] < 0.0
        assert report.details["fraction_above_one"] > 0.0

    def test_complex_function_rejected(self, geom, measure):
        with pytest.raises(DomainError):
            check_dirichlet_operator(geom, measure, exp_i([1.0, 0.0]), n=100)
