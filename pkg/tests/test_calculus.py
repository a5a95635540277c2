"""Tests for ou_sector.calculus."""

import numpy as np
import pytest

from ou_sector.calculus import (
    CylinderFunction,
    QuadratureSpec,
    apply_generator,
    chapman_kolmogorov_check,
    complexify,
    constant,
    cosine,
    d_h,
    default_semigroup_family,
    generator_derivative_check,
    generator_terms,
    linear,
    mehler_apply,
    mehler_cosine,
    mehler_values,
    product,
    quadratic,
    random_complex_function,
    random_real_function,
    semigroup_properties_check,
    sine,
)
from ou_sector.errors import AccuracyError, DomainError
from ou_sector.measure import quadratic_weight
from ou_sector.model import builtin_model, h_geometry


@pytest.fixture
def model():
    return builtin_model("rotation", alpha=0.5)


@pytest.fixture
def geom(model):
    return h_geometry(model)


@pytest.fixture
def points():
    return np.random.default_rng(7).standard_normal((25, 2))


class TestCylinderFunction:
    def test_wrong_gradient_rejected(self):
        with pytest.raises(AccuracyError, match="Gradient oracle"):
            CylinderFunction(
                dim=2,
                value=lambda X: X[:, 0] ** 2,
                gradient=lambda X: X,
                hessian=lambda X: np.zeros((X.shape[0], 2, 2)),
            )

    def test_wrong_hessian_rejected(self):
        with pytest.raises(AccuracyError, match="Hessian oracle"):
            CylinderFunction(
                dim=1,
                value=lambda X: X[:, 0] ** 2,
                gradient=lambda X: 2.0 * X,
                hessian=lambda X: np.zeros((X.shape[0], 1, 1)),
            )

    def test_call_accepts_single_point(self):
        f = linear([1.0, 2.0], c0=0.5)
        assert f([1.0, 1.0])[0] == pytest.approx(3.5)

    def test_product_of_cosine_with_itself_is_nonnegative(self):
        c = cosine([1.0, 0.0])
        sq = product(c, c)
        assert (sq.lower, sq.upper) == (0.0, 1.0)

    def test_psd_quadratic_has_lower_bound(self):
        assert quadratic(np.eye(2)).lower == 0.0
        assert quadratic(np.eye(2), b=[1.0, 0.0]).lower is None

    def test_complexify(self, points):
        f = complexify(cosine([1.0, 0.5]), sine([0.3, -1.0]))
        assert f.is_complex
        expected = np.cos(points @ [1.0, 0.5]) + 1j * np.sin(points @ [0.3, -1.0])
        np.testing.assert_allclose(f.value(points), expected, atol=1e-14)

    def test_random_families_construct(self, model):
        rng = np.random.default_rng(3)
        for _ in range(20):
            assert not random_real_function(model, rng).is_complex
            random_complex_function(model, rng)


class TestGenerator:
    def test_d_h_is_q_gradient(self, model):
        f = linear([1.0, -2.0])
        np.testing.assert_allclose(d_h(model, f, np.zeros(2)), model.Q @ [1.0, -2.0])

    def test_linear_function(self, geom, model, points):
        b = np.array([0.4, -1.3])
        np.testing.assert_allclose(apply_generator(geom, None, linear(b), points), (points @ model.A.T) @ b, atol=1e-12)

    def test_quadratic_function(self, geom, model, points):
        C = np.array([[2.0, 0.5], [0.5, 1.0]])
        expected = 0.5 * np.trace(model.Q @ C) + np.einsum("mi,mi->m", points @ model.A.T, points @ C)
        np.testing.assert_allclose(apply_generator(geom, None, quadratic(C), points), expected, atol=1e-12)

    def test_adjoint_uses_dual_drift(self, geom, points):
        b = np.array([1.0, 0.2])
        got = apply_generator(geom, None, linear(b), points, adjoint=True)
        np.testing.assert_allclose(got, (points @ geom.adjoint_drift.T) @ b, atol=1e-12)

    def test_weight_term(self, geom, model, points):
        b = np.array([0.7, 0.1])
        U = quadratic_weight(np.eye(2))
        terms = generator_terms(geom, U, linear(b), points)
        expected = 2.0 * points @ (geom.B @ model.Q @ b)
        np.testing.assert_allclose(terms.weight_part, expected, atol=1e-12)
        np.testing.assert_allclose(terms.total, apply_generator(geom, U, linear(b), points))

    def test_constant_is_annihilated(self, geom, points):
        U = quadratic_weight(np.eye(2))
        np.testing.assert_allclose(apply_generator(geom, U, constant(2, 3.0), points), 0.0)

    def test_single_point_returns_scalar(self, geom):
        assert np.ndim(apply_generator(geom, None, linear([1.0, 0.0]), np.ones(2))) == 0


class TestMehler:
    def test_quadrature_matches_closed_form(self, model, points):
        b = np.array([0.7, -0.4])
        f = cosine(b, phase=0.2)
        got, errs = mehler_values(model, f, 0.5, points)
        np.testing.assert_allclose(got, mehler_cosine(model, b, 0.5, points, phase=0.2), atol=1e-10)
        assert np.all(errs == 0.0)

    def test_monte_carlo_matches_closed_form(self, model):
        b = np.array([0.7, -0.4])
        quad = QuadratureSpec(max_tensor_dim=0, mc_samples=50_000, seed=11)
        x = np.array([0.3, -0.2])
        est = mehler_apply(model, cosine(b), 0.5, x, quad)
        exact = mehler_cosine(model, b, 0.5, x)[0]
        assert abs(est.mean - exact) <= 3.0 * est.std_error
        assert est.seed == 11

    def test_preserves_constants(self, model, points):
        got, _ = mehler_values(model, constant(2, 1.0), 0.8, points)
        np.testing.assert_allclose(got, 1.0, atol=1e-13)

    def test_rejects_nonpositive_time(self, model, points):
        with pytest.raises(DomainError):
            mehler_values(model, constant(2), 0.0, points)

    def test_chapman_kolmogorov(self, model, points):
        report = chapman_kolmogorov_check(model, cosine([0.6, 0.9]), 0.3, 0.4, points[:5])
        assert report.passed, report.residual

    def test_generator_derivative(self, geom, points):
        report = generator_derivative_check(geom, cosine([0.6, 0.9], phase=0.4), points[:5])
        assert report.passed, report.residual

    def test_semigroup_properties(self, model):
        family = default_semigroup_family(model, np.random.default_rng(5))
        report = semigroup_properties_check(model, (0.1, 1.0), family, n_points=400, seed=2)
        assert report.passed, [c.name for c in report.flatten() if not c.passed]
        names = [c.name for c in report.children]
        assert any(n.startswith("positivity") for n in names)
        assert any(n.startswith("sub_markov") for n in names)
        assert any(n.startswith("contraction") for n in names)
