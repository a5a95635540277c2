"""Tests for ou_sector.model."""

import math

import numpy as np
import pytest

from ou_sector.errors import DimensionError, DomainError, StabilityError
from ou_sector.model import (
    build_model,
    builtin_model,
    check_rkhs_constant,
    h_geometry,
    random_stable_system,
    rkhs_constant,
    sector_cotangent,
    sector_params,
)


@pytest.fixture
def rotation():
    return h_geometry(builtin_model("rotation", alpha=0.5))


class TestBuildModel:
    def test_rotation_covariance(self):
        m = builtin_model("rotation", alpha=0.5)
        np.testing.assert_allclose(m.Q_inf, np.eye(2), atol=1e-12)
        assert m.dim == 2

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            build_model(-np.eye(2), np.eye(3))

    def test_unstable(self):
        with pytest.raises(StabilityError):
            build_model(np.diag([1.0, -1.0]), np.eye(2))

    def test_unknown_builtin(self):
        with pytest.raises(DomainError, match="Unknown built-in"):
            builtin_model("nope")


class TestGeometry:
    def test_drift_algebra_on_random_systems(self):
        rng = np.random.default_rng(0)
        for i in range(200):
            dim = int(rng.integers(1, 9))
            g = h_geometry(build_model(*random_stable_system(dim, rng)))
            report = g.check_drift_algebra(n_vectors=10, seed=i)
            assert report.passed, report.details
            assert np.abs(g.B + g.B_sharp + np.eye(dim)).max() <= 1e-9

    def test_v_sharp_is_identity(self, rotation):
        np.testing.assert_allclose(rotation.V_sharp, np.eye(2), atol=1e-12)

    def test_rotation_gamma(self):
        for alpha in (0.0, 0.25, 0.5, -1.5):
            g = h_geometry(builtin_model("rotation", alpha=alpha))
            assert abs(g.gamma - abs(alpha)) <= 1e-12

    def test_selfadjoint_drift_is_minus_half(self):
        g = h_geometry(builtin_model("selfadjoint", dim=3))
        np.testing.assert_allclose(g.B, -0.5 * np.eye(3), atol=1e-12)
        assert g.gamma == pytest.approx(0.0, abs=1e-12)

    def test_bracket_is_bilinear(self, rotation):
        h = np.array([1.0 + 1j, 2.0])
        k = np.array([0.5, -1j])
        expected = h @ np.linalg.inv(rotation.model.Q) @ k
        assert rotation.bracket(h, k) == pytest.approx(expected)

    def test_rkhs_constant_is_operator_norm(self, rotation):
        assert rkhs_constant(rotation) == pytest.approx(rotation.h_operator_norm(rotation.B))

    def test_rkhs_check_reports_excess(self, rotation):
        report = check_rkhs_constant(rotation)
        assert report.passed
        assert report.residual <= 1e-10
        assert report.details["c"] == pytest.approx(rotation.h_operator_norm(rotation.B))
        too_small = check_rkhs_constant(rotation, c=0.5 * report.details["c"])
        assert not too_small.passed
        assert too_small.residual > 0.1

    def test_scaling_q_leaves_geometry_unchanged(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            A, Q = random_stable_system(3, rng)
            g = h_geometry(build_model(A, Q))
            scaled = h_geometry(build_model(A, 4.0 * Q))
            np.testing.assert_allclose(scaled.B, g.B, atol=1e-9)
            assert scaled.gamma == pytest.approx(g.gamma, rel=1e-9, abs=1e-12)
            for p in (1.5, 2.0, 4.0):
                assert sector_params(scaled, p).theta_p == pytest.approx(sector_params(g, p).theta_p, abs=1e-9)

    def test_adjoint_drift(self, rotation):
        m = rotation.model
        np.testing.assert_allclose(rotation.adjoint_drift, m.A.T, atol=1e-12)


class TestSectorAngle:
    def test_p2_gives_gamma(self):
        for gamma in (0.0, 0.5, 2.0):
            assert sector_cotangent(gamma, 2.0) == pytest.approx(gamma, abs=1e-15)

    def test_symmetric_p4_is_pi_over_3(self):
        g = h_geometry(builtin_model("selfadjoint"))
        assert sector_params(g, 4.0).theta_p == pytest.approx(math.pi / 3, abs=1e-12)

    def test_rotation_p2(self, rotation):
        params = sector_params(rotation, 2.0)
        assert params.C_theta == pytest.approx(0.5, abs=1e-12)
        assert params.theta_p == pytest.approx(math.atan2(1.0, 0.5))

    def test_p_must_exceed_one(self):
        with pytest.raises(DomainError, match="p must exceed 1"):
            sector_cotangent(0.5, 1.0)
