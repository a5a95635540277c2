"""The Ornstein-Uhlenbeck model (A, Q, Q_inf) and its Cameron-Martin geometry.

H is realized as R^n with Gram matrix Q^{-1} ([h, k]_H = h^T Q^{-1} k) and
H_inf as R^n with Gram matrix Q_inf^{-1}. The embeddings i* and i_inf* are
the matrices Q and Q_inf, so every abstract identity is a matrix identity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AccuracyError, DimensionError, DomainError
from .linalg import require_spd, require_stable, solve_lyapunov, spd_inv_sqrt, spd_sqrt
from .report import CheckReport

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OuModel:
    """Stable drift A, SPD diffusion Q and the invariant covariance Q_inf."""

    A: np.ndarray
    Q: np.ndarray
    Q_inf: np.ndarray

    @property
    def dim(self) -> int:
        return self.A.shape[0]


def build_model(A, Q) -> OuModel:
    A = require_stable(A)
    Q = require_spd(Q, "Q")
    if A.shape != Q.shape:
        raise DimensionError(f"Dimension mismatch: A is {A.shape}, Q is {Q.shape}.")
    return OuModel(A=A, Q=Q, Q_inf=solve_lyapunov(A, Q))


@dataclass(frozen=True)
class HGeometry:
    """Gram data of H and H_inf, the drift operator B, V and gamma."""

    model: OuModel
    gram_inv: np.ndarray
    gram_inf_inv: np.ndarray
    B: np.ndarray
    V: np.ndarray
    gamma: float
    q_sqrt: np.ndarray = field(repr=False)
    q_inv_sqrt: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.model.dim

    def h_adjoint(self, M: np.ndarray) -> np.ndarray:
        """Adjoint in the H metric: M^# = Q M^T Q^{-1}."""
        return self.model.Q @ M.T @ self.gram_inv

    @property
    def B_sharp(self) -> np.ndarray:
        return self.h_adjoint(self.B)

    @property
    def V_sharp(self) -> np.ndarray:
        """Adjoint of V: H_inf -> H, as a map H -> H_inf."""
        return self.model.Q_inf @ self.V.T @ self.gram_inv

    @property
    def adjoint_drift(self) -> np.ndarray:
        """Drift Q_inf A^T Q_inf^{-1} of the dual generator."""
        return self.model.Q_inf @ self.model.A.T @ self.gram_inf_inv

    def bracket(self, h: np.ndarray, k: np.ndarray) -> np.ndarray:
        """Bilinear H-pairing h^T Q^{-1} k over the last axis (no conjugation)."""
        return np.einsum("...i,ij,...j->...", h, self.gram_inv, k)

    def h_norm(self, h: np.ndarray) -> np.ndarray:
        return np.sqrt(np.abs(self.bracket(np.conj(h), h)))

    def h_operator_norm(self, M: np.ndarray) -> float:
        """||M||_{L(H)} = ||Q^{-1/2} M Q^{1/2}||_2."""
        return float(np.linalg.norm(self.q_inv_sqrt @ M @ self.q_sqrt, 2))

    def check_drift_algebra(self, n_vectors: int = 10, seed: int = 0, tol: float = 1e-9) -> CheckReport:
        """B + B^# = -Id and [Bh, h]_H = -1/2 |h|_H^2 on sampled h."""
        eye = np.eye(self.dim)
        sum_res = float(np.abs(self.B + self.B_sharp + eye).max())
        rng = np.random.default_rng(seed)
        hs = rng.standard_normal((n_vectors, self.dim)) @ self.q_sqrt
        lhs = self.bracket(hs @ self.B.T, hs)
        rhs = -0.5 * self.bracket(hs, hs)
        quad_res = float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1.0)))
        half_res = abs(self.h_operator_norm(self.B + 0.5 * eye) - 0.5 * self.gamma)
        residual = max(sum_res, quad_res, half_res)
        return CheckReport(
            name="drift_algebra",
            kind="identity",
            passed=residual <= tol,
            residual=residual,
            tolerance=tol,
            seed=seed,
            n_samples=n_vectors,
            details={
                "B_plus_Bsharp_residual": sum_res,
                "quadratic_form_residual": quad_res,
                "half_shift_norm_residual": half_res,
            },
        )


def h_geometry(m: OuModel, tol: float = 1e-9, n_probe: int = 16, seed: int = 0) -> HGeometry:
    """Assemble B = Q_inf A^T Q^{-1}, V = Q Q_inf^{-1} and gamma = ||B - B^#||_{L(H)}."""
    gram_inv = np.linalg.inv(m.Q)
    gram_inv = 0.5 * (gram_inv + gram_inv.T)
    gram_inf_inv = require_spd(np.linalg.inv(m.Q_inf), "Q_inf^{-1}")
    B = m.Q_inf @ m.A.T @ gram_inv
    V = m.Q @ gram_inf_inv
    q_sqrt = spd_sqrt(m.Q)
    q_inv_sqrt = spd_inv_sqrt(m.Q)
    B_sharp = m.Q @ B.T @ gram_inv
    gamma = float(np.linalg.norm(q_inv_sqrt @ (B - B_sharp) @ q_sqrt, 2))
    geom = HGeometry(
        model=m,
        gram_inv=gram_inv,
        gram_inf_inv=gram_inf_inv,
        B=B,
        V=V,
        gamma=gamma,
        q_sqrt=q_sqrt,
        q_inv_sqrt=q_inv_sqrt,
    )

    eye = np.eye(m.dim)
    scale = max(1.0, float(np.abs(B).max()))
    if np.abs(B + B_sharp + eye).max() > tol * scale:
        raise AccuracyError("B + B^# = -Id fails; Q_inf is not accurate enough.")
    if np.abs(geom.V_sharp - eye).max() > tol * max(1.0, float(np.abs(V).max())):
        raise AccuracyError("V^# differs from the identity.")
    xs = np.random.default_rng(seed).standard_normal((n_probe, m.dim))
    lhs = (xs @ m.Q) @ B.T
    rhs = xs @ (m.Q_inf @ m.A.T).T
    if np.abs(lhs - rhs).max() > tol * max(1.0, float(np.abs(rhs).max())):
        raise AccuracyError("B Q x* = Q_inf A^T x* fails on probe vectors.")
    log.debug("H geometry n=%d gamma=%.6g", m.dim, gamma)
    return geom


@dataclass(frozen=True)
class SectorParams:
    p: float
    theta_p: float
    C_theta: float


def sector_cotangent(gamma: float, p: float) -> float:
    """cot(theta_p) = sqrt((p-2)^2 + p^2 gamma^2) / (2 sqrt(p-1))."""
    if not p > 1.0:
        raise DomainError(f"p must exceed 1, got {p}.")
    return math.sqrt((p - 2.0) ** 2 + (p * gamma) ** 2) / (2.0 * math.sqrt(p - 1.0))


def sector_params(g: HGeometry, p: float) -> SectorParams:
    C = sector_cotangent(g.gamma, p)
    return SectorParams(p=float(p), theta_p=math.atan2(1.0, C), C_theta=C)


def _rkhs_excess(g: HGeometry, c: float, n_probe: int, seed: int) -> float:
    # largest relative excess of |Q_inf A^T x*|_H over c |Q x*|_H
    m = g.model
    xs = np.random.default_rng(seed).standard_normal((n_probe, m.dim))
    lhs = g.h_norm(xs @ (m.Q_inf @ m.A.T).T)
    rhs = c * g.h_norm(xs @ m.Q)
    return float(max(0.0, np.max((lhs - rhs) / np.maximum(rhs, 1e-300))))


def rkhs_constant(g: HGeometry, n_probe: int = 100, seed: int = 0) -> float:
    """c = ||B||_{L(H)}, verified on |Q_inf A^T x*|_H <= c |Q x*|_H."""
    c = g.h_operator_norm(g.B)
    if _rkhs_excess(g, c, n_probe, seed) > 1e-10:
        raise AccuracyError("RKHS bound |Q_inf A^T x*|_H <= c |Q x*|_H violated.")
    return c


def check_rkhs_constant(g: HGeometry, n_probe: int = 100, seed: int = 0, tol: float = 1e-10, c: float | None = None) -> CheckReport:
    """Report form of rkhs_constant; a candidate c other than ||B||_{L(H)} may be given."""
    c = g.h_operator_norm(g.B) if c is None else float(c)
    excess = _rkhs_excess(g, c, n_probe, seed)
    return CheckReport(
        name="rkhs_constant",
        kind="inequality",
        passed=excess <= tol,
        residual=excess,
        tolerance=tol,
        seed=seed,
        n_samples=n_probe,
        details={"c": c},
    )


# ---- built-in systems ----

def rotation_system(alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """A = [[-1, a], [-a, -1]], Q = 2 Id: Q_inf = Id and gamma = |a|."""
    A = np.array([[-1.0, alpha], [-alpha, -1.0]])
    return A, 2.0 * np.eye(2)


def selfadjoint_system(dim: int = 2) -> tuple[np.ndarray, np.ndarray]:
    return -np.eye(dim), np.eye(dim)


def diagonal_system() -> tuple[np.ndarray, np.ndarray]:
    return np.diag([-1.0, -3.0]), np.diag([2.0, 6.0])


def random_stable_system(dim: int, rng: np.random.Generator, skew: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """A = -S + K with S SPD and K antisymmetric; Q random SPD."""
    G = rng.standard_normal((dim, dim))
    S = G @ G.T / dim + 0.5 * np.eye(dim)
    W = rng.standard_normal((dim, dim))
    K = (W - W.T) * (rng.uniform(0.0, 2.0) if skew is None else skew)
    H = rng.standard_normal((dim, dim))
    Q = H @ H.T / dim + 0.5 * np.eye(dim)
    return -S + K, 0.5 * (Q + Q.T)


BUILTIN_MODELS = ("rotation", "selfadjoint", "diagonal", "random")


def builtin_model(name: str, alpha: float = 0.5, dim: int = 2, seed: int = 0) -> OuModel:
    if name == "rotation":
        A, Q = rotation_system(alpha)
    elif name == "selfadjoint":
        A, Q = selfadjoint_system(dim)
    elif name == "diagonal":
        A, Q = diagonal_system()
    elif name == "random":
        A, Q = random_stable_system(dim, np.random.default_rng(seed))
    else:
        raise DomainError(f"Unknown built-in model {name!r}; choose from {', '.join(BUILTIN_MODELS)}.")
    return build_model(A, Q)
