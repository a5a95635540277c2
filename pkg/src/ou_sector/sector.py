"""Duality map, pointwise bracket identities, the numerical-range criterion
and Galerkin field-of-values containment.

H-brackets are extended bilinearly to complex vectors; the conjugation
lives in f* = conj(f) |f|^{p-2}. With w = conj(f) D_H f = alpha + i beta,
a = |alpha|_H and b = |beta|_H, at every point where f does not vanish:

    -Re [B D_H f, D_H f*]_H = 1/2 |f|^{p-4} ((p-1) a^2 + b^2)
     Im [B D_H f, D_H f*]_H = |f|^{p-4} [(p B + Id) beta, alpha]_H
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss, hermevander
from scipy import linalg

from .calculus import CylinderFunction
from .errors import ConditioningError, DomainError
from .linalg import spd_inv_sqrt, spd_sqrt
from .measure import WeightedMeasure, draw_samples
from .model import HGeometry, sector_cotangent, sector_params
from .report import DEFAULT_SIGMAS, CheckReport, combine

log = logging.getLogger(__name__)

ZERO_LEVEL = 1e-12
IDENTITY_RTOL = 1e-9
ROUNDOFF = 1e-12


def _batch(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X.reshape(1, dim) if X.ndim == 1 else X


def _require_p(p: float) -> None:
    if not p > 1.0:
        raise DomainError(f"p must exceed 1, got {p}.")


def _dual(values: np.ndarray, p: float) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    mod = np.abs(values)
    out = np.zeros_like(values)
    nz = mod > 0.0
    out[nz] = np.conj(values[nz]) * mod[nz] ** (p - 2.0)
    return out


def dual_function(f: CylinderFunction, p: float, x) -> np.ndarray:
    """f*(x) = conj(f(x)) |f(x)|^{p-2}, and 0 where f(x) = 0."""
    _require_p(p)
    out = _dual(f(x), p)
    return out[0] if np.ndim(x) == 1 else out


def dual_gradient(f: CylinderFunction, p: float, x) -> np.ndarray:
    """grad f* = |f|^{p-2} conj(grad f) + (p-2) |f|^{p-4} conj(f) Re(conj(f) grad f).

    Rows where f vanishes are set to zero.
    """
    _require_p(p)
    X = _batch(x, f.dim)
    fx = np.asarray(f.value(X), dtype=complex)
    grad = np.asarray(f.gradient(X), dtype=complex)
    mod = np.abs(fx)
    nz = mod > 0.0
    out = np.zeros_like(grad)
    fz, gz, mz = fx[nz], grad[nz], mod[nz]
    re = np.real(np.conj(fz)[:, None] * gz)
    out[nz] = (mz ** (p - 2.0))[:, None] * np.conj(gz) + ((p - 2.0) * mz ** (p - 4.0) * np.conj(fz))[:, None] * re
    return out[0] if np.ndim(x) == 1 else out


def _range_integrand(g: HGeometry, B: np.ndarray, f: CylinderFunction, p: float, X: np.ndarray) -> np.ndarray:
    Df = np.asarray(f.gradient(X), dtype=complex) @ g.model.Q
    Dstar = dual_gradient(f, p, X) @ g.model.Q
    return g.bracket(Df @ B.T, Dstar)


def check_pointwise_identities(g: HGeometry, f: CylinderFunction, p: float, x) -> CheckReport:
    """Real-part identity, imaginary-part identity and the sector chain at each point.

    The check is run for B and for B^#. Points with |f| < 1e-12 are skipped.
    The imaginary part is also compared with the variant written with
    (B + 1/2 Id) in place of (B + 1/p Id); that residual is informational.
    """
    if p < 2.0:
        raise DomainError(f"Pointwise identities are checked for p >= 2, got {p}.")
    X = _batch(x, f.dim)
    fx = np.asarray(f.value(X), dtype=complex)
    keep = np.abs(fx) >= ZERO_LEVEL
    X, fx = X[keep], fx[keep]
    skipped = int((~keep).sum())
    C = sector_cotangent(g.gamma, p)
    mod = np.abs(fx)
    Df = np.asarray(f.gradient(X), dtype=complex) @ g.model.Q
    w = np.conj(fx)[:, None] * Df
    alpha, beta = w.real, w.imag
    a2 = g.bracket(alpha, alpha)
    b2 = g.bracket(beta, beta)
    power = mod ** (p - 4.0)
    eye = np.eye(g.dim)

    re_res = im_res = printed_res = 0.0
    chain_margin = math.inf
    ok = bool(len(X) > 0 or skipped > 0)
    for label, B in (("B", g.B), ("B_sharp", g.B_sharp)):
        lhs = _range_integrand(g, B, f, p, X)
        scale = mod ** (p - 2.0) * g.h_norm(Df) ** 2 * (1.0 + g.h_operator_norm(B)) + 1e-300
        re_rhs = 0.5 * power * ((p - 1.0) * a2 + b2)
        im_rhs = power * g.bracket(beta @ (p * B + eye).T, alpha)
        im_printed = p * power * g.bracket(beta @ (B + 0.5 * eye).T, alpha)
        r_re = np.abs(-lhs.real - re_rhs) / scale
        r_im = np.abs(lhs.imag - im_rhs) / scale
        margin = (-C * lhs.real - np.abs(lhs.imag)) / scale
        if len(X):
            re_res = max(re_res, float(r_re.max()))
            im_res = max(im_res, float(r_im.max()))
            chain_margin = min(chain_margin, float(margin.min()))
            if label == "B":
                printed_res = float((np.abs(lhs.imag - im_printed) / scale).max())
    if len(X):
        ok = re_res <= IDENTITY_RTOL and im_res <= IDENTITY_RTOL and chain_margin >= -IDENTITY_RTOL
    notes = []
    if printed_res > IDENTITY_RTOL:
        notes.append(f"imaginary part written with (B + Id/2) misses by {printed_res:.3g} (relative) at p={p:g}")
    return CheckReport(
        name=f"pointwise_identities[p={p:g}]",
        kind="identity",
        passed=ok,
        residual=max(re_res, im_res),
        margin=None if math.isinf(chain_margin) else chain_margin,
        tolerance=IDENTITY_RTOL,
        n_samples=len(X),
        details={
            "real_part_residual": re_res,
            "imaginary_part_residual": im_res,
            "half_shift_variant_residual": printed_res,
            "skipped_zero_points": skipped,
            "p": p,
            "C_theta": C,
            "function": f.name,
        },
        notes=notes,
    )


def check_sector_constants(g: HGeometry, p_values, tol: float = 1e-10) -> CheckReport:
    """|B + Id/2| = gamma/2 and p |B + Id/p| = C_theta sqrt(p - 1), with p gamma/2 below it."""
    eye = np.eye(g.dim)
    half = abs(g.h_operator_norm(g.B + 0.5 * eye) - 0.5 * g.gamma)
    worst = half
    rows = {}
    for p in p_values:
        C = sector_cotangent(g.gamma, p)
        shifted = g.h_operator_norm(g.B + eye / p)
        exact = math.sqrt(0.25 * g.gamma**2 + (0.5 - 1.0 / p) ** 2)
        r1 = abs(shifted - exact)
        r2 = abs(p * shifted - C * math.sqrt(p - 1.0))
        slack = C * math.sqrt(p - 1.0) - 0.5 * p * g.gamma
        worst = max(worst, r1, r2, max(0.0, -slack))
        rows[f"{p:g}"] = {"shift_norm": shifted, "C_theta": C, "gamma_bound_slack": slack}
    scale = max(1.0, g.gamma)
    return CheckReport(
        name="sector_constants",
        kind="identity",
        passed=worst <= tol * scale,
        residual=worst,
        tolerance=tol * scale,
        details={"gamma": g.gamma, "half_shift_residual": half, "per_p": rows},
    )


@dataclass
class RangeSample:
    """Form-side estimate of <L f, f*> and its distance to the sector boundary."""

    value: complex
    re: float
    im: float
    margin: float
    std_error: float
    p: float
    C_theta: float
    n_samples: int
    seed: int
    sigmas: float = DEFAULT_SIGMAS
    function: str = "f"
    scale: float = 0.0
    roundoff: float = ROUNDOFF

    @property
    def tolerance(self) -> float:
        return self.sigmas * self.std_error + self.roundoff * self.scale

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance

    def to_report(self) -> CheckReport:
        return CheckReport(
            name=f"numerical_range[p={self.p:g}]",
            kind="inequality",
            passed=self.passed,
            margin=self.margin,
            std_error=self.std_error,
            tolerance=self.tolerance,
            n_samples=self.n_samples,
            seed=self.seed,
            details={"re": self.re, "im": self.im, "C_theta": self.C_theta, "p": self.p, "function": self.function},
        )


def check_numerical_range(
    g: HGeometry,
    w: WeightedMeasure,
    f: CylinderFunction,
    p: float,
    n: int = 100_000,
    seed: int = 0,
    sigmas: float = DEFAULT_SIGMAS,
    roundoff: float = ROUNDOFF,
) -> RangeSample:
    """Estimate int [B D_H f, D_H f*]_H dnu and its margin -C Re - |Im|.

    Passes when the margin clears -(sigmas * se + roundoff * mean |integrand|).
    """
    _require_p(p)
    C = sector_cotangent(g.gamma, p)
    s = draw_samples(w, n, seed)
    X = s.points
    vals = _range_integrand(g, g.B, f, p, X)
    if p < 4.0:
        vals = np.where(np.abs(f.value(X)) >= ZERO_LEVEL, vals, 0.0)
    vals = vals * s.weights
    re, im = vals.real, vals.imag
    mre, mim = float(re.mean()), float(im.mean())
    se_re = float(re.std(ddof=1) / math.sqrt(len(re)))
    se_im = float(im.std(ddof=1) / math.sqrt(len(im)))
    return RangeSample(
        value=complex(mre, mim),
        re=mre,
        im=mim,
        margin=-C * mre - abs(mim),
        std_error=C * se_re + se_im,
        p=float(p),
        C_theta=C,
        n_samples=s.n,
        seed=seed,
        sigmas=sigmas,
        function=f.name,
        scale=float(np.mean(np.abs(vals))),
        roundoff=roundoff,
    )


# ---- Galerkin sections ----

@dataclass(frozen=True)
class HermiteBasis:
    """Normalized Hermite polynomials He_a(y)/sqrt(a!) in y = Q_inf^{-1/2} x, total degree <= d."""

    dim: int
    degree: int
    whiten: np.ndarray = field(repr=False)
    indices: tuple[tuple[int, ...], ...] = field(repr=False)

    @classmethod
    def build(cls, g: HGeometry, degree: int) -> HermiteBasis:
        if degree < 1:
            raise DomainError(f"Basis degree must be at least 1, got {degree}.")
        idx = tuple(
            sorted(
                (a for a in itertools.product(range(degree + 1), repeat=g.dim) if sum(a) <= degree),
                key=lambda a: (sum(a), tuple(-k for k in a)),
            )
        )
        return cls(dim=g.dim, degree=degree, whiten=np.asarray(spd_inv_sqrt(g.model.Q_inf)), indices=idx)

    def __len__(self) -> int:
        return len(self.indices)

    def evaluate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Values (m, K), gradients (m, K, n) and Hessians (m, K, n, n) in x."""
        Y = X @ self.whiten
        m, n, d = X.shape[0], self.dim, self.degree
        norms = np.array([1.0 / math.sqrt(math.factorial(k)) for k in range(d + 1)])
        V = hermevander(Y, d) * norms  # (m, n, d+1)
        ks = np.arange(d + 1)
        V1 = np.zeros_like(V)
        V1[..., 1:] = hermevander(Y, d - 1) * norms[1:] * ks[1:]
        V2 = np.zeros_like(V)
        if d >= 2:
            V2[..., 2:] = hermevander(Y, d - 2) * norms[2:] * (ks[2:] * (ks[2:] - 1))
        K = len(self.indices)
        vals = np.ones((m, K))
        gy = np.ones((m, K, n))
        hy = np.ones((m, K, n, n))
        for j, a in enumerate(self.indices):
            for axis, k in enumerate(a):
                vals[:, j] *= V[:, axis, k]
                for r in range(n):
                    gy[:, j, r] *= V1[:, axis, k] if r == axis else V[:, axis, k]
                    for c in range(n):
                        order = (r == axis) + (c == axis)
                        table = (V, V1, V2)[order]
                        hy[:, j, r, c] *= table[:, axis, k]
        S = self.whiten
        grads = gy @ S
        hess = np.einsum("ri,mkrc,cj->mkij", S, hy, S)
        return vals, grads, hess


def _galerkin_rows(g, weight, basis, X, weights, representation):
    vals, grads, hess = basis.evaluate(X)
    m = g.model
    Dg = grads @ m.Q
    if representation == "form":
        M = np.einsum("s,sjn,sin->ij", weights, Dg @ g.B.T, grads)
    else:
        trace = 0.5 * np.einsum("ab,skba->sk", m.Q, hess)
        drift = np.einsum("sa,ska->sk", X @ m.A.T, grads)
        Lb = trace + drift
        if weight is not None and weight.certificate != "zero":
            Lb = Lb + np.einsum("ska,sa->sk", Dg @ g.B.T, weight.gradient(X))
        M = np.einsum("s,si,sj->ij", weights, vals, Lb)
    G = np.einsum("s,si,sj->ij", weights, vals, vals)
    return M, G


def galerkin_matrix(
    g: HGeometry,
    w: WeightedMeasure | None,
    degree: int,
    n: int = 100_000,
    seed: int = 0,
    representation: str = "generator",
    max_nodes: int = 200_000,
) -> tuple[np.ndarray, np.ndarray]:
    """M[i, j] = int (L b_j) b_i dnu and G[i, j] = int b_i b_j dnu.

    With U = 0 the entries are polynomial Gaussian moments and are computed
    exactly on a tensor Gauss-Hermite grid; otherwise by Monte Carlo.
    ``representation="form"`` assembles M from int [B D_H b_j, D_H b_i]_H dnu.
    """
    if representation not in ("generator", "form"):
        raise DomainError(f"Unknown representation {representation!r}.")
    basis = HermiteBasis.build(g, degree)
    weight = None if w is None else w.weight
    exact = (weight is None or weight.certificate == "zero") and (degree + 1) ** g.dim <= max_nodes
    if exact:
        z, wq = hermegauss(degree + 1)
        Z = np.array(list(itertools.product(z, repeat=g.dim)))
        weights = np.prod(np.array(list(itertools.product(wq / math.sqrt(2 * math.pi), repeat=g.dim))), axis=1)
        X = Z @ np.asarray(spd_sqrt(g.model.Q_inf))
    else:
        if w is None:
            raise DomainError("A weighted measure is required for Monte Carlo assembly.")
        s = draw_samples(w, n, seed)
        X, weights = s.points, s.weights / s.n
    M, G = _galerkin_rows(g, weight, basis, X, weights, representation)
    try:
        linalg.cholesky(G, lower=True)
    except linalg.LinAlgError as exc:
        raise ConditioningError(
            f"Gram matrix of the degree-{degree} basis is not positive definite; raise the sample count."
        ) from exc
    log.debug("Galerkin %s basis=%d exact=%s", representation, len(basis), exact)
    return M, G


def galerkin_spectrum(M: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Generalized eigenvalues of M v = lambda G v, sorted by real part."""
    ev = linalg.eigvals(M, G)
    return ev[np.lexsort((ev.imag, ev.real))]


@dataclass
class FovReport:
    boundary: np.ndarray
    theta: float
    C_theta: float
    contained: bool
    max_violation: float
    tolerance: float = 1e-8

    def to_report(self, name: str = "field_of_values") -> CheckReport:
        return CheckReport(
            name=name,
            kind="inequality",
            passed=self.contained,
            margin=-self.max_violation,
            tolerance=self.tolerance,
            details={"theta": self.theta, "C_theta": self.C_theta, "boundary_points": len(self.boundary)},
        )


def field_of_values(
    M: np.ndarray,
    G: np.ndarray,
    theta: float | None = None,
    *,
    C_theta: float | None = None,
    resolution: int = 720,
    tol: float = 1e-8,
) -> FovReport:
    """Boundary of {v* M v / v* G v} and its containment in |Im z| <= -C Re z.

    G = L L^T, W = L^{-1} M L^{-T}. For each rotation angle the top
    eigenvector of the Hermitian part of e^{i phi} W gives one boundary point.
    """
    if (theta is None) == (C_theta is None):
        raise DomainError("Give exactly one of theta or C_theta.")
    C = 1.0 / math.tan(theta) if C_theta is None else float(C_theta)
    th = math.atan2(1.0, C) if theta is None else float(theta)
    try:
        L = linalg.cholesky(np.asarray(G), lower=True)
    except linalg.LinAlgError as exc:
        raise ConditioningError("Gram matrix is not positive definite.") from exc
    W = linalg.solve_triangular(L, linalg.solve_triangular(L, np.asarray(M, dtype=complex), lower=True).conj().T, lower=True).conj().T
    points = np.empty(resolution, dtype=complex)
    for i, phi in enumerate(np.linspace(0.0, 2.0 * math.pi, resolution, endpoint=False)):
        R = np.exp(1j * phi) * W
        _, vecs = linalg.eigh(0.5 * (R + R.conj().T))
        v = vecs[:, -1]
        points[i] = np.vdot(v, W @ v)
    scale = max(1.0, float(np.abs(points).max()))
    violation = float(np.max(np.abs(points.imag) + C * points.real)) / scale
    return FovReport(boundary=points, theta=th, C_theta=C, contained=violation <= tol, max_violation=violation, tolerance=tol)


def check_galerkin_sector(
    g: HGeometry,
    w: WeightedMeasure,
    degree: int = 2,
    n: int = 100_000,
    seed: int = 0,
    resolution: int = 720,
    tol: float = 1e-8,
) -> CheckReport:
    """Form-side Galerkin section at p = 2: spectrum and field of values inside the sector of half-angle theta_2."""
    params = sector_params(g, 2.0)
    M, G = galerkin_matrix(g, w, degree, n, seed, representation="form")
    fov = field_of_values(M, G, C_theta=params.C_theta, resolution=resolution, tol=tol)
    eigs = galerkin_spectrum(M, G)
    eig_margin = float(np.min(-params.C_theta * eigs.real - np.abs(eigs.imag)))
    scale = max(1.0, float(np.abs(eigs).max()))
    spectrum = CheckReport(
        name="galerkin_spectrum",
        kind="inequality",
        passed=eig_margin >= -tol * scale,
        margin=eig_margin,
        tolerance=tol * scale,
        details={"eigenvalues": eigs, "degree": degree},
    )
    return combine("galerkin_sector", [spectrum, fov.to_report()], notes=[f"theta_2={params.theta_p:.6g}"])
