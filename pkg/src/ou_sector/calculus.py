"""Cylinder test functions, the H-gradient, the perturbed generator L and
the unweighted Mehler semigroup.

Every oracle is vectorized over rows: ``value(X)`` maps an (m, n) array of
points to (m,), ``gradient`` to (m, n) and ``hessian`` to (m, n, n).
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .errors import AccuracyError, DomainError
from .linalg import integrate_sandwich, matrix_exp, spd_inv_sqrt, spd_sqrt
from .measure import McEstimate, WeightFunction, sample_gaussian, standard_normals
from .model import HGeometry, OuModel
from .report import DEFAULT_SIGMAS, CheckReport, combine, paired_identity

log = logging.getLogger(__name__)

Oracle = Callable[[np.ndarray], np.ndarray]

FD_STEP = 1e-5
FD_RTOL = 1e-6


def _batch(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X.reshape(1, dim) if X.ndim == 1 else X


@dataclass(frozen=True)
class CylinderFunction:
    """Smooth test function with value, gradient and Hessian oracles.

    The oracles are checked against centered finite differences at 20
    points drawn at ``length_scale`` when the function is created.
    """

    dim: int
    value: Oracle
    gradient: Oracle
    hessian: Oracle
    is_complex: bool = False
    bounded: bool = True
    lower: float | None = None
    upper: float | None = None
    name: str = "f"
    length_scale: float = 1.0
    check_seed: int = field(default=0, repr=False)

    def __post_init__(self) -> None:
        rng = np.random.default_rng(self.check_seed)
        pts = self.length_scale * rng.standard_normal((20, self.dim))
        h = FD_STEP * self.length_scale
        eye = np.eye(self.dim) * h
        grad = np.asarray(self.gradient(pts))
        fd = np.stack([(self.value(pts + eye[i]) - self.value(pts - eye[i])) / (2 * h) for i in range(self.dim)], axis=1)
        if np.any(np.abs(fd - grad).max(axis=1) > FD_RTOL * (1.0 + np.abs(grad).max(axis=1))):
            raise AccuracyError(f"Gradient oracle of {self.name} disagrees with finite differences.")
        hess = np.asarray(self.hessian(pts))
        fd2 = np.stack([(self.gradient(pts + eye[i]) - self.gradient(pts - eye[i])) / (2 * h) for i in range(self.dim)], axis=1)
        if np.any(np.abs(fd2 - hess).max(axis=(1, 2)) > FD_RTOL * (1.0 + np.abs(hess).max(axis=(1, 2)))):
            raise AccuracyError(f"Hessian oracle of {self.name} disagrees with finite differences.")

    def __call__(self, X) -> np.ndarray:
        return self.value(_batch(X, self.dim))


# ---- built-in families ----

def constant(dim: int, c: float | complex = 1.0) -> CylinderFunction:
    return CylinderFunction(
        dim=dim,
        value=lambda X: np.full(X.shape[0], c),
        gradient=lambda X: np.zeros(X.shape, dtype=np.result_type(c, float)),
        hessian=lambda X: np.zeros((X.shape[0], dim, dim), dtype=np.result_type(c, float)),
        is_complex=isinstance(c, complex),
        lower=None if isinstance(c, complex) else float(c),
        upper=None if isinstance(c, complex) else float(c),
        name=f"const({c})",
    )


def linear(b, c0: float = 0.0, length_scale: float = 1.0) -> CylinderFunction:
    """f(x) = <x, b> + c0."""
    b = np.asarray(b)
    n = b.shape[0]
    return CylinderFunction(
        dim=n,
        value=lambda X: X @ b + c0,
        gradient=lambda X: np.broadcast_to(b, X.shape).copy(),
        hessian=lambda X: np.zeros((X.shape[0], n, n), dtype=b.dtype),
        is_complex=np.iscomplexobj(b),
        bounded=False,
        name="linear",
        length_scale=length_scale,
    )


def quadratic(C, b=None, c0: float | complex = 0.0, length_scale: float = 1.0) -> CylinderFunction:
    """f(x) = 1/2 x^T C x + <b, x> + c0 with C symmetric (possibly complex)."""
    C = np.asarray(C)
    C = 0.5 * (C + C.T)
    n = C.shape[0]
    b = np.zeros(n, dtype=C.dtype) if b is None else np.asarray(b)
    is_complex = np.iscomplexobj(C) or np.iscomplexobj(b) or isinstance(c0, complex)
    psd = not is_complex and np.linalg.eigvalsh(C)[0] >= 0.0 and not np.any(b) and c0 >= 0
    return CylinderFunction(
        dim=n,
        value=lambda X: 0.5 * np.einsum("mi,ij,mj->m", X, C, X) + X @ b + c0,
        gradient=lambda X: X @ C + b,
        hessian=lambda X: np.broadcast_to(C, (X.shape[0], n, n)).copy(),
        is_complex=is_complex,
        bounded=False,
        lower=0.0 if psd else None,
        name="quadratic",
        length_scale=length_scale,
    )


def cosine(b, phase: float = 0.0, length_scale: float = 1.0) -> CylinderFunction:
    """f(x) = cos(<x, b> + phase)."""
    b = np.asarray(b, dtype=float)
    outer = np.outer(b, b)
    return CylinderFunction(
        dim=b.shape[0],
        value=lambda X: np.cos(X @ b + phase),
        gradient=lambda X: -np.sin(X @ b + phase)[:, None] * b,
        hessian=lambda X: -np.cos(X @ b + phase)[:, None, None] * outer,
        lower=-1.0,
        upper=1.0,
        name=f"cos(phase={phase:g})",
        length_scale=length_scale,
    )


def sine(b, length_scale: float = 1.0) -> CylinderFunction:
    return cosine(b, phase=-math.pi / 2, length_scale=length_scale)


def exp_i(b, length_scale: float = 1.0) -> CylinderFunction:
    """f(x) = exp(i <x, b>)."""
    b = np.asarray(b, dtype=float)
    outer = np.outer(b, b)
    return CylinderFunction(
        dim=b.shape[0],
        value=lambda X: np.exp(1j * (X @ b)),
        gradient=lambda X: 1j * np.exp(1j * (X @ b))[:, None] * b,
        hessian=lambda X: -np.exp(1j * (X @ b))[:, None, None] * outer,
        is_complex=True,
        name="exp_i",
        length_scale=length_scale,
    )


def scaled_tanh(b, scale: float = 1.0, shift: float = 0.0, length_scale: float = 1.0) -> CylinderFunction:
    """f(x) = scale * tanh(<x, b>) + shift."""
    b = np.asarray(b, dtype=float)
    outer = np.outer(b, b)

    def d1(X):
        return scale / np.cosh(X @ b) ** 2

    return CylinderFunction(
        dim=b.shape[0],
        value=lambda X: scale * np.tanh(X @ b) + shift,
        gradient=lambda X: d1(X)[:, None] * b,
        hessian=lambda X: (-2.0 * np.tanh(X @ b) * d1(X))[:, None, None] * outer,
        lower=shift - abs(scale),
        upper=shift + abs(scale),
        name="tanh",
        length_scale=length_scale,
    )


def clamp_unit(b, length_scale: float = 1.0) -> CylinderFunction:
    """f(x) = clamp(<x, b>, 0, 1); derivatives are taken off the two kinks."""
    b = np.asarray(b, dtype=float)
    n = b.shape[0]

    def inside(X):
        s = X @ b
        return ((s > 0.0) & (s < 1.0)).astype(float)

    return CylinderFunction(
        dim=n,
        value=lambda X: np.clip(X @ b, 0.0, 1.0),
        gradient=lambda X: inside(X)[:, None] * b,
        hessian=lambda X: np.zeros((X.shape[0], n, n)),
        lower=0.0,
        upper=1.0,
        name="clamp01",
        length_scale=length_scale,
    )


def product(f: CylinderFunction, g: CylinderFunction) -> CylinderFunction:
    def value(X):
        return f.value(X) * g.value(X)

    def gradient(X):
        return f.gradient(X) * g.value(X)[:, None] + g.gradient(X) * f.value(X)[:, None]

    def hessian(X):
        fg = f.gradient(X)
        gg = g.gradient(X)
        cross = np.einsum("mi,mj->mij", fg, gg)
        return (
            f.hessian(X) * g.value(X)[:, None, None]
            + g.hessian(X) * f.value(X)[:, None, None]
            + cross
            + cross.transpose(0, 2, 1)
        )

    lower = None
    upper = None
    if f.lower is not None and g.lower is not None and f.lower >= 0 and g.lower >= 0:
        lower = f.lower * g.lower
        if f.upper is not None and g.upper is not None:
            upper = f.upper * g.upper
    elif f is g and f.lower is not None and f.upper is not None:
        lower = 0.0
        upper = max(f.lower**2, f.upper**2)
    return CylinderFunction(
        dim=f.dim,
        value=value,
        gradient=gradient,
        hessian=hessian,
        is_complex=f.is_complex or g.is_complex,
        bounded=f.bounded and g.bounded,
        lower=lower,
        upper=upper,
        name=f"({f.name})*({g.name})",
        length_scale=min(f.length_scale, g.length_scale),
    )


def combine_functions(terms: Sequence[tuple[complex | float, CylinderFunction]], c0: complex | float = 0.0) -> CylinderFunction:
    """Linear combination c0 + sum_k a_k f_k."""
    dim = terms[0][1].dim
    coefs = [a for a, _ in terms]
    funcs = [f for _, f in terms]
    is_complex = any(isinstance(a, complex) for a in coefs) or isinstance(c0, complex) or any(f.is_complex for f in funcs)
    return CylinderFunction(
        dim=dim,
        value=lambda X: c0 + sum(a * f.value(X) for a, f in terms),
        gradient=lambda X: sum(a * f.gradient(X) for a, f in terms),
        hessian=lambda X: sum(a * f.hessian(X) for a, f in terms),
        is_complex=is_complex,
        bounded=all(f.bounded for f in funcs),
        name=" + ".join(f.name for f in funcs),
        length_scale=min(f.length_scale for f in funcs),
    )


def complexify(u: CylinderFunction, v: CylinderFunction) -> CylinderFunction:
    """f = u + i v."""
    return combine_functions([(1.0, u), (1j, v)])


# ---- random families in whitened coordinates ----

def _frame(m: OuModel) -> tuple[np.ndarray, float]:
    # b = S b~ with S = Q_inf^{-1/2} makes <x, b> = <y, b~> for y ~ N(0, Id)
    S = np.asarray(spd_inv_sqrt(m.Q_inf))
    return S, 1.0 / float(np.linalg.norm(S, 2))


def random_real_function(m: OuModel, rng: np.random.Generator) -> CylinderFunction:
    """A random member of the bounded and polynomial families."""
    S, ell = _frame(m)
    n = m.dim
    kind = rng.integers(0, 4)
    b = S @ rng.standard_normal(n)
    if kind == 0:
        return linear(b, c0=float(rng.standard_normal()), length_scale=ell)
    if kind == 1:
        G = rng.standard_normal((n, n))
        return quadratic(S @ (G + G.T) @ S / 2, b=b, length_scale=ell)
    if kind == 2:
        return cosine(b, phase=float(rng.uniform(0, 2 * math.pi)), length_scale=ell)
    return product(cosine(b, length_scale=ell), linear(S @ rng.standard_normal(n), length_scale=ell))


def random_complex_quadratic(m: OuModel, rng: np.random.Generator) -> CylinderFunction:
    S, ell = _frame(m)
    n = m.dim
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    C = S @ (G + G.T) @ S / 2
    b = S @ (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    c0 = complex(rng.standard_normal(), rng.standard_normal())
    return quadratic(C, b=b, c0=c0, length_scale=ell)


def random_complex_function(m: OuModel, rng: np.random.Generator) -> CylinderFunction:
    """Random complex smooth f mixing quadratic, oscillatory and bounded parts."""
    S, ell = _frame(m)
    n = m.dim
    kind = rng.integers(0, 3)
    if kind == 0:
        return random_complex_quadratic(m, rng)
    b1 = S @ rng.standard_normal(n)
    b2 = S @ rng.standard_normal(n)
    if kind == 1:
        a = complex(rng.standard_normal(), rng.standard_normal())
        return combine_functions([(a, exp_i(b1, length_scale=ell)), (float(rng.standard_normal()), cosine(b2, length_scale=ell))], c0=0.5)
    return complexify(scaled_tanh(b1, scale=2.0, length_scale=ell), sine(b2, length_scale=ell))


# ---- H-gradient and generator ----

def d_h(m: OuModel, f: CylinderFunction, x) -> np.ndarray:
    """X-representation of the H-gradient, Q grad f(x), one row per point."""
    X = _batch(x, f.dim)
    out = f.gradient(X) @ m.Q
    return out[0] if np.ndim(x) == 1 else out


@dataclass(frozen=True)
class GeneratorTerm:
    trace_part: np.ndarray
    drift_part: np.ndarray
    weight_part: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.trace_part + self.drift_part + self.weight_part


def generator_terms(
    g: HGeometry,
    U: WeightFunction | None,
    f: CylinderFunction,
    x,
    adjoint: bool = False,
) -> GeneratorTerm:
    """The three summands of L f (or of the dual generator when ``adjoint``)."""
    m = g.model
    X = _batch(x, f.dim)
    grad = f.gradient(X)
    hess = f.hessian(X)
    drift = g.adjoint_drift if adjoint else m.A
    B = g.B_sharp if adjoint else g.B
    trace_part = 0.5 * np.einsum("ij,mji->m", m.Q, hess)
    drift_part = np.einsum("mi,mi->m", X @ drift.T, grad)
    if U is None or U.certificate == "zero":
        weight_part = np.zeros_like(trace_part)
    else:
        # [B Q grad f, Q grad U]_H = (B Q grad f) . grad U
        weight_part = np.einsum("mi,mi->m", (grad @ m.Q) @ B.T, U.gradient(X))
    return GeneratorTerm(trace_part=trace_part, drift_part=drift_part, weight_part=weight_part)


def apply_generator(
    g: HGeometry,
    U: WeightFunction | None,
    f: CylinderFunction,
    x,
    adjoint: bool = False,
) -> np.ndarray:
    """L f(x) = 1/2 Tr(Q D^2 f) + <Ax, Df> + [B D_H f, D_H U]_H."""
    total = generator_terms(g, U, f, x, adjoint).total
    return total[0] if np.ndim(x) == 1 else total


# ---- Mehler semigroup ----

@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor Gauss-Hermite up to ``max_tensor_dim``, seeded Monte Carlo above."""

    nodes_per_axis: int = 20
    max_tensor_dim: int = 4
    mc_samples: int = 100_000
    seed: int = 0
    chunk: int = 400_000

    def uses_tensor(self, dim: int) -> bool:
        return dim <= self.max_tensor_dim


def _hermite_grid(dim: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    z, w = hermegauss(k)
    w = w / math.sqrt(2.0 * math.pi)
    nodes = np.array(list(itertools.product(z, repeat=dim)))
    weights = np.prod(np.array(list(itertools.product(w, repeat=dim))), axis=1)
    return nodes, weights


def _value_oracle(f) -> Oracle:
    return f.value if isinstance(f, CylinderFunction) else f


def mehler_values(m: OuModel, f, t: float, X, quad: QuadratureSpec = QuadratureSpec()) -> tuple[np.ndarray, np.ndarray]:
    """P(t) f at each row of X: means and standard errors (zero for quadrature)."""
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t}.")
    value = _value_oracle(f)
    X = _batch(X, m.dim)
    E = matrix_exp(m.A, t)
    R = np.asarray(spd_sqrt(integrate_sandwich(m.A, m.Q, t)))
    centres = X @ E.T
    if quad.uses_tensor(m.dim):
        Z, wts = _hermite_grid(m.dim, quad.nodes_per_axis)
        Y = Z @ R
        per = max(1, quad.chunk // len(wts))
        means = np.empty(len(X), dtype=complex)
        for start in range(0, len(X), per):
            c = centres[start : start + per]
            pts = (c[:, None, :] + Y[None, :, :]).reshape(-1, m.dim)
            vals = np.asarray(value(pts)).reshape(len(c), len(wts))
            means[start : start + per] = vals @ wts
        errs = np.zeros(len(X))
    else:
        Y = standard_normals(quad.mc_samples, m.dim, quad.seed) @ R
        means = np.empty(len(X), dtype=complex)
        errs = np.empty(len(X))
        for i, c in enumerate(centres):
            vals = np.asarray(value(c + Y))
            means[i] = vals.mean()
            errs[i] = math.sqrt(float(np.var(vals.real, ddof=1) + np.var(vals.imag, ddof=1)) / len(vals))
    if np.all(means.imag == 0.0):
        means = means.real
    return means, errs


def mehler_apply(m: OuModel, f, t: float, x, quad: QuadratureSpec = QuadratureSpec()) -> McEstimate:
    """(P(t) f)(x) = E f(e^{tA} x + Z), Z ~ N(0, Q_t)."""
    means, errs = mehler_values(m, f, t, np.asarray(x, dtype=float).reshape(1, m.dim), quad)
    n = quad.nodes_per_axis**m.dim if quad.uses_tensor(m.dim) else quad.mc_samples
    mean = complex(means[0]) if np.iscomplexobj(means) else float(means[0])
    return McEstimate(mean=mean, std_error=float(errs[0]), n_samples=n, seed=None if quad.uses_tensor(m.dim) else quad.seed)


def mehler_cosine(m: OuModel, b, t: float, X, phase: float = 0.0) -> np.ndarray:
    """Closed form P(t) cos(<., b> + phase) = exp(-b^T Q_t b / 2) cos(<e^{tA} x, b> + phase)."""
    b = np.asarray(b, dtype=float)
    X = _batch(X, m.dim)
    Qt = integrate_sandwich(m.A, m.Q, t)
    return math.exp(-0.5 * b @ Qt @ b) * np.cos(X @ (matrix_exp(m.A, t).T @ b) + phase)


def chapman_kolmogorov_check(
    m: OuModel,
    f,
    s: float,
    t: float,
    points,
    quad: QuadratureSpec = QuadratureSpec(nodes_per_axis=12),
    atol: float = 1e-7,
) -> CheckReport:
    """P(t+s) f = P(t) P(s) f at the given points."""
    X = _batch(points, m.dim)
    direct, err_direct = mehler_values(m, f, t + s, X, quad)

    def inner(Y):
        return mehler_values(m, f, s, Y, quad)[0]

    nested, err_nested = mehler_values(m, inner, t, X, quad)
    resid = float(np.max(np.abs(direct - nested)))
    tol = atol + 3.0 * float(np.max(np.hypot(err_direct, err_nested)))
    return CheckReport(
        name="chapman_kolmogorov",
        kind="identity",
        passed=resid <= tol,
        residual=resid,
        tolerance=tol,
        n_samples=len(X),
        seed=quad.seed,
        details={"s": s, "t": t},
    )


def generator_derivative_check(
    g: HGeometry,
    f: CylinderFunction,
    points,
    h: float = 1e-3,
    tol: float = 1e-3,
    quad: QuadratureSpec = QuadratureSpec(),
) -> CheckReport:
    """Richardson-extrapolated (P(h) f - f) / h against the unweighted generator."""
    m = g.model
    X = _batch(points, m.dim)
    fx = f.value(X)
    d_h1 = (mehler_values(m, f, h, X, quad)[0] - fx) / h
    d_h2 = (mehler_values(m, f, h / 2, X, quad)[0] - fx) / (h / 2)
    extrapolated = 2.0 * d_h2 - d_h1
    exact = apply_generator(g, None, f, X)
    resid = float(np.max(np.abs(extrapolated - exact) / np.maximum(1.0, np.abs(exact))))
    return CheckReport(
        name="generator_time_derivative",
        kind="identity",
        passed=resid <= tol,
        residual=resid,
        tolerance=tol,
        n_samples=len(X),
        details={"h": h, "function": f.name},
    )


def default_semigroup_family(m: OuModel, rng: np.random.Generator) -> list[CylinderFunction]:
    """Sub-Markov, nonnegative, bounded and polynomial members for the Mehler suite."""
    S, ell = _frame(m)
    n = m.dim
    b1 = S @ rng.standard_normal(n)
    b2 = S @ rng.standard_normal(n)
    c = cosine(b2, length_scale=ell)
    G = rng.standard_normal((n, n))
    return [
        clamp_unit(b1, length_scale=ell),
        product(c, c),
        quadratic(S @ (G @ G.T) @ S, length_scale=ell),
        cosine(b1 + b2, phase=0.3, length_scale=ell),
    ]


def semigroup_properties_check(
    m: OuModel,
    t_grid: Sequence[float],
    family: Sequence[CylinderFunction],
    n_points: int = 1000,
    seed: int = 0,
    quad: QuadratureSpec = QuadratureSpec(nodes_per_axis=20, max_tensor_dim=2, mc_samples=4000),
    sigmas: float = DEFAULT_SIGMAS,
    p: float = 2.0,
) -> CheckReport:
    """Positivity, sub-Markov bounds, L^p contraction and invariance of P(t)."""
    X = sample_gaussian(m, n_points, seed)
    checks: list[CheckReport] = []
    for f in family:
        fx = f.value(X)
        for t in t_grid:
            Pf, err = mehler_values(m, f, t, X, quad)
            label = f"{f.name}@t={t:g}"
            if f.lower is not None and f.lower >= 0.0:
                lo = float(np.min(Pf))
                checks.append(CheckReport(
                    name=f"positivity[{label}]",
                    kind="inequality",
                    passed=lo >= -1e-12,
                    margin=lo,
                    tolerance=1e-12,
                    n_samples=n_points,
                    seed=seed,
                ))
                if f.upper is not None and f.upper <= 1.0:
                    hi = float(np.max(Pf))
                    checks.append(CheckReport(
                        name=f"sub_markov[{label}]",
                        kind="inequality",
                        passed=lo >= -1e-12 and hi <= 1.0 + 1e-12,
                        margin=min(lo, 1.0 - hi),
                        tolerance=1e-12,
                        n_samples=n_points,
                        seed=seed,
                    ))
            # |P f|^p with the inner Monte Carlo bias removed at p = 2
            lhs = np.abs(Pf) ** p
            if p == 2.0:
                lhs = lhs - err**2
            diff = lhs - np.abs(fx) ** p
            contraction = paired_identity(f"contraction[{label}]", diff, np.zeros_like(diff), seed=seed, sigmas=sigmas)
            mean_diff = float(np.mean(diff))
            contraction.kind = "inequality"
            contraction.margin = -mean_diff
            contraction.passed = mean_diff <= contraction.tolerance
            contraction.details["p"] = p
            checks.append(contraction)
            checks.append(paired_identity(f"invariance[{label}]", Pf, fx, seed=seed, sigmas=sigmas))
    return combine("mehler_semigroup", checks)
