"""Gaussian sampling, convex weights U, the weighted measure
nu_inf = e^{-U} mu_inf and Monte Carlo integration against it.

nu_inf is kept unnormalized. Integrals against it are always computed by
sampling mu_inf and multiplying by the importance weight e^{-U}.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import AccuracyError, DefinitenessError, DimensionError, EvaluationError
from .linalg import require_square, spd_sqrt
from .model import HGeometry, OuModel
from .report import DEFAULT_SIGMAS, CheckReport, paired_identity, std_error_of

if TYPE_CHECKING:
    from .calculus import CylinderFunction

log = logging.getLogger(__name__)

BLOCK_SIZE = 65_536

Oracle = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class McEstimate:
    mean: float | complex
    std_error: float
    n_samples: int
    seed: int | None

    @classmethod
    def from_values(cls, values: np.ndarray, seed: int | None) -> McEstimate:
        values = np.asarray(values)
        mean = complex(values.mean()) if np.iscomplexobj(values) else float(values.mean())
        return cls(mean=mean, std_error=std_error_of(values), n_samples=int(values.shape[0]), seed=seed)

    @property
    def value(self) -> float | complex:
        return self.mean

    def to_dict(self) -> dict:
        mean = [self.mean.real, self.mean.imag] if isinstance(self.mean, complex) else self.mean
        return {"mean": mean, "std_error": self.std_error, "n_samples": self.n_samples, "seed": self.seed}


# ---- sampling ----

def _block_normals(seed: int, block: int, rows: int, dim: int) -> np.ndarray:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(block,))
    return np.random.default_rng(ss).standard_normal((rows, dim))


def standard_normals(n: int, dim: int, seed: int, workers: int = 1) -> np.ndarray:
    """n x dim standard normals in fixed-size blocks with per-block seeds.

    The result depends only on (n, dim, seed), never on ``workers``.
    """
    if n < 1:
        raise DimensionError(f"Sample count must be positive, got {n}.")
    sizes = [min(BLOCK_SIZE, n - start) for start in range(0, n, BLOCK_SIZE)]
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda item: _block_normals(seed, item[0], item[1], dim), enumerate(sizes)))
    else:
        blocks = [_block_normals(seed, b, rows, dim) for b, rows in enumerate(sizes)]
    return np.concatenate(blocks, axis=0)


def sample_gaussian(m: OuModel, n: int, seed: int, workers: int = 1) -> np.ndarray:
    """i.i.d. draws from N(0, Q_inf), one per row."""
    return standard_normals(n, m.dim, seed, workers) @ spd_sqrt(m.Q_inf)


# ---- weights ----

@dataclass(frozen=True)
class WeightFunction:
    """Convex weight U with a gradient oracle (both vectorized over rows)."""

    dim: int
    value: Oracle
    gradient: Oracle
    certificate: str = "user-asserted"
    minimum: float = 0.0
    name: str = "U"
    length_scale: float = 1.0
    check_seed: int = field(default=0, repr=False)

    def __post_init__(self) -> None:
        rng = np.random.default_rng(self.check_seed)
        x = self.length_scale * rng.standard_normal((100, self.dim))
        y = self.length_scale * rng.standard_normal((100, self.dim))
        mid = self.value(0.5 * (x + y))
        avg = 0.5 * (self.value(x) + self.value(y))
        if np.any(mid > avg + 1e-10 * np.maximum(1.0, np.abs(avg))):
            raise AccuracyError(f"Weight {self.name} fails the midpoint convexity check.")
        pts = x[:20]
        h = 1e-5 * self.length_scale
        eye = np.eye(self.dim) * h
        fd = np.stack(
            [(self.value(pts + eye[i]) - self.value(pts - eye[i])) / (2 * h) for i in range(self.dim)],
            axis=1,
        )
        grad = self.gradient(pts)
        err = np.abs(fd - grad).max(axis=1)
        if np.any(err > 1e-6 * (1.0 + np.abs(grad).max(axis=1))):
            raise AccuracyError(f"Gradient oracle of weight {self.name} disagrees with finite differences.")

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.value(np.atleast_2d(X))


def zero_weight(dim: int) -> WeightFunction:
    return WeightFunction(
        dim=dim,
        value=lambda X: np.zeros(X.shape[0]),
        gradient=lambda X: np.zeros_like(X, dtype=float),
        certificate="zero",
        name="0",
    )


def quadratic_weight(M, length_scale: float = 1.0) -> WeightFunction:
    """U(x) = x^T M x with M positive semidefinite."""
    M = require_square(M, "M")
    M = 0.5 * (M + M.T)
    if np.linalg.eigvalsh(M)[0] < -1e-12 * max(1.0, np.abs(M).max()):
        raise DefinitenessError("Quadratic weight matrix M must be positive semidefinite.")
    return WeightFunction(
        dim=M.shape[0],
        value=lambda X: np.einsum("mi,ij,mj->m", X, M, X),
        gradient=lambda X: 2.0 * X @ M,
        certificate="quadratic",
        name="quadratic",
        length_scale=length_scale,
    )


def logcosh_weight(b, length_scale: float = 1.0) -> WeightFunction:
    """U(x) = log cosh(<x, b>), convex and non-quadratic."""
    b = np.asarray(b, dtype=float)

    def value(X: np.ndarray) -> np.ndarray:
        s = X @ b
        return np.logaddexp(s, -s) - np.log(2.0)

    return WeightFunction(
        dim=b.shape[0],
        value=value,
        gradient=lambda X: np.tanh(X @ b)[:, None] * b[None, :],
        certificate="logcosh",
        name="logcosh",
        length_scale=length_scale,
    )


# ---- weighted measure ----

@dataclass(frozen=True)
class WeightedMeasure:
    model: OuModel
    weight: WeightFunction
    workers: int = 1

    def __post_init__(self) -> None:
        if self.weight.dim != self.model.dim:
            raise DimensionError(f"Weight dimension {self.weight.dim} differs from model dimension {self.model.dim}.")
        est = self.mass(4096, seed=0)
        if not (np.isfinite(est.mean) and est.mean > 0.0):
            raise DefinitenessError(f"Estimated mass of e^-U dmu_inf is {est.mean!r}.")

    def mass(self, n: int, seed: int) -> McEstimate:
        return integrate_nu(self, lambda X: np.ones(X.shape[0]), n, seed)


@dataclass(frozen=True)
class SampleSet:
    """Shared points x_i ~ mu_inf and importance weights e^{-U(x_i)}."""

    points: np.ndarray
    weights: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.points.shape[0]


def draw_samples(w: WeightedMeasure, n: int, seed: int, workers: int | None = None) -> SampleSet:
    X = sample_gaussian(w.model, n, seed, w.workers if workers is None else workers)
    weights = np.exp(-w.weight(X))
    return SampleSet(points=X, weights=weights, seed=seed)


def _checked(values: np.ndarray, X: np.ndarray) -> np.ndarray:
    bad = ~np.isfinite(values)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise EvaluationError(X[i].tolist(), values[i])
    return values


def integrate_nu(w: WeightedMeasure, g: Oracle, n: int, seed: int) -> McEstimate:
    """Estimate int g e^{-U} dmu_inf (unnormalized)."""
    s = draw_samples(w, n, seed)
    values = _checked(np.asarray(g(s.points)), s.points)
    return McEstimate.from_values(values * s.weights, seed)


def check_ibp(
    w: WeightedMeasure,
    g: HGeometry,
    f: CylinderFunction,
    h,
    n: int,
    seed: int,
    sigmas: float = DEFAULT_SIGMAS,
) -> CheckReport:
    """int [D_H f, h]_H dnu = int f <x, Q_inf^{-1} V^# h> dnu + int f [D_H U, h]_H dnu."""
    h = np.asarray(h, dtype=float)
    s = draw_samples(w, n, seed)
    X = s.points
    grad = f.gradient(X)
    fx = f.value(X)
    lhs = (grad @ h) * s.weights  # [Q grad f, h]_H = grad f . h
    h_hat = g.gram_inf_inv @ (g.V_sharp @ h)
    rhs = fx * (X @ h_hat + w.weight.gradient(X) @ h) * s.weights
    return paired_identity(
        "weighted_ibp",
        lhs,
        rhs,
        seed=seed,
        sigmas=sigmas,
        details={"function": f.name, "weight": w.weight.name},
    )
