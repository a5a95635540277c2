"""The Dirichlet forms E and E~ on the weighted measure and the checks that
tie them to the generator.

E(u, v) = -int [B D_H u, D_H v]_H dnu and E~ uses B^# in place of B. Every
check evaluates both sides on one shared SampleSet.
"""

from __future__ import annotations

import logging

import numpy as np

from .calculus import CylinderFunction, apply_generator
from .errors import DomainError
from .measure import McEstimate, SampleSet, WeightedMeasure, draw_samples
from .model import HGeometry
from .report import DEFAULT_SIGMAS, CheckReport, paired_identity, std_error_of

log = logging.getLogger(__name__)

FormValue = McEstimate

COERCIVITY_RTOL = 1e-10
LEVEL_EXCLUSION = 1e-12


def _dh(g: HGeometry, f: CylinderFunction, X: np.ndarray) -> np.ndarray:
    return f.gradient(X) @ g.model.Q


def _form_values(g: HGeometry, s: SampleSet, u: CylinderFunction, v: CylinderFunction, adjoint: bool) -> np.ndarray:
    B = g.B_sharp if adjoint else g.B
    Du = _dh(g, u, s.points)
    Dv = _dh(g, v, s.points)
    return -g.bracket(Du @ B.T, Dv) * s.weights


def dirichlet_form(
    g: HGeometry,
    w: WeightedMeasure,
    u: CylinderFunction,
    v: CylinderFunction,
    adjoint: bool = False,
    n: int = 100_000,
    seed: int = 0,
) -> FormValue:
    """Monte Carlo estimate of E(u, v), or of E~(u, v) when ``adjoint``."""
    s = draw_samples(w, n, seed)
    return McEstimate.from_values(_form_values(g, s, u, v, adjoint), seed)


def check_coercivity(
    g: HGeometry,
    w: WeightedMeasure,
    u: CylinderFunction,
    n: int = 100_000,
    seed: int = 0,
    adjoint: bool = False,
) -> CheckReport:
    """-[B D_H u, D_H u]_H = 1/2 [D_H u, D_H u]_H at every sample point."""
    s = draw_samples(w, n, seed)
    B = g.B_sharp if adjoint else g.B
    Du = _dh(g, u, s.points)
    lhs = -g.bracket(Du @ B.T, Du)
    rhs = 0.5 * g.bracket(Du, Du)
    scale = (1.0 + g.h_operator_norm(B)) * g.h_norm(Du) ** 2
    resid = np.abs(lhs - rhs)
    worst = float(np.max(resid / np.maximum(scale, 1e-300)))
    form = float(np.abs(np.mean((lhs - rhs) * s.weights)))
    return CheckReport(
        name="coercivity",
        kind="identity",
        passed=bool(np.all(resid <= COERCIVITY_RTOL * scale + 1e-300)),
        residual=worst,
        tolerance=COERCIVITY_RTOL,
        n_samples=s.n,
        seed=seed,
        details={
            "form": np.mean(lhs * s.weights),
            "half_gradient_norm": np.mean(rhs * s.weights),
            "integrated_residual": form,
            "function": u.name,
            "adjoint": adjoint,
        },
    )


def check_sector_condition(
    g: HGeometry,
    w: WeightedMeasure,
    u: CylinderFunction,
    v: CylinderFunction,
    n: int = 100_000,
    seed: int = 0,
    sigmas: float = DEFAULT_SIGMAS,
) -> CheckReport:
    """|E(u, v)| <= |B|_{L(H)} |D_H u|_{L^2(nu)} |D_H v|_{L^2(nu)}."""
    s = draw_samples(w, n, seed)
    e_vals = _form_values(g, s, u, v, adjoint=False)
    nu = g.h_norm(_dh(g, u, s.points)) ** 2 * s.weights
    nv = g.h_norm(_dh(g, v, s.points)) ** 2 * s.weights
    c = g.h_operator_norm(g.B)
    lhs = abs(np.mean(e_vals))
    mu, mv = float(np.mean(nu)), float(np.mean(nv))
    rhs = c * np.sqrt(mu * mv)
    # delta method for the product of root means
    se_rhs = 0.5 * c * (np.sqrt(mv / mu) * std_error_of(nu) if mu > 0 else 0.0) + 0.5 * c * (
        np.sqrt(mu / mv) * std_error_of(nv) if mv > 0 else 0.0
    )
    se = float(np.hypot(std_error_of(e_vals), se_rhs))
    margin = float(rhs - lhs)
    return CheckReport(
        name="sector_condition",
        kind="inequality",
        passed=margin >= -sigmas * se,
        margin=margin,
        std_error=se,
        tolerance=sigmas * se,
        n_samples=s.n,
        seed=seed,
        details={"form_modulus": lhs, "bound": rhs, "B_norm": c, "functions": [u.name, v.name]},
    )


def check_generator_duality(
    g: HGeometry,
    w: WeightedMeasure,
    u: CylinderFunction,
    v: CylinderFunction,
    n: int = 100_000,
    seed: int = 0,
    adjoint: bool = False,
    sigmas: float = DEFAULT_SIGMAS,
) -> CheckReport:
    """E(u, v) = -int (L u) v dnu, or int (L~ u) v dnu = int u (L v) dnu with ``adjoint``."""
    s = draw_samples(w, n, seed)
    X = s.points
    U = w.weight
    if adjoint:
        lhs = apply_generator(g, U, u, X, adjoint=True) * v.value(X) * s.weights
        rhs = u.value(X) * apply_generator(g, U, v, X) * s.weights
        name = "adjoint_duality"
    else:
        lhs = _form_values(g, s, u, v, adjoint=False)
        rhs = -apply_generator(g, U, u, X) * v.value(X) * s.weights
        name = "generator_duality"
    return paired_identity(name, lhs, rhs, seed=seed, sigmas=sigmas, details={"functions": [u.name, v.name]})


def check_symmetric_part(
    g: HGeometry,
    w: WeightedMeasure,
    u: CylinderFunction,
    v: CylinderFunction,
    n: int = 100_000,
    seed: int = 0,
    rtol: float = 1e-10,
) -> CheckReport:
    """E(u, v) + E~(u, v) = int [D_H u, D_H v]_H dnu and E(u, v) = E~(v, u), sample by sample."""
    s = draw_samples(w, n, seed)
    e = _form_values(g, s, u, v, adjoint=False)
    e_dual = _form_values(g, s, u, v, adjoint=True)
    e_dual_t = _form_values(g, s, v, u, adjoint=True)
    grad_pair = g.bracket(_dh(g, u, s.points), _dh(g, v, s.points)) * s.weights
    scale = float(np.mean(np.abs(e)) + np.mean(np.abs(grad_pair))) + 1e-300
    sum_res = float(np.abs(np.mean(e + e_dual - grad_pair))) / scale
    transpose_res = float(np.abs(np.mean(e - e_dual_t))) / scale
    resid = max(sum_res, transpose_res)
    return CheckReport(
        name="symmetric_part",
        kind="identity",
        passed=resid <= rtol,
        residual=resid,
        tolerance=rtol,
        n_samples=s.n,
        seed=seed,
        details={"sum_residual": sum_res, "transpose_residual": transpose_res},
    )


def check_dirichlet_operator(
    g: HGeometry,
    w: WeightedMeasure,
    u: CylinderFunction,
    n: int = 100_000,
    seed: int = 0,
    sigmas: float = DEFAULT_SIGMAS,
) -> CheckReport:
    """int (L u)(u - 1)^+ dnu <= 0 through int_{u>1} [B D_H u, D_H u]_H dnu."""
    if u.is_complex:
        raise DomainError("The Dirichlet-operator inequality needs a real function.")
    s = draw_samples(w, n, seed)
    X = s.points
    ux = u.value(X)
    above = ux - 1.0 > LEVEL_EXCLUSION
    Du = _dh(g, u, X)
    vals = np.where(above, g.bracket(Du @ g.B.T, Du), 0.0) * s.weights
    est = McEstimate.from_values(vals, seed)
    generator_side = McEstimate.from_values(apply_generator(g, w.weight, u, X) * np.where(above, ux - 1.0, 0.0) * s.weights, seed)
    return CheckReport(
        name="dirichlet_operator",
        kind="inequality",
        passed=est.mean <= sigmas * est.std_error,
        margin=-float(est.mean),
        std_error=est.std_error,
        tolerance=sigmas * est.std_error,
        n_samples=s.n,
        seed=seed,
        details={
            "form_side": est.mean,
            "generator_side": generator_side.mean,
            "generator_side_std_error": generator_side.std_error,
            "fraction_above_one": float(np.mean(above)),
            "function": u.name,
        },
    )
