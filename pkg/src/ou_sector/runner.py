"""Run an ExperimentConfig: execute the selected suites in dependency order
and collect their CheckReports into one RunReport."""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__
from .calculus import (
    chapman_kolmogorov_check,
    cosine,
    default_semigroup_family,
    generator_derivative_check,
    random_complex_function,
    random_real_function,
    scaled_tanh,
    semigroup_properties_check,
)
from .config import ExperimentConfig
from .errors import OuSectorError
from .forms import (
    check_coercivity,
    check_dirichlet_operator,
    check_generator_duality,
    check_sector_condition,
    check_symmetric_part,
)
from .linalg import (
    integrate_sandwich,
    lyapunov_kron,
    matrix_exp,
    sandwich_quadrature,
    spd_inv_sqrt,
    spd_sqrt,
    spectral_gap,
)
from .measure import WeightedMeasure, check_ibp, sample_gaussian
from .model import HGeometry, OuModel, check_rkhs_constant, h_geometry, sector_params
from .report import CheckReport, combine, jsonable
from .sector import (
    check_galerkin_sector,
    check_numerical_range,
    check_pointwise_identities,
    check_sector_constants,
    field_of_values,
    galerkin_matrix,
)
from .utils import derive_seed
from .wiener import (
    TRACE_LIMIT,
    classical_eigen,
    trace_sequence,
    trace_tail_bound,
    wiener_sector_pipeline,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
STATISTICAL_SUITES = ("forms", "sector", "wiener")
GALERKIN_MAX_DIM = 3


@dataclass
class RunReport:
    schema_version: int
    tool_version: str
    config: dict[str, Any]
    derived: dict[str, Any]
    suites: list[CheckReport] = field(default_factory=list)
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def checks(self) -> list[CheckReport]:
        out: list[CheckReport] = []
        for s in self.suites:
            out.extend(s.flatten())
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "config": jsonable(self.config),
            "derived": jsonable(self.derived),
            "suites": [s.to_dict() for s in self.suites],
            "timing": dict(self.timing),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunReport:
        return cls(
            schema_version=data["schema_version"],
            tool_version=data["tool_version"],
            config=data["config"],
            derived=data["derived"],
            suites=[CheckReport.from_dict(s) for s in data.get("suites", [])],
            timing=data.get("timing", {}),
        )


@dataclass
class _Context:
    config: ExperimentConfig
    model: OuModel
    geometry: HGeometry
    measure: WeightedMeasure
    derived: dict[str, Any]


def _derive(m: OuModel, g: HGeometry, p_list: list[float]) -> dict[str, Any]:
    return {
        "dim": m.dim,
        "A": m.A,
        "Q": m.Q,
        "Q_inf": m.Q_inf,
        "B": g.B,
        "gamma": g.gamma,
        "spectral_gap": spectral_gap(m.A),
        "sector": {
            f"{p:g}": {"theta": sector_params(g, p).theta_p, "C_theta": sector_params(g, p).C_theta} for p in p_list
        },
    }


# ---- suites ----

def _model_suite(ctx: _Context, seed: int) -> CheckReport:
    m, g = ctx.model, ctx.geometry
    tols = ctx.config.tolerances
    tol = tols.identity
    checks = [g.check_drift_algebra(seed=seed, tol=tol), check_sector_constants(g, ctx.config.run.p, tol=tol)]
    scale = float(np.abs(m.Q_inf).max())
    if m.dim <= 8:
        res = float(np.abs(lyapunov_kron(m.A, m.Q) - m.Q_inf).max()) / scale
        checks.append(CheckReport(name="lyapunov_kronecker", kind="identity", passed=res <= tols.lyapunov, residual=res, tolerance=tols.lyapunov))
    T = 50.0 / spectral_gap(m.A)
    res = float(np.abs(integrate_sandwich(m.A, m.Q, T) - m.Q_inf).max()) / scale
    checks.append(CheckReport(
        name="lyapunov_vs_sandwich", kind="identity", passed=res <= tols.sandwich, residual=res, tolerance=tols.sandwich, details={"T": T}
    ))
    Qt = integrate_sandwich(m.A, m.Q, 1.0)
    res = float(np.abs(Qt - sandwich_quadrature(m.A, m.Q, 1.0)).max()) / float(np.abs(Qt).max())
    checks.append(CheckReport(name="sandwich_vs_quadrature", kind="identity", passed=res <= tols.sandwich, residual=res, tolerance=tols.sandwich))
    checks.append(_sqrt_drift_check(m, tol=tols.sandwich))
    checks.append(check_rkhs_constant(g, seed=seed, tol=tol))
    return combine("model", checks)


def _sqrt_drift_check(m: OuModel, t: float = 1.0, tol: float = 1e-8) -> CheckReport:
    """Drift -R and diffusion R with R = Q_inf^{1/2}.

    Integration gives Q_t = (Id - e^{-2tR}) / 2. The relation Q_t = Q_inf(Id - e^{tA})
    is only reported, never asserted.
    """
    R = np.asarray(spd_sqrt(m.Q_inf))
    Qt = integrate_sandwich(-R, R, t)
    scale = float(np.abs(Qt).max())
    res = float(np.abs(Qt - sandwich_quadrature(-R, R, t)).max()) / scale
    closed = 0.5 * (np.eye(m.dim) - matrix_exp(-2.0 * R, t))
    printed = m.Q_inf @ (np.eye(m.dim) - matrix_exp(-R, t))
    return CheckReport(
        name="sqrt_drift_sandwich",
        kind="identity",
        passed=res <= tol,
        residual=res,
        tolerance=tol,
        details={
            "closed_form_residual": float(np.abs(Qt - closed).max()) / scale,
            "printed_relation_residual": float(np.abs(Qt - printed).max()) / scale,
        },
    )


def _forms_suite(ctx: _Context, seed: int) -> CheckReport:
    cfg = ctx.config
    m, g, w = ctx.model, ctx.geometry, ctx.measure
    n, sig = cfg.run.samples, cfg.tolerances.sigmas
    rng = np.random.default_rng(derive_seed(seed, "forms", "functions"))
    checks: list[CheckReport] = []
    for i in range(cfg.run.functions):
        s = derive_seed(seed, "forms", i)
        u = random_real_function(m, rng)
        v = random_real_function(m, rng)
        coercivity = check_coercivity(g, w, u, n, s)
        coercivity.passed = coercivity.passed and coercivity.residual <= cfg.tolerances.coercivity
        checks.append(coercivity)
        checks.append(check_symmetric_part(g, w, u, v, n, s, rtol=cfg.tolerances.identity))
        checks.append(check_generator_duality(g, w, u, v, n, s, sigmas=sig))
        checks.append(check_generator_duality(g, w, u, v, n, s, adjoint=True, sigmas=sig))
        checks.append(check_sector_condition(g, w, u, v, n, s, sigmas=sig))
        h = np.asarray(spd_sqrt(m.Q_inf)) @ rng.standard_normal(m.dim)
        checks.append(check_ibp(w, g, u, h, n, s, sigmas=sig))
        # h = B Q x* lies in the domain of the adjoint of V
        checks.append(check_ibp(w, g, v, g.B @ (m.Q @ rng.standard_normal(m.dim)), n, s, sigmas=sig))
    S = np.asarray(spd_inv_sqrt(m.Q_inf))
    ell = 1.0 / float(np.linalg.norm(S, 2))
    b = S @ rng.standard_normal(m.dim)
    checks.append(check_dirichlet_operator(g, w, scaled_tanh(b, scale=2.0, length_scale=ell), n, derive_seed(seed, "dirichlet"), sigmas=sig))
    checks.append(_mehler_suite(ctx, derive_seed(seed, "mehler")))
    return combine("forms", checks)


def _mehler_suite(ctx: _Context, seed: int) -> CheckReport:
    m, g = ctx.model, ctx.geometry
    rng = np.random.default_rng(seed)
    family = default_semigroup_family(m, rng)
    checks = [semigroup_properties_check(m, (0.1, 1.0), family, n_points=500, seed=seed, sigmas=ctx.config.tolerances.sigmas)]
    X = sample_gaussian(m, 5, seed)
    S = np.asarray(spd_inv_sqrt(m.Q_inf))
    f = cosine(0.5 * (S @ rng.standard_normal(m.dim)), phase=0.2, length_scale=1.0 / float(np.linalg.norm(S, 2)))
    if m.dim <= 2:
        checks.append(chapman_kolmogorov_check(m, f, 0.3, 0.4, X))
        checks.append(generator_derivative_check(g, f, X, h=1e-3 / max(1.0, float(np.linalg.norm(m.A, 2)))))
    return combine("mehler", checks)


def _sector_suite(ctx: _Context, seed: int) -> tuple[CheckReport, dict[str, Any]]:
    cfg = ctx.config
    m, g, w = ctx.model, ctx.geometry, ctx.measure
    n, sig = cfg.run.samples, cfg.tolerances.sigmas
    rng = np.random.default_rng(derive_seed(seed, "sector", "functions"))
    checks: list[CheckReport] = []
    for i in range(cfg.run.functions):
        f = random_complex_function(m, rng)
        X = sample_gaussian(m, 100, derive_seed(seed, "points", i))
        for p in cfg.run.p:
            if p >= 2.0:
                r = check_pointwise_identities(g, f, p, X)
                r.passed = r.passed and r.residual is not None and r.residual <= cfg.tolerances.pointwise
                checks.append(r)
            checks.append(check_numerical_range(
                g, w, f, p, n, derive_seed(seed, "range", i, p), sigmas=sig, roundoff=cfg.tolerances.roundoff
            ).to_report())
    extras: dict[str, Any] = {}
    if m.dim <= GALERKIN_MAX_DIM:
        deg = cfg.run.galerkin_degree
        gs = derive_seed(seed, "galerkin")
        checks.append(check_galerkin_sector(g, w, deg, n, gs, resolution=cfg.run.fov_resolution, tol=cfg.tolerances.fov))
        M, G = galerkin_matrix(g, w, deg, n, gs, representation="form")
        fov = field_of_values(M, G, C_theta=sector_params(g, 2.0).C_theta, resolution=cfg.run.fov_resolution, tol=cfg.tolerances.fov)
        extras["fov_boundary"] = [[z.real, z.imag] for z in fov.boundary]
    return combine("sector", checks), extras


def _wiener_suite(ctx: _Context, seed: int) -> CheckReport:
    cfg = ctx.config
    N = cfg.model.wiener_modes or 8
    pipeline = wiener_sector_pipeline(
        N, cfg.run.p, cfg.run.samples, seed, n_functions=min(cfg.run.functions, 3), sigmas=cfg.tolerances.sigmas,
        roundoff=cfg.tolerances.roundoff,
    )
    spectrum = classical_eigen(2000, 5)
    eig = CheckReport(
        name="classical_eigenvalues",
        kind="identity",
        passed=bool(spectrum.errors.max() <= cfg.tolerances.nystrom),
        residual=float(spectrum.errors.max()),
        tolerance=cfg.tolerances.nystrom,
        details={"computed": spectrum.computed, "analytic": spectrum.analytic},
    )
    traces = trace_sequence(range(1, N + 1))
    gap = abs(traces[-1] - TRACE_LIMIT)
    monotone = all(b > a for a, b in zip(traces, traces[1:]))
    trace_tol = cfg.tolerances.trace_gap + trace_tail_bound(N)
    trace = CheckReport(
        name="trace_limit",
        kind="identity",
        passed=monotone and gap <= trace_tol and traces[-1] <= TRACE_LIMIT,
        residual=gap,
        tolerance=trace_tol,
        details={"traces": traces, "limit": TRACE_LIMIT},
    )
    return combine("wiener", [pipeline, eig, trace])


def _guarded(name: str, fn: Callable[[], CheckReport]) -> CheckReport:
    try:
        return fn()
    except OuSectorError as exc:
        log.warning("Suite %s aborted: %s", name, exc)
        return CheckReport(name=name, kind="suite", passed=False, notes=[f"{type(exc).__name__}: {exc}"])


def run(config: ExperimentConfig, on_suite: Callable[[str], None] | None = None) -> RunReport:
    """Execute the selected suites; failures are recorded, never raised."""
    started = time.perf_counter()
    model = config.build_model()
    geometry = h_geometry(model)
    measure = WeightedMeasure(model, config.build_weight(model), workers=config.run.workers)
    derived = _derive(model, geometry, config.run.p)
    derived["weight"] = measure.weight.name
    ctx = _Context(config=config, model=model, geometry=geometry, measure=measure, derived=derived)
    report = RunReport(
        schema_version=SCHEMA_VERSION,
        tool_version=__version__,
        config=config.model_dump(),
        derived=derived,
    )
    base = config.run.seed
    extras: dict[str, Any] = {}

    def sector(seed: int) -> CheckReport:
        result, more = _sector_suite(ctx, seed)
        extras.update(more)
        return result

    runners: dict[str, Callable[[int], CheckReport]] = {
        "model": lambda s: _model_suite(ctx, s),
        "forms": lambda s: _forms_suite(ctx, s),
        "sector": sector,
        "wiener": lambda s: _wiener_suite(ctx, s),
    }
    for name in ("model", "forms", "sector", "wiener"):
        if name not in config.run.suites:
            continue
        if on_suite is not None:
            on_suite(name)
        t0 = time.perf_counter()
        seed = derive_seed(base, name)
        result = _guarded(name, lambda: runners[name](seed))
        if not result.passed and name in STATISTICAL_SUITES and result.children:
            retry_seed = derive_seed(base, name, "retry")
            log.info("Suite %s failed; re-running with seed %d", name, retry_seed)
            second = _guarded(name, lambda: runners[name](retry_seed))
            result.name = f"{name}#1"
            second.name = f"{name}#2"
            result = CheckReport(
                name=name,
                kind="suite",
                passed=second.passed,
                children=[result, second],
                notes=[f"re-run with seed {retry_seed} after a failed first pass"],
            )
        report.suites.append(result)
        report.timing[name] = round(time.perf_counter() - t0, 3)
        log.info("Suite %s: %s (%.1fs)", name, "pass" if result.passed else "FAIL", report.timing[name])
    derived.update(extras)
    report.timing["total"] = round(time.perf_counter() - started, 3)
    return report

