"""Experiment configuration: TOML files validated with pydantic, plus run
defaults taken from the environment.

Grammar (every section optional except [model]):

    [model]
    builtin = "rotation"        # rotation | selfadjoint | diagonal | random
    alpha = 0.5                 # rotation only
    dim = 2                     # selfadjoint and random
    seed = 0                    # random only
    # or:  A = [[-1.0, 0.5], [-0.5, -1.0]]  and  Q = [[2.0, 0.0], [0.0, 2.0]]
    # or:  wiener_modes = 8

    [weight]
    kind = "none"               # none | quadratic | logcosh
    M = [[1.0, 0.0], [0.0, 1.0]]
    b = [1.0, 0.0]

    [run]
    p = [1.5, 2.0, 4.0]
    samples = 100000
    seed = 0
    suites = ["model", "forms", "sector", "wiener"]
    functions = 5
    galerkin_degree = 2
    fov_resolution = 720
    workers = 1

    [tolerances]
    sigmas = 3.0
    pointwise = 1e-9
    coercivity = 1e-10
    identity = 1e-9
    lyapunov = 1e-10             # Lyapunov solve vs Kronecker oracle
    sandwich = 1e-8              # Q_t integration vs quadrature
    nystrom = 1e-4               # Brownian eigenvalues
    trace_gap = 1e-3             # added to the tail bound of the Wiener trace
    fov = 1e-8                   # field-of-values containment
    roundoff = 1e-12
"""

from __future__ import annotations

import os
import re
import tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .linalg import require_spd, require_stable
from .measure import WeightFunction, logcosh_weight, quadratic_weight, zero_weight
from .model import BUILTIN_MODELS, OuModel, build_model, builtin_model

SUITES = ("model", "forms", "sector", "wiener")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSection(_Section):
    builtin: Literal["rotation", "selfadjoint", "diagonal", "random"] | None = None
    alpha: float = 0.5
    dim: int = Field(default=2, ge=1, le=12)
    seed: int = 0
    A: list[list[float]] | None = None
    Q: list[list[float]] | None = None
    wiener_modes: int | None = Field(default=None, ge=1, le=12)

    @field_validator("A")
    @classmethod
    def _stable(cls, v):
        if v is not None:
            require_stable(v, "A")
        return v

    @field_validator("Q")
    @classmethod
    def _spd(cls, v):
        if v is not None:
            require_spd(v, "Q")
        return v

    @model_validator(mode="after")
    def _one_source(self):
        explicit = self.A is not None or self.Q is not None
        sources = [self.builtin is not None, explicit, self.wiener_modes is not None]
        if sum(sources) != 1:
            raise ValueError("give exactly one of builtin, A/Q or wiener_modes")
        if explicit:
            if self.A is None or self.Q is None:
                raise ValueError("A and Q must be given together")
            if np.shape(self.A) != np.shape(self.Q):
                raise ValueError(f"dimension mismatch: A is {np.shape(self.A)}, Q is {np.shape(self.Q)}")
        return self

    @property
    def dimension(self) -> int:
        if self.A is not None:
            return len(self.A)
        if self.wiener_modes is not None:
            return self.wiener_modes
        if self.builtin in ("rotation", "diagonal"):
            return 2
        return self.dim


class WeightSection(_Section):
    kind: Literal["none", "quadratic", "logcosh"] = "none"
    M: list[list[float]] | None = None
    b: list[float] | None = None

    @model_validator(mode="after")
    def _needs_data(self):
        if self.kind == "quadratic" and self.M is None:
            raise ValueError("quadratic weight needs M")
        if self.kind == "logcosh" and self.b is None:
            raise ValueError("logcosh weight needs b")
        return self


class RunSection(_Section):
    p: list[float] = Field(default_factory=lambda: [2.0], min_length=1)
    samples: int = Field(default=100_000, ge=100)
    seed: int = Field(default=0, ge=0)
    suites: list[Literal["model", "forms", "sector", "wiener"]] = Field(default_factory=lambda: list(SUITES))
    functions: int = Field(default=5, ge=1)
    galerkin_degree: int = Field(default=2, ge=1, le=4)
    fov_resolution: int = Field(default=720, ge=8)
    workers: int = Field(default=1, ge=1)

    @field_validator("p")
    @classmethod
    def _p_range(cls, v):
        for p in v:
            if not p > 1.0:
                raise ValueError(f"p must exceed 1, got {p:g}")
        return v


class ToleranceSection(_Section):
    sigmas: float = Field(default=3.0, gt=0.0)
    pointwise: float = Field(default=1e-9, gt=0.0)
    coercivity: float = Field(default=1e-10, gt=0.0)
    identity: float = Field(default=1e-9, gt=0.0)
    lyapunov: float = Field(default=1e-10, gt=0.0)
    sandwich: float = Field(default=1e-8, gt=0.0)
    nystrom: float = Field(default=1e-4, gt=0.0)
    trace_gap: float = Field(default=1e-3, gt=0.0)
    fov: float = Field(default=1e-8, gt=0.0)
    # relative roundoff allowed on top of the sigma band in range checks
    roundoff: float = Field(default=1e-12, gt=0.0)


class ExperimentConfig(_Section):
    model: ModelSection
    weight: WeightSection = Field(default_factory=WeightSection)
    run: RunSection = Field(default_factory=RunSection)
    tolerances: ToleranceSection = Field(default_factory=ToleranceSection)

    @model_validator(mode="after")
    def _dimensions(self):
        n = self.model.dimension
        if self.weight.M is not None and np.shape(self.weight.M) != (n, n):
            raise ValueError(f"dimension mismatch: weight M is {np.shape(self.weight.M)}, model has n={n}")
        if self.weight.b is not None and len(self.weight.b) != n:
            raise ValueError(f"dimension mismatch: weight b has {len(self.weight.b)} entries, model has n={n}")
        return self

    def build_model(self) -> OuModel:
        m = self.model
        if m.builtin is not None:
            return builtin_model(m.builtin, alpha=m.alpha, dim=m.dim, seed=m.seed)
        if m.A is not None:
            return build_model(m.A, m.Q)
        from .wiener import assemble_truncation, wiener_q_infty

        trunc = assemble_truncation(m.wiener_modes)
        return OuModel(A=trunc.A, Q=trunc.Q, Q_inf=wiener_q_infty(trunc)[0])

    def build_weight(self, model: OuModel) -> WeightFunction:
        ell = float(np.sqrt(np.linalg.eigvalsh(model.Q_inf)[0]))
        w = self.weight
        if w.kind == "quadratic":
            return quadratic_weight(w.M, length_scale=ell)
        if w.kind == "logcosh":
            return logcosh_weight(w.b, length_scale=ell)
        return zero_weight(model.dim)


# ---- parsing ----

def _locate(text: str, loc: tuple[Any, ...]) -> int | None:
    """Best-effort source line of a validation error location."""
    keys = [str(k) for k in loc if isinstance(k, str)]
    if not keys:
        return None
    lines = text.splitlines()
    start = 0
    if len(keys) > 1:
        header = re.compile(rf"^\s*\[\s*{re.escape(keys[0])}\s*\]")
        for i, line in enumerate(lines):
            if header.match(line):
                start = i
                break
        else:
            return None
        key = keys[1]
    else:
        key = keys[0]
        header = re.compile(rf"^\s*\[\s*{re.escape(key)}\s*\]")
        for i, line in enumerate(lines):
            if header.match(line):
                return i + 1
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i in range(start, len(lines)):
        if i > start and lines[i].lstrip().startswith("["):
            if not lines[i].lstrip().startswith("[["):
                break
        if pattern.match(lines[i]):
            return i + 1
    return start + 1 if len(keys) > 1 else None


def _messages(exc: ValidationError, text: str) -> list[str]:
    out = []
    for err in exc.errors():
        loc = tuple(err.get("loc", ()))
        path = ".".join(str(k) for k in loc) or "<root>"
        msg = str(err.get("msg", "")).removeprefix("Value error, ")
        line = _locate(text, loc)
        where = f"{path} (line {line})" if line else path
        out.append(f"{where}: {msg}")
    return out


def parse_config(text: str, defaults: RunDefaults | None = None) -> ExperimentConfig:
    """Validate TOML experiment text; raise ConfigError listing every problem."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"syntax: {exc}"]) from exc
    if defaults is not None:
        run = raw.setdefault("run", {})
        if isinstance(run, dict):
            run.setdefault("seed", defaults.seed)
            run.setdefault("samples", defaults.samples)
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_messages(exc, text)) from exc


def load_config(path: str | Path, defaults: RunDefaults | None = None) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), defaults)


def default_config(builtin: str = "rotation", defaults: RunDefaults | None = None) -> ExperimentConfig:
    if builtin not in BUILTIN_MODELS:
        raise ConfigError([f"model.builtin: unknown model {builtin!r}"])
    d = defaults or RunDefaults()
    return ExperimentConfig(model=ModelSection(builtin=builtin), run=RunSection(seed=d.seed, samples=d.samples))


# ---- environment ----

@dataclass
class RunDefaults:
    seed: int = 0
    samples: int = 100_000
    out: Path | None = None


def load_defaults() -> RunDefaults:
    """Run defaults from OU_SECTOR_* env vars, with .env fallback."""
    # Try ~/.config/ou-sector/.env then cwd .env
    config_env = Path.home() / ".config" / "ou-sector" / ".env"
    if config_env.exists():
        load_dotenv(config_env)
    load_dotenv()

    def read_int(name: str, fallback: int) -> int:
        val = os.environ.get(name)
        if not val:
            return fallback
        try:
            return int(val)
        except ValueError:
            raise ConfigError([f"{name}: expected an integer, got {val!r}"]) from None

    return RunDefaults(
        seed=read_int("OU_SECTOR_SEED", 0),
        samples=read_int("OU_SECTOR_SAMPLES", 100_000),
        out=Path(os.environ["OU_SECTOR_OUT"]) if os.environ.get("OU_SECTOR_OUT") else None,
    )
