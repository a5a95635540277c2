"""CheckReport: the structured outcome of one verification, and the
paired-sample statistics every Monte Carlo check is decided with."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

DEFAULT_SIGMAS = 3.0


@dataclass
class CheckReport:
    """Identity residual or inequality margin, with its Monte Carlo error."""

    name: str
    kind: str  # identity | inequality | statistical | suite
    passed: bool
    residual: float | None = None
    margin: float | None = None
    std_error: float = 0.0
    tolerance: float = 0.0
    n_samples: int = 0
    seed: int | None = None
    details: dict[str, Any] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    children: list[CheckReport] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return jsonable(asdict(self))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CheckReport:
        data = dict(data)
        data["children"] = [cls.from_dict(c) for c in data.get("children", [])]
        return cls(**data)

    def flatten(self) -> list[CheckReport]:
        """Leaf checks in execution order."""
        if not self.children:
            return [self]
        out: list[CheckReport] = []
        for child in self.children:
            out.extend(child.flatten())
        return out


def combine(name: str, reports: list[CheckReport], notes: list[str] | None = None) -> CheckReport:
    return CheckReport(
        name=name,
        kind="suite",
        passed=all(r.passed for r in reports),
        children=list(reports),
        notes=list(notes or []),
    )


def jsonable(obj: Any) -> Any:
    # json-safe: numpy scalars to python, complex to [re, im]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def std_error_of(values: np.ndarray) -> float:
    """Sample standard deviation over sqrt(n); complex values pool both parts."""
    values = np.asarray(values)
    n = values.shape[0]
    if n < 2:
        return 0.0
    if np.iscomplexobj(values):
        var = np.var(values.real, ddof=1) + np.var(values.imag, ddof=1)
    else:
        var = np.var(values, ddof=1)
    return math.sqrt(float(var) / n)


def paired_identity(
    name: str,
    lhs: np.ndarray,
    rhs: np.ndarray,
    *,
    seed: int | None,
    sigmas: float = DEFAULT_SIGMAS,
    atol: float = 1e-12,
    details: dict[str, Any] | None = None,
) -> CheckReport:
    """Decide E[lhs] = E[rhs] from per-sample values on one shared sample set.

    Passes iff |mean(lhs - rhs)| <= sigmas * se(lhs - rhs) + atol * scale.
    """
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    diff = lhs - rhs
    mean_diff = complex(np.mean(diff)) if np.iscomplexobj(diff) else float(np.mean(diff))
    se = std_error_of(diff)
    scale = max(float(np.mean(np.abs(lhs))), float(np.mean(np.abs(rhs))), 1e-300)
    tol = sigmas * se + atol * scale
    info = {
        "lhs": np.mean(lhs),
        "rhs": np.mean(rhs),
        "lhs_std_error": std_error_of(lhs),
        "rhs_std_error": std_error_of(rhs),
    }
    info.update(details or {})
    return CheckReport(
        name=name,
        kind="statistical",
        passed=bool(abs(mean_diff) <= tol),
        residual=float(abs(mean_diff)),
        std_error=se,
        tolerance=tol,
        n_samples=int(diff.shape[0]),
        seed=seed,
        details=info,
    )
