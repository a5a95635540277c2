import pytest

from ou_sector.report import CheckReport, combine
from ou_sector.runner import SCHEMA_VERSION, RunReport


@pytest.fixture
def sample_report():
    """A small hand-built report: one passing suite, one with a failed check."""
    model = combine(
        "model",
        [
            CheckReport(name="drift_algebra", kind="identity", passed=True, residual=1e-15, tolerance=1e-9, seed=3),
            CheckReport(name="sector_constants", kind="identity", passed=True, residual=0.0, tolerance=1e-10),
        ],
    )
    sector = combine(
        "sector",
        [
            CheckReport(name="numerical_range[p=2]", kind="inequality", passed=True, margin=0.01, std_error=0.002, n_samples=1000, seed=7),
            CheckReport(name="field_of_values", kind="inequality", passed=False, margin=-0.25),
        ],
        notes=["theta_2=1.10715"],
    )
    return RunReport(
        schema_version=SCHEMA_VERSION,
        tool_version="0.1.0",
        config={"model": {"builtin": "rotation", "alpha": 0.5}, "run": {"seed": 0, "p": [2.0]}},
        derived={
            "dim": 2,
            "gamma": 0.5,
            "Q_inf": [[1.0, 0.0], [0.0, 1.0]],
            "B": [[-0.5, -0.25], [0.25, -0.5]],
            "sector": {"2": {"theta": 1.1071487, "C_theta": 0.5}},
            "fov_boundary": [[-1.0, 0.5], [-1.0, -0.5]],
        },
        suites=[model, sector],
        timing={"model": 0.1, "sector": 0.2, "total": 0.3},
    )
