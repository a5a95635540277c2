"""Output formatters: human (rich), JSON, TSV/plain, markdown; plus the
file emitters for json, csv tables and plot data."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .model import sector_cotangent
from .report import jsonable
from .runner import RunReport

EMIT_FORMATS = ("json", "csv", "plot-data")
PLOT_GAMMAS = (0.0, 0.5, 1.0)
CSV_COLUMNS = ["suite", "name", "kind", "passed", "residual", "margin", "std_error", "tolerance", "n_samples", "seed"]


def _as_dict(data: Any) -> Any:
    if isinstance(data, RunReport):
        return data.to_dict()
    return jsonable(data)


def _rows(report: dict) -> list[dict]:
    """One row per leaf check, tagged with its top-level suite."""
    rows = []

    def walk(node: dict, suite: str) -> None:
        children = node.get("children") or []
        if not children:
            rows.append({**{k: node.get(k) for k in CSV_COLUMNS if k != "suite"}, "suite": suite, "notes": node.get("notes", [])})
            return
        for child in children:
            walk(child, suite)

    for s in report.get("suites", []):
        walk(s, s["name"])
    return rows


def _num(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


# ---- JSON ----

def output_json(data: Any, verbose: bool = False) -> None:
    """Raw JSON to stdout."""
    data = _as_dict(data)
    if not verbose and isinstance(data, dict) and "suites" in data:
        # Drop the config echo and matrices, keep verdicts
        data = {k: v for k, v in data.items() if k not in ("config", "derived")}
    print(json.dumps(data, indent=2, default=str))


# ---- Plain/TSV ----

def output_plain(data: Any, verbose: bool = False) -> None:
    """TSV output for piping."""
    data = _as_dict(data)
    if isinstance(data, dict) and "suites" in data:
        keys = CSV_COLUMNS if verbose else ["suite", "name", "passed", "residual", "margin"]
        print("\t".join(keys))
        for row in _rows(data):
            print("\t".join(_num(row.get(k)) for k in keys))
    elif isinstance(data, dict):
        for k, v in data.items():
            if isinstance(v, (dict, list)):
                v = json.dumps(v, default=str)
            print(f"{k}\t{v}")
    else:
        print(data)


# ---- Markdown ----

def output_markdown(data: Any, title: str = "", verbose: bool = False) -> None:
    """Markdown output to stdout."""
    data = _as_dict(data)
    if title:
        print(f"## {title}\n")
    if isinstance(data, dict) and "suites" in data:
        derived = data.get("derived", {})
        if "gamma" in derived:
            print(f"gamma = {derived['gamma']:.6g}, n = {derived.get('dim')}\n")
        for suite in data["suites"]:
            status = "pass" if suite["passed"] else "FAIL"
            print(f"### {suite['name']} ({status})\n")
            print("| Check | Result | Residual | Margin |")
            print("|-------|--------|----------|--------|")
            for row in _rows({"suites": [suite]}):
                mark = "pass" if row["passed"] else "FAIL"
                print(f"| {row['name']} | {mark} | {_num(row['residual'])} | {_num(row['margin'])} |")
            if verbose:
                for note in suite.get("notes", []):
                    print(f"\n*{note}*")
            print()
        if verbose and data.get("timing"):
            parts = [f"{k}: {v}s" for k, v in data["timing"].items()]
            print(" | ".join(parts))
    elif isinstance(data, dict):
        for k, v in data.items():
            print(f"**{k}**: {v}")
    else:
        print(str(data))


# ---- Rich (human-readable) ----

_console = Console(stderr=True)
_stdout = Console()


def output_human(data: Any, title: str = "", verbose: bool = False) -> None:
    """Pretty-print with rich."""
    data = _as_dict(data)
    if isinstance(data, dict) and "suites" in data:
        _human_report(data, title, verbose)
    elif isinstance(data, dict):
        _human_derived(data, title, verbose)
    else:
        _stdout.print(data)


def _matrix(M: Any) -> str:
    arr = np.asarray(M, dtype=float)
    return "\n".join("  ".join(f"{x: .6g}" for x in row) for row in arr)


def _human_derived(d: dict, title: str = "", verbose: bool = False) -> None:
    content = f"[bold]n[/bold] = {d.get('dim')}   [bold]gamma[/bold] = {d.get('gamma', float('nan')):.6g}"
    if "spectral_gap" in d:
        content += f"   [bold]gap[/bold] = {d['spectral_gap']:.6g}"
    for key in ("Q_inf", "B") + (("A", "Q") if verbose else ()):
        if key in d:
            content += f"\n\n[bold]{key}[/bold]\n{_matrix(d[key])}"
    _stdout.print(Panel(content, title=title or "Model", border_style="blue", expand=False))
    sector = d.get("sector", {})
    if sector:
        table = Table(title="Sector angles")
        table.add_column("p", justify="right")
        table.add_column("theta_p", justify="right")
        table.add_column("cot theta_p", justify="right")
        for p, row in sector.items():
            table.add_row(p, f"{row['theta']:.6g}", f"{row['C_theta']:.6g}")
        _stdout.print(table)


def _human_report(data: dict, title: str = "", verbose: bool = False) -> None:
    if verbose:
        _human_derived(data.get("derived", {}), title, verbose)
    for suite in data["suites"]:
        status = "[green]pass[/green]" if suite["passed"] else "[red]FAIL[/red]"
        table = Table(title=f"{suite['name']} {status}", show_lines=False)
        table.add_column("Check", style="bold")
        table.add_column("Result")
        table.add_column("Residual", justify="right")
        table.add_column("Margin", justify="right")
        table.add_column("Std err", justify="right")
        if verbose:
            table.add_column("Samples", justify="right")
            table.add_column("Seed", justify="right")
        for row in _rows({"suites": [suite]}):
            cells = [
                row["name"],
                "[green]pass[/green]" if row["passed"] else "[red]FAIL[/red]",
                _num(row["residual"]),
                _num(row["margin"]),
                _num(row["std_error"]),
            ]
            if verbose:
                cells += [str(row["n_samples"]), str(row["seed"])]
            table.add_row(*cells)
        _stdout.print(table)
        for note in suite.get("notes", []):
            _console.print(f"[dim]{note}[/dim]")
    verdict = "[green]all checks passed[/green]" if all(s["passed"] for s in data["suites"]) else "[red]some checks failed[/red]"
    total = data.get("timing", {}).get("total")
    _console.print(verdict + (f" [dim]({total}s)[/dim]" if total is not None else ""))


# ---- Router ----

def format_output(data: Any, mode: str = "human", title: str = "", verbose: bool = False) -> None:
    """Route to the appropriate formatter."""
    if mode == "json":
        output_json(data, verbose)
    elif mode == "plain":
        output_plain(data, verbose)
    elif mode == "markdown":
        output_markdown(data, title, verbose)
    else:
        output_human(data, title, verbose)


# ---- files ----

def theta_curve(gamma: float, p_values) -> list[tuple[float, float]]:
    """(p, theta_p) pairs."""
    return [(float(p), math.atan2(1.0, sector_cotangent(gamma, p))) for p in p_values]


def emit(report: RunReport, fmt: str, out: str | Path) -> list[Path]:
    """Write json, csv or plot-data files for a report into ``out``."""
    if fmt not in EMIT_FORMATS:
        raise ValueError(f"Unknown format {fmt!r}; choose from {', '.join(EMIT_FORMATS)}.")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    data = report.to_dict()
    if fmt == "json":
        path = out / "report.json"
        path.write_text(json.dumps(data, indent=2, sort_keys=True), encoding="utf-8")
        return [path]
    if fmt == "csv":
        path = out / "checks.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(_rows(data))
        return [path]

    gammas = list(PLOT_GAMMAS)
    model_gamma = data.get("derived", {}).get("gamma")
    if model_gamma is not None and all(abs(model_gamma - g) > 1e-12 for g in gammas):
        gammas.append(float(model_gamma))
    p_grid = np.round(np.linspace(1.05, 10.0, 180), 6)
    curves = out / "theta_curves.csv"
    with curves.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "p", "theta"])
        for gamma in gammas:
            writer.writerows((gamma, p, theta) for p, theta in theta_curve(gamma, p_grid))
    paths = [curves]
    boundary = data.get("derived", {}).get("fov_boundary")
    if boundary:
        fov = out / "fov_boundary.csv"
        with fov.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["re", "im"])
            writer.writerows(boundary)
        paths.append(fov)
    return paths


def load_report(path: str | Path) -> RunReport:
    return RunReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
