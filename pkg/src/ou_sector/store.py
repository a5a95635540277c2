"""Append-only report persistence keyed by the content hash of the config.

Layout under the output directory:

    index.json                  {digest: {"config": ..., "runs": [...]}}
    <digest>/run-0001.json      one file per run, never overwritten
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

from .runner import RunReport
from .utils import config_digest

log = logging.getLogger(__name__)

INDEX_NAME = "index.json"


def _read_index(out: Path) -> dict[str, Any]:
    path = out / INDEX_NAME
    if not path.exists():
        return {}
    return json.loads(path.read_text(encoding="utf-8"))


def save_report(report: RunReport, out: str | Path) -> Path:
    """Write the report as the next run file of its config and update the index."""
    out = Path(out)
    digest = config_digest(report.config)
    folder = out / digest
    folder.mkdir(parents=True, exist_ok=True)
    existing = sorted(folder.glob("run-*.json"))
    number = int(existing[-1].stem.split("-")[1]) + 1 if existing else 1
    path = folder / f"run-{number:04d}.json"
    with path.open("x", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)

    index = _read_index(out)
    entry = index.setdefault(digest, {"config": report.to_dict()["config"], "runs": []})
    entry["runs"].append({"file": str(path.relative_to(out)), "passed": report.passed, "seed": report.config["run"]["seed"]})
    tmp = out / (INDEX_NAME + ".tmp")
    tmp.write_text(json.dumps(index, indent=2, sort_keys=True), encoding="utf-8")
    tmp.replace(out / INDEX_NAME)
    log.info("Saved %s", path)
    return path


def past_runs(config: dict[str, Any], out: str | Path) -> list[str]:
    """Run files recorded for this config, oldest first."""
    entry = _read_index(Path(out)).get(config_digest(config))
    return [] if entry is None else [r["file"] for r in entry["runs"]]
