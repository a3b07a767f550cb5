"""Serializable experiment reports (JSON for everything, CSV for flat tables)."""

from __future__ import annotations

import csv
import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


def plain(obj: Any) -> Any:
    """Convert to JSON-ready builtins; non-finite floats become ``None``."""
    if isinstance(obj, enum.Enum):
        return plain(obj.value)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return plain(obj.to_dict())
        return plain(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(plain(k)): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(plain(v) for v in obj)
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


@dataclass
class ExperimentReport:
    name: str
    statistics: dict[str, Any] = field(default_factory=dict)
    tables: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return plain({
            "name": self.name,
            "metadata": self.metadata,
            "statistics": self.statistics,
            "tables": self.tables,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @property
    def stem(self) -> str:
        seed = self.metadata.get("seed", "na")
        digest = str(self.metadata.get("dataset_digest", ""))[:12] or "nodata"
        return f"{self.name}_seed{seed}_{digest}"

    def write(self, out_dir: str | Path) -> list[Path]:
        """Write ``<stem>.json`` plus one ``<stem>_<table>.csv`` per table and a flat statistics CSV."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [out_dir / f"{self.stem}.json"]
        written[0].write_text(self.to_json(), encoding="utf-8")

        stats_path = out_dir / f"{self.stem}_statistics.csv"
        _write_rows(stats_path, [{"key": k, "value": v} for k, v in flatten(plain(self.statistics))])
        written.append(stats_path)
        for table, rows in self.tables.items():
            path = out_dir / f"{self.stem}_{table}.csv"
            _write_rows(path, plain(rows))
            written.append(path)
        return written


def flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            out.extend(flatten(v, f"{prefix}.{k}" if prefix else str(k)))
        return out
    if isinstance(obj, list) and obj and all(isinstance(v, (dict, list)) for v in obj):
        out = []
        for i, v in enumerate(obj):
            out.extend(flatten(v, f"{prefix}[{i}]"))
        return out
    if isinstance(obj, list):
        return [(prefix, json.dumps(obj))]
    return [(prefix, obj)]


def _write_rows(path: Path, rows: list[dict[str, Any]]) -> None:
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\r\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})
