"""
Deterministic table writers (CSV and JSON lines).
"""

import csv
import hashlib
import io
import json
import math
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from shared import __version__
from shared.models import OutputFormat


def config_hash(payload: Dict[str, Any]) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def format_value(value: Any) -> str:
    """Locale-free text for one cell; floats carry 17 significant digits."""
    if isinstance(value, np.generic):
        value = value.item()
    if value is None:
        return ""
    if isinstance(value, dict):
        return format_diagnostics(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def format_diagnostics(diagnostics: Dict[str, Any]) -> str:
    return ";".join(f"{key}={format_value(diagnostics[key])}" for key in sorted(diagnostics))


def json_text(value: Any) -> str:
    """JSON text for one value; finite floats use the same digits as the CSV cells."""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, dict):
        items = (f"{json.dumps(str(k))}: {json_text(value[k])}" for k in sorted(value))
        return "{" + ", ".join(items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(json_text(v) for v in value) + "]"
    if isinstance(value, float) and math.isfinite(value):
        return format_value(value)
    if isinstance(value, float):
        return json.dumps(format_value(value))
    return json.dumps(value)


class Table:
    """Header plus rows of plain values."""

    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns)
        self.rows: List[Dict[str, Any]] = []

    def add(self, row: Dict[str, Any]) -> None:
        self.rows.append({column: row.get(column) for column in self.columns})

    def __len__(self) -> int:
        return len(self.rows)


def render(table: Table, fmt: OutputFormat, command: str, payload: Dict[str, Any]) -> str:
    metadata = {
        "version": __version__,
        "command": command,
        "config_sha256": config_hash(payload),
    }
    buffer = io.StringIO()
    if fmt == OutputFormat.JSON:
        buffer.write(json.dumps({"_meta": metadata}, sort_keys=True) + "\n")
        for row in table.rows:
            buffer.write(json_text(row) + "\n")
        return buffer.getvalue()

    for key in ("version", "command", "config_sha256"):
        buffer.write(f"# {key}: {metadata[key]}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_value(row[column]) for column in table.columns])
    return buffer.getvalue()


def write_table(text: str, out: Optional[str], stream: Optional[io.TextIOBase] = None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    elif stream is not None:
        stream.write(text)
