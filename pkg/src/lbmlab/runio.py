"""Artifact output: CSV tables and run manifests.

Files are written atomically (temp file in the destination directory,
then rename), floats are printed with 9 significant digits, and nothing
time- or host-dependent is ever written, so re-running an identical
configuration reproduces every artifact bit for bit.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

from .experiments.tables import TableData


def format_value(value) -> str:
    """Canonical text form for one CSV/manifest cell."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def atomic_write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def write_csv(path: str | Path, columns, rows) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return atomic_write_text(path, buffer.getvalue())


def write_manifest(path: str | Path, name: str, params: dict, derived: dict | None = None) -> Path:
    from . import __version__

    lines = [f"artifact = {name}", f"version = {__version__}", "", "[parameters]"]
    lines += [f"{key} = {format_value(value)}" for key, value in params.items()]
    if derived:
        lines += ["", "[derived]"]
        lines += [f"{key} = {format_value(value)}" for key, value in derived.items()]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def write_artifact(out_dir: str | Path, data: TableData, derived: dict | None = None) -> tuple[Path, Path]:
    """Write one table and its manifest; returns both paths."""
    out_dir = Path(out_dir)
    csv_path = write_csv(out_dir / f"{data.name}.csv", data.columns, data.rows)
    manifest_path = write_manifest(
        out_dir / f"{data.name}.manifest.txt", data.name, data.params, derived
    )
    return csv_path, manifest_path
