"""CSV readers and writers for solutions, time meshes and defect reports.

Solution files have one row per time layer.  The header is ``t`` followed by
``x_i`` (and ``s_i``, ``rho_i`` when the layers carry a mass grid) and ``u_i``
for every node ``i``.  Values are written with 17 significant digits so a
write/read cycle is exact.
"""
from __future__ import annotations

import csv
import io as _io
import os
import re
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, HeatSymError
from .meshes import Layer, TimeMesh

FMT = "%.17g"


class CsvFormatError(HeatSymError, ValueError):
    """A CSV file does not follow the documented column contract."""


def _fields(layer: Layer) -> list:
    f = ["x"]
    if layer.s is not None:
        f.append("s")
    if layer.rho is not None:
        f.append("rho")
    return f + ["u"]


def _open(path_or_buf, mode):
    if hasattr(path_or_buf, "write" if "w" in mode else "read"):
        return path_or_buf, False
    return open(os.fspath(path_or_buf), mode, newline=""), True


def write_solution(path_or_buf, layers: Sequence[Layer]) -> None:
    layers = list(layers)
    if not layers:
        raise DomainError("nothing to write")
    fields = _fields(layers[0])
    n = len(layers[0])
    for lay in layers:
        if len(lay) != n or _fields(lay) != fields:
            raise DomainError("all layers must share node count and columns")
    fh, close = _open(path_or_buf, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"{c}_{i}" for i in range(n) for c in fields])
        for lay in layers:
            cols = [getattr(lay, c) for c in fields]
            row = np.empty(n * len(fields))
            for j, c in enumerate(cols):
                row[j::len(fields)] = c
            w.writerow([FMT % lay.t] + [FMT % v for v in row])
    finally:
        if close:
            fh.close()


_HEAD = re.compile(r"^(x|s|rho|u)_(\d+)$")


def read_solution(path_or_buf) -> list:
    """Parse a solution file back into layers.

    Raises
    ------
    CsvFormatError
        Malformed header, ragged rows or non-numeric entries.
    """
    fh, close = _open(path_or_buf, "r")
    try:
        rows = [r for r in csv.reader(fh) if r]
    finally:
        if close:
            fh.close()
    if not rows or rows[0][0].strip() != "t":
        raise CsvFormatError("first column must be 't'")
    head = [h.strip() for h in rows[0][1:]]
    parsed = [_HEAD.match(h) for h in head]
    if not parsed or any(m is None for m in parsed):
        raise CsvFormatError(f"unexpected columns in header {rows[0]!r}")
    fields = []
    for m in parsed:
        if m.group(1) in fields:
            break
        fields.append(m.group(1))
    if "x" not in fields or "u" not in fields or len(head) % len(fields):
        raise CsvFormatError("header must list x_i and u_i for every node")
    n = len(head) // len(fields)
    expect = [f"{c}_{i}" for i in range(n) for c in fields]
    if head != expect:
        raise CsvFormatError("columns must be grouped per node in a fixed order")
    layers = []
    for k, r in enumerate(rows[1:], start=2):
        if len(r) != len(head) + 1:
            raise CsvFormatError(f"row {k} has {len(r)} entries, expected {len(head) + 1}")
        try:
            vals = np.array([float(v) for v in r])
        except ValueError:
            raise CsvFormatError(f"row {k} has a non-numeric entry") from None
        body = vals[1:].reshape(n, len(fields))
        cols = {c: body[:, j] for j, c in enumerate(fields)}
        layers.append(Layer(vals[0], cols["x"], cols["u"], s=cols.get("s"), rho=cols.get("rho")))
    if not layers:
        raise CsvFormatError("file has no layers")
    return layers


def solution_to_string(layers: Sequence[Layer]) -> str:
    buf = _io.StringIO()
    write_solution(buf, layers)
    return buf.getvalue()


def write_time_mesh(path_or_buf, mesh: TimeMesh) -> None:
    fh, close = _open(path_or_buf, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "t"])
        for i, t in enumerate(mesh.t):
            w.writerow([i, FMT % t])
    finally:
        if close:
            fh.close()


def write_space_layer(path_or_buf, layer: Layer) -> None:
    """Nodes of one layer: ``index, x`` plus ``s``/``rho`` when present."""
    fields = [c for c in _fields(layer) if c != "u"]
    fh, close = _open(path_or_buf, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index"] + fields)
        for i in range(len(layer)):
            w.writerow([i] + [FMT % getattr(layer, c)[i] for c in fields])
    finally:
        if close:
            fh.close()


def write_rows(path_or_buf, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Generic numeric table (reports, convergence tables, audit tables)."""
    fh, close = _open(path_or_buf, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for r in rows:
            w.writerow([FMT % v if isinstance(v, (float, np.floating)) else v for v in r])
    finally:
        if close:
            fh.close()


def read_table(path_or_buf) -> np.ndarray:
    """Two-column ``x, u`` table (header optional) for custom initial data."""
    fh, close = _open(path_or_buf, "r")
    try:
        rows = [r for r in csv.reader(fh) if r]
    finally:
        if close:
            fh.close()
    try:
        float(rows[0][0])
    except (ValueError, IndexError):
        rows = rows[1:]
    try:
        arr = np.array([[float(v) for v in r[:2]] for r in rows])
    except ValueError:
        raise CsvFormatError("table entries must be numeric") from None
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] != 2:
        raise CsvFormatError("table needs at least two (x, u) rows")
    if np.any(np.diff(arr[:, 0]) <= 0):
        raise CsvFormatError("table x values must increase")
    return arr
