"""Serialisation of solution fields.

Binary layout (all integers and floats little-endian)::

    8 bytes   magic b"BOMBERF1"
    4 bytes   uint32 length N of the header
    N bytes   UTF-8 JSON header
    ...       each array named in header["arrays"], in that order, as
              nx*nt float64 values in row-major (x-major) order

The header carries ``v, mode, x_max, nx, t_max, nt, solver_version`` plus
``arrays`` and ``byte_order``.  The JSON form is a single object
``{"header": {...}, "P": [[...], ...], ...}`` with one inner list per
ammunition node.  ``P``, ``K`` and ``H`` are always written; ``P_comp`` and
``H_comp`` (``1 - P`` and ``1 - H`` at full relative precision) follow them
and are optional on read.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grid import Grid, Mode, SolutionField
from .model import ModelParams
from .solver import SOLVER_VERSION

__all__ = ["MAGIC", "field_header", "write_field", "read_field", "write_csv", "to_json_dict", "from_json_dict"]

MAGIC = b"BOMBERF1"
ARRAYS = ("P", "K", "H", "P_comp", "H_comp")
FORMATS = ("binary", "json", "csv")


def field_header(field: SolutionField) -> dict:
    g = field.grid
    return {
        "v": field.params.v,
        "mode": field.mode.label,
        "x_max": g.x_max,
        "nx": g.nx,
        "t_max": g.t_max,
        "nt": g.nt,
        "solver_version": field.meta.get("solver_version", SOLVER_VERSION),
        "arrays": list(ARRAYS),
        "byte_order": "little",
    }


def _arrays(field: SolutionField) -> dict[str, np.ndarray]:
    return {"P": field.P, "K": field.K, "H": field.H, "P_comp": field.P_comp, "H_comp": field.H_comp}


def _build(header: dict, arrays: dict[str, np.ndarray]) -> SolutionField:
    try:
        grid = Grid(header["x_max"], header["nx"], header["t_max"], header["nt"])
        params = ModelParams(header["v"])
        mode = Mode.from_label(header["mode"])
    except KeyError as exc:
        raise ConfigurationError(f"header is missing {exc}") from None
    for name in ("P", "K", "H"):
        if name not in arrays:
            raise ConfigurationError(f"field file lacks array {name}")
    P_comp = arrays.get("P_comp")
    H_comp = arrays.get("H_comp")
    if P_comp is None:
        P_comp = 1.0 - arrays["P"]
    if H_comp is None:
        H_comp = 1.0 - arrays["H"]
    meta = {"solver_version": header.get("solver_version", "")}
    return SolutionField(grid, params, mode, np.asfortranarray(P_comp),
                         np.asfortranarray(H_comp), np.asfortranarray(arrays["K"]), meta)


def to_json_dict(field: SolutionField) -> dict:
    out = {"header": field_header(field)}
    for name, arr in _arrays(field).items():
        out[name] = arr.tolist()
    return out


def from_json_dict(doc: dict) -> SolutionField:
    header = doc["header"]
    shape = (header["nx"], header["nt"])
    arrays = {}
    for name in ARRAYS:
        if name in doc:
            arr = np.asarray(doc[name], dtype=np.float64)
            if arr.shape != shape:
                raise ConfigurationError(f"array {name} has shape {arr.shape}, expected {shape}")
            arrays[name] = arr
    return _build(header, arrays)


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt:
        if fmt not in FORMATS:
            raise ConfigurationError(f"unknown format {fmt!r}")
        return fmt
    suffix = path.suffix.lower()
    return {".json": "json", ".csv": "csv"}.get(suffix, "binary")


def write_field(field: SolutionField, path, fmt: str | None = None, csv_field: str = "P") -> None:
    path = Path(path)
    fmt = _infer_format(path, fmt)
    if fmt == "csv":
        write_csv(field, path, csv_field)
    elif fmt == "json":
        with open(path, "w") as fh:
            json.dump(to_json_dict(field), fh, separators=(",", ":"))
            fh.write("\n")
    else:
        header = json.dumps(field_header(field), sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            for arr in _arrays(field).values():
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_field(path, fmt: str | None = None) -> SolutionField:
    path = Path(path)
    fmt = _infer_format(path, fmt)
    if fmt == "csv":
        raise ConfigurationError("a CSV holds a single array and cannot be read back as a field")
    if fmt == "json":
        with open(path) as fh:
            return from_json_dict(json.load(fh))
    data = path.read_bytes()
    if data[:8] != MAGIC:
        raise ConfigurationError(f"{path} is not a binary field file")
    (hlen,) = struct.unpack("<I", data[8:12])
    header = json.loads(data[12:12 + hlen].decode("utf-8"))
    shape = (header["nx"], header["nt"])
    count = shape[0] * shape[1]
    offset = 12 + hlen
    arrays = {}
    for name in header.get("arrays", ["P", "K", "H"]):
        chunk = data[offset:offset + 8 * count]
        if len(chunk) != 8 * count:
            raise ConfigurationError(f"{path} is truncated in array {name}")
        arrays[name] = np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64)
        offset += 8 * count
    return _build(header, arrays)


def write_csv(field: SolutionField, path, which: str = "P") -> None:
    """One array as rows ``x,t,value``, x varying slowest."""
    arrays = _arrays(field)
    if which not in arrays:
        raise ConfigurationError(f"unknown array {which!r}; choose from {sorted(arrays)}")
    g = field.grid
    xx, tt = np.meshgrid(g.x, g.t, indexing="ij")
    table = np.column_stack([xx.ravel(), tt.ravel(), arrays[which].ravel()])
    with open(path, "w") as fh:
        fh.write("x,t,value\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")
