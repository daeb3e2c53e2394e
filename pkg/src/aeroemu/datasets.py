"""Sample batches and dataset file I/O (CSV and binary columnar format).

Binary layout, little-endian throughout:

    magic "AEMU" | version u16 | row count u64 | column count u16 |
    schema_hash u64 (FNV-1a of the concatenated column names) |
    column-major f64 payload

CSV files carry the schema column names as a header row, UTF-8, LF endings.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from . import schema as schema_mod
from .errors import (
    DataFormatError,
    EmptyDatasetError,
    NonFiniteDataError,
    SchemaHashMismatchError,
)

BINARY_MAGIC = b"AEMU"
BINARY_VERSION = 1

RAW = "raw"
TRANSFORMED = "transformed"
STANDARDIZED = "standardized"
_SPACES = (RAW, TRANSFORMED, STANDARDIZED)


@dataclass
class SampleBatch:
    """Column table of per-variable values in schema order.

    `data` is (n_rows, n_columns) float64; `space` tags which value space
    the numbers live in and only the pipeline operations may change it.
    """

    names: tuple[str, ...]
    data: np.ndarray
    space: str = RAW

    def __post_init__(self):
        self.names = tuple(self.names)
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError("batch data must be 2-D (rows, columns)")
        if self.data.shape[1] != len(self.names):
            raise ValueError(
                f"{len(self.names)} names but {self.data.shape[1]} columns"
            )
        if self.space not in _SPACES:
            raise ValueError(f"unknown space tag {self.space!r}")

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.names.index(name)]

    def copy(self) -> "SampleBatch":
        return SampleBatch(self.names, self.data.copy(), self.space)


def _check_finite(data: np.ndarray, names) -> None:
    bad = ~np.isfinite(data)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise NonFiniteDataError(int(row), names[int(col)])


def write_batch(path, batch: SampleBatch, fmt: str = "binary") -> None:
    if batch.n_rows == 0:
        raise EmptyDatasetError("refusing to write an empty batch")
    if fmt == "binary":
        _write_binary(path, batch)
    elif fmt == "csv":
        _write_csv(path, batch)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_batch(path, fmt: str, schema: schema_mod.VariableSchema,
               role: str) -> SampleBatch:
    """Read and validate one dataset file against the schema's `role` columns."""
    if fmt == "binary":
        return _read_binary(path, schema, role)
    if fmt == "csv":
        return _read_csv(path, schema, role)
    raise ValueError(f"unknown format {fmt!r}")


def _write_binary(path, batch: SampleBatch) -> None:
    header = struct.pack(
        "<4sHQHQ",
        BINARY_MAGIC,
        BINARY_VERSION,
        batch.n_rows,
        len(batch.names),
        schema_mod.hash_names(batch.names),
    )
    payload = np.asfortranarray(batch.data).tobytes(order="F")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def _read_binary(path, schema, role) -> SampleBatch:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) == 0:
        raise EmptyDatasetError(f"{path}: empty file")
    header_size = struct.calcsize("<4sHQHQ")
    if len(blob) < header_size:
        raise DataFormatError(f"{path}: truncated header")
    magic, version, n_rows, n_cols, col_hash = struct.unpack_from("<4sHQHQ", blob)
    if magic != BINARY_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    names = schema.names_for(role)
    if col_hash != schema_mod.hash_names(names) or n_cols != len(names):
        raise SchemaHashMismatchError(
            f"{path}: column hash does not match the {role} schema"
        )
    if n_rows == 0:
        raise EmptyDatasetError(f"{path}: zero rows")
    expected = n_rows * n_cols * 8
    body = blob[header_size:]
    if len(body) != expected:
        raise DataFormatError(
            f"{path}: payload is {len(body)} bytes, expected {expected}"
        )
    data = np.frombuffer(body, dtype="<f8").reshape((n_rows, n_cols), order="F")
    data = np.ascontiguousarray(data)
    _check_finite(data, names)
    return SampleBatch(names, data, RAW)


def _write_csv(path, batch: SampleBatch) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(batch.names) + "\n")
        for row in batch.data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _read_csv(path, schema, role) -> SampleBatch:
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise EmptyDatasetError(f"{path}: empty file")
        header = [h.strip() for h in header_line.rstrip("\n").split(",")]
        schema_mod.validate_columns(schema, header, role)
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=np.float64)
        except ValueError as exc:
            raise DataFormatError(f"{path}: {exc}") from exc
    if data.size == 0:
        raise EmptyDatasetError(f"{path}: no data rows")
    if data.shape[1] != len(header):
        raise DataFormatError(f"{path}: ragged rows")
    _check_finite(data, header)
    return SampleBatch(tuple(header), data, RAW)


def read_dataset(inputs_path, outputs_path, fmt, schema):
    """Convenience wrapper returning the (inputs, outputs) batch pair."""
    inputs = read_batch(inputs_path, fmt, schema, "input")
    outputs = read_batch(outputs_path, fmt, schema, "output")
    if inputs.n_rows != outputs.n_rows:
        raise DataFormatError(
            f"row count mismatch: {inputs.n_rows} inputs vs {outputs.n_rows} outputs"
        )
    return inputs, outputs
