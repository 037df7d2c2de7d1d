"""Dense float64 matrix substrate with deterministic, seeded randomness.

Feature maps are stored channels-by-positions: a c x N matrix holds one
c-dimensional feature vector per spatial position (column). Everything here
is a pure function of its inputs; arrays are never mutated after validation.

Randomness is counter-based: every stream is a Philox4x64 bit generator
keyed by the pair (seed, stream_id), so identical specs reproduce identical
draws and distinct stream ids are independent. Gaussian variates come from
numpy's ziggurat transform on that stream.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Union

import numpy as np

__all__ = [
    "FormatError",
    "NumericError",
    "RngSpec",
    "ShapeError",
    "as_matrix",
    "as_vector",
    "column_norms",
    "gaussian_sample",
    "matmul",
    "normalize_columns",
    "read_matrix_binary",
    "read_matrix_csv",
    "softmax_vec",
    "write_matrix_binary",
    "write_matrix_csv",
]

_U64_MAX = 2**64 - 1

_BINARY_MAGIC = b"ENLM"
_BINARY_HEADER = struct.Struct("<4sIII")
_BINARY_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}


class ShapeError(ValueError):
    """Operand shapes violate an operation's contract."""


class NumericError(ArithmeticError):
    """A value is non-finite where finite reals are required."""


class FormatError(ValueError):
    """Serialized matrix data could not be parsed."""


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """Validate `data` as a finite float64 2-D array and return it.

    Accepts anything array-like. Rejects empty shapes, non-2-D input and
    NaN/Inf entries. The result is C-contiguous and safe to treat as
    immutable (a copy is made unless `data` already complies).
    """
    a = np.asarray(data, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one row and column, got {a.shape}")
    if not np.isfinite(a).all():
        row, col = (int(i) for i in np.argwhere(~np.isfinite(a))[0])
        raise NumericError(f"{name} has a non-finite entry at ({row}, {col})")
    return np.ascontiguousarray(a)


def as_vector(data, name: str = "vector") -> np.ndarray:
    """Validate `data` as a finite float64 1-D array and return it."""
    v = np.asarray(data, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got ndim={v.ndim}")
    if v.size < 1:
        raise ShapeError(f"{name} must be non-empty")
    if not np.isfinite(v).all():
        raise NumericError(f"{name} has a non-finite entry")
    return np.ascontiguousarray(v)


@dataclass(frozen=True)
class RngSpec:
    """Identifies one reproducible random stream.

    seed selects the experiment, stream_id a substream within it (trial
    index, input slot, ...). Both are 64-bit unsigned; the pair is the
    Philox key, so any two distinct specs yield independent streams.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for field in ("seed", "stream_id"):
            value = getattr(self, field)
            if not isinstance(value, int) or not (0 <= value <= _U64_MAX):
                raise ValueError(f"{field} must be an integer in [0, 2^64), got {value!r}")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def stream(self, offset: int) -> "RngSpec":
        """Derived spec with stream_id shifted by `offset` (mod 2^64)."""
        return RngSpec(self.seed, (self.stream_id + offset) % (_U64_MAX + 1))


def matmul(a, b) -> np.ndarray:
    """Matrix product with validated shapes.

    Delegates to numpy's BLAS path; within one process the accumulation
    order is fixed, so repeated calls on identical inputs are bitwise
    reproducible.
    """
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def softmax_vec(v) -> np.ndarray:
    """Numerically stable softmax of a 1-D vector (max-subtracted)."""
    v = as_vector(v, "softmax input")
    e = np.exp(v - v.max())
    return e / e.sum()


def gaussian_sample(rng: RngSpec, rows: int, cols: int) -> np.ndarray:
    """rows x cols matrix of iid standard normals from the given stream."""
    if rows < 1 or cols < 1:
        raise ShapeError(f"sample shape must be positive, got ({rows}, {cols})")
    return rng.generator().standard_normal((rows, cols))


def column_norms(a) -> np.ndarray:
    """Euclidean norm of every column."""
    a = as_matrix(a)
    return np.sqrt((a * a).sum(axis=0))


def normalize_columns(a, epsilon: float = 1e-12) -> np.ndarray:
    """Scale each column to unit norm; columns with norm below `epsilon`
    are divided by `epsilon` instead (so zero columns stay zero)."""
    a = as_matrix(a)
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    norms = np.maximum(column_norms(a), epsilon)
    return a / norms[None, :]


# ---------------------------------------------------------------------------
# Interchange formats.
#
# CSV: line 1 is "rows,cols"; each following line holds one row of
# comma-separated decimal reals. Values are written with Python's repr,
# which is shortest-round-trip, so re-parsing restores bit-identical f64.
#
# Binary: 16-byte header (magic b"ENLM", u32 rows, u32 cols, u32 dtype)
# followed by the row-major little-endian payload. dtype 0 is f64 and is
# lossless; dtype 1 is f32, offered purely as a compact encoding.
# ---------------------------------------------------------------------------


def _open_for(dest, mode: str):
    if isinstance(dest, (str, Path)):
        return open(dest, mode), True
    return dest, False


def write_matrix_csv(a, dest: Union[str, Path, IO[str]]) -> None:
    """Write a matrix in the canonical CSV interchange format."""
    a = as_matrix(a)
    fp, owned = _open_for(dest, "w")
    try:
        fp.write(f"{a.shape[0]},{a.shape[1]}\n")
        for row in a:
            fp.write(",".join(repr(float(x)) for x in row))
            fp.write("\n")
    finally:
        if owned:
            fp.close()


def read_matrix_csv(src: Union[str, Path, IO[str]]) -> np.ndarray:
    """Parse the canonical CSV format; inverse of write_matrix_csv."""
    fp, owned = _open_for(src, "r")
    try:
        text = fp.read()
    finally:
        if owned:
            fp.close()
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty input, expected a rows,cols header")
    header = lines[0].split(",")
    if len(header) != 2:
        raise FormatError(f"header must be 'rows,cols', got {lines[0]!r}")
    try:
        rows, cols = int(header[0]), int(header[1])
    except ValueError:
        raise FormatError(f"header must hold two integers, got {lines[0]!r}") from None
    if rows < 1 or cols < 1:
        raise FormatError(f"header declares empty shape {rows}x{cols}")
    body = [line for line in lines[1:] if line != ""]
    if len(body) != rows:
        raise FormatError(f"expected {rows} data lines, found {len(body)}")
    out = np.empty((rows, cols), dtype=np.float64)
    for i, line in enumerate(body):
        fields = line.split(",")
        if len(fields) != cols:
            raise FormatError(f"line {i + 2}: expected {cols} values, got {len(fields)}")
        try:
            out[i] = [float(f) for f in fields]
        except ValueError as exc:
            raise FormatError(f"line {i + 2}: {exc}") from None
    return as_matrix(out, "CSV matrix")


def write_matrix_binary(a, dest: Union[str, Path, IO[bytes]], dtype: str = "f64") -> None:
    """Write the binary format; dtype is 'f64' (lossless) or 'f32'."""
    a = as_matrix(a)
    codes = {"f64": 0, "f32": 1}
    if dtype not in codes:
        raise ValueError(f"dtype must be 'f64' or 'f32', got {dtype!r}")
    code = codes[dtype]
    if a.shape[0] > 0xFFFFFFFF or a.shape[1] > 0xFFFFFFFF:
        raise FormatError(f"shape {a.shape} exceeds the u32 header range")
    payload = np.ascontiguousarray(a, dtype=_BINARY_DTYPES[code]).tobytes()
    fp, owned = _open_for(dest, "wb")
    try:
        fp.write(_BINARY_HEADER.pack(_BINARY_MAGIC, a.shape[0], a.shape[1], code))
        fp.write(payload)
    finally:
        if owned:
            fp.close()


def read_matrix_binary(src: Union[str, Path, IO[bytes]]) -> np.ndarray:
    """Parse the binary format; always yields float64."""
    fp, owned = _open_for(src, "rb")
    try:
        blob = fp.read()
    finally:
        if owned:
            fp.close()
    if len(blob) < _BINARY_HEADER.size:
        raise FormatError(f"truncated header: {len(blob)} bytes")
    magic, rows, cols, code = _BINARY_HEADER.unpack_from(blob)
    if magic != _BINARY_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {_BINARY_MAGIC!r}")
    if code not in _BINARY_DTYPES:
        raise FormatError(f"unknown dtype code {code}")
    dt = _BINARY_DTYPES[code]
    expected = rows * cols * dt.itemsize
    payload = blob[_BINARY_HEADER.size:]
    if len(payload) != expected:
        raise FormatError(f"payload holds {len(payload)} bytes, expected {expected}")
    a = np.frombuffer(payload, dtype=dt).reshape(rows, cols)
    return as_matrix(a, "binary matrix")
