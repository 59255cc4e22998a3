"""File formats: binary matrices, CSV stacks, path tables and PGM frames."""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .shiftops import ShiftPath

__all__ = [
    "MAGIC",
    "write_matrix",
    "read_matrix",
    "write_csv_matrix",
    "read_csv_matrix",
    "write_path_csv",
    "read_path_csv",
    "read_pgm",
    "write_pgm",
    "load_frames",
    "load_stack",
]

MAGIC = "ORKA1"


def write_matrix(path, array) -> None:
    """Header line ``ORKA1 f64 <rank> <dims...>`` then little-endian row-major doubles."""
    array = np.ascontiguousarray(array, dtype="<f8")
    header = " ".join([MAGIC, "f64", str(array.ndim)] + [str(s) for s in array.shape])
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii") + b"\n")
        fh.write(array.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        line = fh.readline().decode("ascii", errors="replace").split()
        if len(line) < 3 or line[0] != MAGIC:
            raise ValueError(f"{path}: not an {MAGIC} matrix file")
        if line[1] != "f64":
            raise ValueError(f"{path}: unsupported dtype tag {line[1]!r}")
        rank = int(line[2])
        if len(line) != 3 + rank:
            raise ValueError(f"{path}: header declares rank {rank} but lists {len(line) - 3} dims")
        shape = tuple(int(s) for s in line[3:])
        payload = fh.read()
    expected = 8 * int(np.prod(shape, dtype=np.int64))
    if len(payload) != expected:
        raise ValueError(f"{path}: payload has {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype="<f8").reshape(shape).astype(float)


def write_csv_matrix(path, array) -> None:
    """Rows are spatial samples, columns are measurements."""
    array = np.asarray(array, dtype=float)
    if array.ndim != 2:
        raise ValueError("CSV stacks must be two-dimensional")
    np.savetxt(path, array, delimiter=",", fmt="%.17g")


def read_csv_matrix(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))


def write_path_csv(path, shift_path: ShiftPath) -> None:
    shifts = shift_path.shifts.reshape(len(shift_path), -1)
    axes = shifts.shape[1]
    names = ["shift"] if axes == 1 else [f"shift_{a}" for a in range(axes)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index"] + names + ["denominator"])
        for i, row in enumerate(shifts):
            writer.writerow([i] + [int(v) for v in row] + [shift_path.denominator])


def read_path_csv(path) -> ShiftPath:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "index":
        raise ValueError(f"{path}: missing path header")
    body = [[int(v) for v in row] for row in rows[1:] if row]
    if not body:
        raise ValueError(f"{path}: empty path")
    table = np.array(body, dtype=np.int64)
    dens = set(table[:, -1].tolist())
    if len(dens) != 1:
        raise ValueError(f"{path}: inconsistent denominators")
    shifts = table[:, 1:-1]
    if shifts.shape[1] == 1:
        shifts = shifts[:, 0]
    return ShiftPath(shifts, dens.pop())


# --------------------------------------------------------------------------
# portable graymaps


def _tokens(data: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    while len(out) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        out.append(data[start:pos])
    return out, pos


def read_pgm(path) -> np.ndarray:
    """8- or 16-bit P5/P2 graymap normalized to ``[0, 1]``."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _tokens(data, 4, 0)
    width, height, maxval = int(w), int(h), int(maxval)
    if not 0 < maxval < 65536:
        raise ValueError(f"{path}: invalid maxval {maxval}")
    if magic == b"P5":
        pos += 1
        dtype = ">u2" if maxval > 255 else "u1"
        count = width * height
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
        img = raw.astype(float)
    elif magic == b"P2":
        vals, _ = _tokens(data, width * height, pos)
        img = np.array([int(v) for v in vals], dtype=float)
    else:
        raise ValueError(f"{path}: not a graymap ({magic!r})")
    return img.reshape(height, width) / maxval


def write_pgm(path, image, maxval: int = 255) -> None:
    """Binary graymap from values in ``[0, 1]``."""
    img = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    q = np.round(img * maxval).astype(">u2" if maxval > 255 else "u1")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode("ascii"))
        fh.write(q.tobytes())


def load_frames(directory) -> np.ndarray:
    """Stack of graymaps in lexicographic file order, shape (M1, M2, N)."""
    names = sorted(n for n in os.listdir(directory) if n.lower().endswith((".pgm", ".pnm")))
    if not names:
        raise ValueError(f"{directory}: no graymap frames found")
    frames = [read_pgm(os.path.join(directory, n)) for n in names]
    shape = frames[0].shape
    for name, f in zip(names, frames):
        if f.shape != shape:
            raise ValueError(f"{name}: frame shape {f.shape} differs from {shape}")
    return np.stack(frames, axis=-1)


def load_stack(path) -> np.ndarray:
    """Dispatch on the input kind: frame directory, CSV, or binary matrix."""
    path = Path(path)
    if path.is_dir():
        return load_frames(path)
    if path.suffix.lower() == ".csv":
        return read_csv_matrix(path)
    return read_matrix(path)
