"""Labeled feature matrices: container IO, pairwise distances, chunking.

The on-disk container is a fixed little-endian layout: magic ``LPFS``,
u32 version, u32 n, u32 d, u32 class count, then the n*d feature matrix
as float32 (row-major) and n u32 labels.  Feature data is held as float32
in memory as well, so a save/load round trip is exact.

A CSV variant exists for small hand-written inputs: a header line
``# n,d,L`` followed by n rows of d feature values and one integer label.
Floats are written with 9 significant digits (enough to round-trip
float32) and parsed at full precision.
"""

import csv
import struct
from dataclasses import dataclass

import numpy as np

_MAGIC = b"LPFS"
_VERSION = 1
_HEADER = struct.Struct("<4sIIII")


class FeatureSetError(ValueError):
    """Invalid feature set or container content."""


class MalformedHeaderError(FeatureSetError):
    """Container or CSV header is missing or unparseable."""


class TruncatedPayloadError(FeatureSetError):
    """File ends before the payload declared in the header."""


class DimensionMismatchError(FeatureSetError):
    """Row width or array shape disagrees with the declared dimensions."""


class NonFiniteValueError(FeatureSetError):
    """A feature value is NaN or infinite."""


class LabelRangeError(FeatureSetError):
    """A label falls outside [0, class_count)."""


@dataclass(frozen=True)
class FeatureSet:
    """An immutable N x D feature matrix with one class label per row."""

    data: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float32, copy=True)
        if data.ndim != 2:
            raise DimensionMismatchError(f"feature matrix must be 2-D, got ndim={data.ndim}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise DimensionMismatchError(f"need n >= 1 and d >= 1, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise NonFiniteValueError("feature matrix contains NaN or infinite values")
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if labels.ndim != 1 or labels.shape[0] != data.shape[0]:
            raise DimensionMismatchError(
                f"labels must be 1-D of length {data.shape[0]}, got shape {labels.shape}"
            )
        if self.class_count < 1:
            raise LabelRangeError(f"class_count must be >= 1, got {self.class_count}")
        if labels.min() < 0 or labels.max() >= self.class_count:
            raise LabelRangeError(
                f"labels must lie in [0, {self.class_count}), got range "
                f"[{labels.min()}, {labels.max()}]"
            )
        data.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureSet):
            return NotImplemented
        return (
            self.class_count == other.class_count
            and np.array_equal(self.data, other.data)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True)
class Chunk:
    """One piece of a disjoint split, with the original row index per row."""

    features: FeatureSet
    indices: np.ndarray


def pairwise_distance(fs: FeatureSet, i: int, j: int) -> float:
    """Squared Euclidean distance between rows i and j."""
    n = fs.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"row indices ({i}, {j}) out of range for n={n}")
    diff = fs.data[i].astype(np.float64) - fs.data[j].astype(np.float64)
    return float(diff @ diff)


def squared_distances(fs: FeatureSet) -> np.ndarray:
    """All pairwise squared Euclidean distances, condensed upper-triangle order.

    Entry order matches ``scipy.spatial.distance.pdist``: pair (i, j) with
    i < j sits at index ``i*n - i*(i+1)//2 + (j - i - 1)``.
    """
    from scipy.spatial.distance import pdist

    return pdist(fs.data.astype(np.float64), metric="sqeuclidean")


def split_disjoint(fs: FeatureSet, chunks: int, seed: int) -> list[Chunk]:
    """Split rows into `chunks` disjoint balanced pieces, sizes differing by <= 1.

    Indices are shuffled with a seeded PCG64 generator and sliced
    contiguously, so the split is deterministic for a fixed seed and the
    index maps partition [0, n) exactly.
    """
    if not 1 <= chunks <= fs.n:
        raise FeatureSetError(f"chunks must be in [1, {fs.n}], got {chunks}")
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(fs.n)
    base, extra = divmod(fs.n, chunks)
    out = []
    start = 0
    for c in range(chunks):
        size = base + (1 if c < extra else 0)
        idx = np.sort(perm[start : start + size])
        start += size
        piece = FeatureSet(fs.data[idx], fs.labels[idx], fs.class_count)
        out.append(Chunk(features=piece, indices=idx))
    return out


def save_features(fs: FeatureSet, path) -> None:
    """Write the binary container; `load_features` inverts this exactly."""
    header = _HEADER.pack(_MAGIC, _VERSION, fs.n, fs.d, fs.class_count)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(fs.data, dtype="<f4").tobytes())
        fh.write(fs.labels.astype("<u4").tobytes())


def save_features_csv(fs: FeatureSet, path) -> None:
    """Write the CSV variant (header ``# n,d,L``, 9 significant digits)."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {fs.n},{fs.d},{fs.class_count}\n")
        for row, label in zip(fs.data, fs.labels):
            fields = [f"{float(v):.9g}" for v in row] + [str(int(label))]
            fh.write(",".join(fields) + "\n")


def load_features(path) -> FeatureSet:
    """Load a feature container, binary or CSV (sniffed by leading bytes)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] == _MAGIC:
        return _parse_binary(blob)
    if blob[:1] == b"#":
        return _parse_csv(blob)
    raise MalformedHeaderError("not a feature container: bad magic and no CSV header")


def _parse_binary(blob: bytes) -> FeatureSet:
    if len(blob) < _HEADER.size:
        raise MalformedHeaderError(f"header needs {_HEADER.size} bytes, file has {len(blob)}")
    magic, version, n, d, class_count = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise MalformedHeaderError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise MalformedHeaderError(f"unsupported container version {version}")
    if n < 1 or d < 1 or class_count < 1:
        raise MalformedHeaderError(f"header declares n={n}, d={d}, L={class_count}")
    expected = _HEADER.size + n * d * 4 + n * 4
    if len(blob) < expected:
        raise TruncatedPayloadError(f"payload needs {expected} bytes, file has {len(blob)}")
    if len(blob) > expected:
        raise FeatureSetError(f"{len(blob) - expected} trailing bytes after payload")
    off = _HEADER.size
    data = np.frombuffer(blob, dtype="<f4", count=n * d, offset=off).reshape(n, d)
    labels = np.frombuffer(blob, dtype="<u4", count=n, offset=off + n * d * 4)
    return FeatureSet(data=data, labels=labels.astype(np.int64), class_count=class_count)


def _parse_csv(blob: bytes) -> FeatureSet:
    text = blob.decode("utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise MalformedHeaderError("CSV header line '# n,d,L' missing")
    parts = lines[0][1:].strip().split(",")
    if len(parts) != 3:
        raise MalformedHeaderError(f"CSV header must hold three integers, got {lines[0]!r}")
    try:
        n, d, class_count = (int(p.strip()) for p in parts)
    except ValueError as exc:
        raise MalformedHeaderError(f"CSV header must hold three integers, got {lines[0]!r}") from exc
    rows = [r for r in csv.reader(lines[1:]) if r]
    if len(rows) < n:
        raise TruncatedPayloadError(f"CSV declares n={n} but has {len(rows)} rows")
    if len(rows) > n:
        raise FeatureSetError(f"CSV declares n={n} but has {len(rows)} rows")
    data = np.empty((n, d), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    for r, row in enumerate(rows):
        if len(row) != d + 1:
            raise DimensionMismatchError(f"CSV row {r} has {len(row)} fields, expected {d + 1}")
        try:
            data[r] = [float(v) for v in row[:d]]
        except ValueError as exc:
            raise FeatureSetError(f"CSV row {r} holds a non-numeric feature value") from exc
        try:
            labels[r] = int(row[d])
        except ValueError as exc:
            raise LabelRangeError(f"CSV row {r} label {row[d]!r} is not an integer") from exc
    return FeatureSet(data=data, labels=labels, class_count=class_count)
