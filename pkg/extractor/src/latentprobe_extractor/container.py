"""Writer for the latentprobe binary feature container.

Layout (little-endian): magic ``LPFS``, u32 version, u32 n, u32 d,
u32 class count, then the n*d float32 matrix (row-major) and n u32
labels.  The write is atomic: a temp file in the destination directory is
renamed into place.
"""

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"LPFS"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def write_container(data: np.ndarray, labels: np.ndarray, class_count: int, path) -> None:
    data = np.ascontiguousarray(data, dtype="<f4")
    labels = np.asarray(labels)
    if data.ndim != 2 or data.shape[0] < 1:
        raise ValueError(f"feature matrix must be non-empty and 2-D, got shape {data.shape}")
    if labels.shape != (data.shape[0],):
        raise ValueError(f"need one label per row, got {labels.shape} for {data.shape[0]} rows")
    if not np.all(np.isfinite(data)):
        raise ValueError("feature matrix contains non-finite values")
    if labels.min() < 0 or labels.max() >= class_count:
        raise ValueError(f"labels must lie in [0, {class_count})")
    path = Path(path)
    n, d = data.shape
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, n, d, class_count))
            fh.write(data.tobytes())
            fh.write(labels.astype("<u4").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
