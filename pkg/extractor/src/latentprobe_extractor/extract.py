"""Feature extraction: image directory -> latentprobe feature container.

Labels come from the directory structure: each subdirectory of the image
root is one class (sorted by name); a flat directory is a single class.
Rows are sorted by file path, so extraction order is deterministic.
"""

from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .container import write_container
from .registry import FeatureDimensionError, ModelSpec, get_model_spec

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".webp"}


class ImageReadError(RuntimeError):
    """An input image could not be opened or decoded."""


def list_labeled_images(image_dir) -> tuple[list[Path], np.ndarray, int]:
    """Sorted image paths, per-image class labels, and the class count."""
    root = Path(image_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"image directory {root} does not exist")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if class_dirs:
        paths, labels = [], []
        for cid, sub in enumerate(class_dirs):
            members = sorted(
                p for p in sub.rglob("*") if p.suffix.lower() in IMAGE_SUFFIXES
            )
            paths.extend(members)
            labels.extend([cid] * len(members))
        return paths, np.asarray(labels, dtype=np.int64), len(class_dirs)
    paths = sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    return paths, np.zeros(len(paths), dtype=np.int64), 1


def extract(
    model: str | ModelSpec,
    image_dir,
    out,
    limit: int | None = None,
    batch_size: int = 8,
    device: str = "cpu",
    pretrained: bool = False,
) -> dict:
    """Run the model over the images and write the feature container.

    Returns a summary dict (model, n, d, class_count, output path).  The
    extracted width is cross-checked against the registry table and a
    mismatch is a hard error.
    """
    spec = get_model_spec(model) if isinstance(model, str) else model
    paths, labels, class_count = list_labeled_images(image_dir)
    if limit is not None:
        if limit < 1:
            raise ValueError(f"limit must be >= 1, got {limit} (empty containers are invalid)")
        paths, labels = paths[:limit], labels[:limit]
    if not paths:
        raise ValueError(f"no images found under {image_dir}")

    net = spec.build(pretrained).to(device).eval()
    transform = spec.transform()
    rows = []
    with torch.no_grad():
        for start in range(0, len(paths), batch_size):
            batch_paths = paths[start : start + batch_size]
            tensors = []
            for p in batch_paths:
                try:
                    with Image.open(p) as img:
                        tensors.append(transform(img.convert("RGB")))
                except FileNotFoundError:
                    raise
                except Exception as exc:
                    raise ImageReadError(f"cannot read image {p}: {exc}") from exc
            feats = net(torch.stack(tensors).to(device))
            rows.append(feats.cpu().numpy())
    data = np.concatenate(rows, axis=0)
    if data.shape[1] != spec.expected_dim:
        raise FeatureDimensionError(
            f"{spec.name} produced {data.shape[1]}-dim features, table says {spec.expected_dim}"
        )
    write_container(data, labels, class_count, out)
    return {
        "model": spec.name,
        "n": int(data.shape[0]),
        "d": int(data.shape[1]),
        "class_count": class_count,
        "out": str(out),
    }
