"""Export penultimate-layer features of image classifiers into latentprobe containers."""

from .container import write_container
from .extract import ImageReadError, extract, list_labeled_images
from .registry import (
    EXPECTED_DIMS,
    REGISTRY,
    FeatureDimensionError,
    ModelSpec,
    UnknownModelError,
    get_model_spec,
)

__version__ = "0.1.0"
