"""
Evidence B = (x, y_V): an optional image and an optional partial labelling.
"""
from dataclasses import dataclass

import numpy as np

from grf_shape.core.grid import GridDomain, LabelSet, validate_labelling
from grf_shape.errors import DimensionMismatch, ClampConflict

FREE = -1


@dataclass(frozen=True, eq=False)
class Evidence:
    """
    @param image: float array (H, W) or (H, W, C) with values in [0, 1], or None
    @param clamps: int array (H, W), FREE (-1) for free nodes, otherwise the clamped label, or None
    """
    image: np.ndarray | None = None
    clamps: np.ndarray | None = None

    def __post_init__(self):
        if self.image is not None:
            image = np.array(self.image, dtype=float)
            if image.ndim == 2:
                image = image[:, :, np.newaxis]
            if image.ndim != 3:
                raise DimensionMismatch(f"Image must have 2 or 3 dimensions, got shape {image.shape}")
            image.flags.writeable = False
            object.__setattr__(self, "image", image)
        if self.clamps is not None:
            clamps = np.array(self.clamps, dtype=np.int64)
            if clamps.ndim != 2:
                raise DimensionMismatch(f"Clamps must be a 2d array, got shape {clamps.shape}")
            if self.image is not None and clamps.shape != self.image.shape[:2]:
                raise DimensionMismatch(f"Clamps {clamps.shape} and image {self.image.shape[:2]} have different sizes")
            clamps.flags.writeable = False
            object.__setattr__(self, "clamps", clamps)

    @classmethod
    def from_labelling(cls, y, image=None) -> "Evidence":
        """Fully clamped evidence (supervised learning)"""
        return cls(image=image, clamps=np.asarray(y))

    @property
    def channels(self) -> int:
        return 0 if self.image is None else self.image.shape[2]

    @property
    def is_empty(self) -> bool:
        return self.image is None and (self.clamps is None or not np.any(self.clamps != FREE))

    def clamp_mask(self, shape) -> np.ndarray:
        """Boolean (H, W) mask of clamped nodes"""
        if self.clamps is None:
            return np.zeros(shape, dtype=bool)
        return self.clamps != FREE

    def validate(self, domain: GridDomain, labels: LabelSet):
        if self.image is not None and self.image.shape[:2] != domain.shape:
            raise DimensionMismatch(f"Image of shape {self.image.shape[:2]} does not match domain {domain}")
        if self.clamps is not None:
            if self.clamps.shape != domain.shape:
                raise DimensionMismatch(f"Clamps of shape {self.clamps.shape} do not match domain {domain}")
            clamped = self.clamps[self.clamps != FREE]
            if clamped.size and (clamped.min() < 0 or clamped.max() >= labels.count):
                raise DimensionMismatch(f"Clamped labels outside of 0..{labels.count - 1}")


def apply_clamps(evidence: Evidence | None, y: np.ndarray) -> np.ndarray:
    """Copy of y where clamped nodes carry their clamp"""
    y = np.array(y)
    if evidence is not None and evidence.clamps is not None:
        mask = evidence.clamps != FREE
        y[..., mask] = evidence.clamps[mask]
    return y


def check_consistent(evidence: Evidence | None, domain: GridDomain, labels: LabelSet, y) -> np.ndarray:
    y = validate_labelling(domain, labels, y)
    if evidence is not None and evidence.clamps is not None:
        mask = evidence.clamps != FREE
        if np.any(y[mask] != evidence.clamps[mask]):
            raise ClampConflict("Labelling disagrees with the clamped labels")
    return y
