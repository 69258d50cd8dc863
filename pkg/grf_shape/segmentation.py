"""
Bayesian segmentation with the Hamming loss: the max-marginal decision.
"""
import logging
from dataclasses import dataclass

import numpy as np

from grf_shape.core.grid import GrfModel
from grf_shape.core.evidence import Evidence
from grf_shape.core.appearance import AppearanceModel
from grf_shape.core.sampler import SamplerConfig, estimate_marginals
from grf_shape.errors import DimensionMismatch, ChannelMismatch

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    labelling: np.ndarray
    marginals: np.ndarray

    @property
    def confidence(self) -> np.ndarray:
        """max_k p(y_t = k | x) per node"""
        return self.marginals.max(axis=-1)


def decode_max_marginal(marginals: np.ndarray) -> np.ndarray:
    """
    y*_t = argmax_k p(y_t = k | x), ties go to the smallest label id
    """
    return np.argmax(np.asarray(marginals), axis=-1)


def hamming_loss(y, y_other) -> int:
    """Number of misclassified pixels"""
    y, y_other = np.asarray(y), np.asarray(y_other)
    if y.shape != y_other.shape:
        raise DimensionMismatch(f"Labellings of shape {y.shape} and {y_other.shape}")
    return int(np.count_nonzero(y != y_other))


def pixel_accuracy(y, y_true) -> float:
    return 1.0 - hamming_loss(y, y_true) / np.asarray(y).size


def expected_risk(marginals: np.ndarray, y) -> float:
    """
    Expected Hamming loss of deciding y: sum_t (1 - p(y_t | x))
    """
    marginals = np.asarray(marginals)
    y = np.asarray(y)
    if marginals.shape[:-1] != y.shape:
        raise DimensionMismatch(f"Marginals of shape {marginals.shape} and labelling of shape {y.shape}")
    chosen = np.take_along_axis(marginals, y[..., np.newaxis], axis=-1)[..., 0]
    return float(np.sum(1.0 - chosen))


def segment(model: GrfModel, appearance: AppearanceModel, image: np.ndarray, clamps=None, config: SamplerConfig | None = None) -> SegmentationResult:
    """
    Estimate the posterior marginals by sampling and decode them
    """
    evidence = Evidence(image=image, clamps=clamps)
    if evidence.channels != appearance.channels:
        raise ChannelMismatch(f"Image has {evidence.channels} channels, the appearance model {appearance.channels}")
    marginals = estimate_marginals(model, evidence, appearance, config)
    labelling = decode_max_marginal(marginals)
    log.info(f"segment: mean confidence {marginals.max(axis=-1).mean():.4f}")
    return SegmentationResult(labelling, marginals)
