"""
Conditionally independent appearance model p(x | y) = prod_t p(x_t | y_t)
with one Gaussian mixture per label.

Colour values are expected in [0, 1] (file_io.read_image normalizes 8 bit images).
"""
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from grf_shape.core.grid import LabelSet, validate_labelling, GridDomain
from grf_shape.errors import InvalidLabel, ChannelMismatch, DimensionMismatch, EmptyAssignment

log = logging.getLogger(__name__)

# relative to the mean channel variance of the image
REGULARIZATION_FACTOR = 1e-4
MIN_REGULARIZATION = 1e-6


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    weight: float
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.array(self.mean, dtype=float))
        cov = np.atleast_2d(np.array(self.covariance, dtype=float))
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise DimensionMismatch(f"Covariance of shape {cov.shape} does not fit a mean of shape {mean.shape}")
        if not self.weight > 0:
            raise ValueError(f"Component weight must be positive, got {self.weight}")
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    def logpdf(self, pixels: np.ndarray) -> np.ndarray:
        """log N(x; mean, covariance) for pixels of shape (N, C)"""
        return np.reshape(multivariate_normal.logpdf(pixels, mean=self.mean, cov=self.covariance), -1)


@dataclass(frozen=True, eq=False)
class AppearanceModel:
    """
    @param channels: number of colour channels C (1 or 3)
    @param mixtures: per label a tuple of GaussianComponent
    @param regularization: lower bound for covariance eigenvalues
    """
    channels: int
    mixtures: tuple
    regularization: float = MIN_REGULARIZATION

    def __post_init__(self):
        mixtures = tuple(tuple(m) for m in self.mixtures)
        object.__setattr__(self, "mixtures", mixtures)
        for k, mixture in enumerate(mixtures):
            if len(mixture) == 0:
                raise ValueError(f"Label {k} has an empty mixture")
            total = sum(c.weight for c in mixture)
            if abs(total - 1) > 1e-9:
                raise ValueError(f"Mixture weights of label {k} sum to {total}")
            for c in mixture:
                if c.mean.shape[0] != self.channels:
                    raise ChannelMismatch(f"Component of label {k} has {c.mean.shape[0]} channels, expected {self.channels}")

    @property
    def n_labels(self) -> int:
        return len(self.mixtures)

    def mixture(self, k: int):
        if not 0 <= k < self.n_labels:
            raise InvalidLabel(f"Label {k} not in 0..{self.n_labels - 1}")
        return self.mixtures[k]


def _mixture_loglik(mixture, pixels: np.ndarray) -> np.ndarray:
    """log sum_m w_m N(x; mu_m, Sigma_m) for pixels of shape (N, C)"""
    terms = np.stack([np.log(c.weight) + c.logpdf(pixels) for c in mixture], axis=1)
    return logsumexp(terms, axis=1)


def _as_pixels(image: np.ndarray, channels: int) -> np.ndarray:
    image = np.asarray(image, dtype=float)
    if image.ndim == 2:
        image = image[:, :, np.newaxis]
    if image.shape[2] != channels:
        raise ChannelMismatch(f"Image has {image.shape[2]} channels, the appearance model {channels}")
    return image.reshape(-1, channels)


def pixel_loglik(app: AppearanceModel, k: int, c) -> float:
    """log p(c | k)"""
    mixture = app.mixture(k)
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if c.shape != (app.channels,):
        raise ChannelMismatch(f"Colour value has shape {c.shape}, expected ({app.channels},)")
    return float(_mixture_loglik(mixture, c.reshape(1, -1))[0])


def likelihood_field(app: AppearanceModel, image: np.ndarray) -> np.ndarray:
    """
    @returns array (H, W, K) with field[y, x, k] = log p(x_t | k)
    """
    image = np.asarray(image, dtype=float)
    H, W = image.shape[:2]
    pixels = _as_pixels(image, app.channels)
    field = np.stack([_mixture_loglik(mixture, pixels) for mixture in app.mixtures], axis=1)
    return field.reshape(H, W, app.n_labels)


def regularize_covariance(cov: np.ndarray, eps: float) -> np.ndarray:
    """Symmetrize and clip the eigenvalues at eps"""
    cov = 0.5 * (cov + cov.T)
    values, vectors = np.linalg.eigh(cov)
    values = np.maximum(values, eps)
    return (vectors * values) @ vectors.T


def _regularization_for(pixels: np.ndarray) -> float:
    variance = float(np.mean(np.var(pixels, axis=0))) if pixels.shape[0] > 1 else 0.0
    return max(REGULARIZATION_FACTOR * variance, MIN_REGULARIZATION)


def init_appearance(image: np.ndarray, labels: LabelSet, components_per_label: int = 4, seed: int = 0) -> AppearanceModel:
    """
    Means are drawn from random image pixels, covariances are the global image covariance
    plus the regularization, all weights are equal.
    """
    if components_per_label < 1:
        raise ValueError(f"init_appearance: components_per_label must be >= 1, got {components_per_label}")
    image = np.asarray(image, dtype=float)
    channels = 1 if image.ndim == 2 else image.shape[2]
    pixels = _as_pixels(image, channels)
    rng = np.random.default_rng(seed)
    reg = _regularization_for(pixels)
    if pixels.shape[0] > 1:
        global_cov = np.atleast_2d(np.cov(pixels, rowvar=False, bias=True))
    else:
        global_cov = np.zeros((channels, channels))
    cov = global_cov + reg * np.eye(channels)
    mixtures = []
    for _ in range(labels.count):
        idx = rng.choice(pixels.shape[0], size=components_per_label, replace=pixels.shape[0] < components_per_label)
        mixtures.append(tuple(GaussianComponent(1.0 / components_per_label, pixels[i], cov) for i in idx))
    return AppearanceModel(channels, tuple(mixtures), reg)


def _em_step(mixture, pixels: np.ndarray, step: float, reg: float):
    """One responsibility weighted EM step on pixels (N, C), blended with the old parameters"""
    log_terms = np.stack([np.log(c.weight) + c.logpdf(pixels) for c in mixture], axis=1)
    resp = np.exp(log_terms - logsumexp(log_terms, axis=1, keepdims=True))
    soft_counts = resp.sum(axis=0)
    N = pixels.shape[0]
    new = []
    for m, c in enumerate(mixture):
        if soft_counts[m] < 1e-12:
            # component received nothing, keep it
            weight, mean, cov = c.weight, c.mean, c.covariance
        else:
            weight = soft_counts[m] / N
            mean = resp[:, m] @ pixels / soft_counts[m]
            shifted = pixels - mean
            cov = (resp[:, m, np.newaxis] * shifted).T @ shifted / soft_counts[m]
        weight = (1 - step) * c.weight + step * weight
        mean = (1 - step) * c.mean + step * mean
        cov = regularize_covariance((1 - step) * c.covariance + step * cov, reg)
        new.append((weight, mean, cov))
    total = sum(w for w, _, _ in new)
    return tuple(GaussianComponent(w / total, mean, cov) for w, mean, cov in new)


def update_appearance(app: AppearanceModel, image: np.ndarray, sampled_labellings: list, step: float) -> AppearanceModel:
    """
    Stochastic EM: per label, one EM step on all pixels that carry this label in any of the
    sampled labellings, blended with the old parameters by step.
    Labels without pixels keep their mixture, an EmptyAssignment warning is issued.
    """
    if not 0 <= step <= 1:
        raise ValueError(f"update_appearance: step must be in [0, 1], got {step}")
    if step == 0:
        return app
    pixels = _as_pixels(image, app.channels)
    H, W = np.asarray(image).shape[:2]
    domain = GridDomain(W, H)
    label_set = LabelSet(app.n_labels)
    flat = np.concatenate([validate_labelling(domain, label_set, y).ravel() for y in sampled_labellings])
    all_pixels = np.tile(pixels, (len(sampled_labellings), 1))
    mixtures = []
    for k, mixture in enumerate(app.mixtures):
        selected = all_pixels[flat == k]
        if selected.shape[0] == 0:
            warnings.warn(f"update_appearance: label {k} received no pixels, keeping its mixture", EmptyAssignment)
            mixtures.append(mixture)
            continue
        mixtures.append(_em_step(mixture, selected, step, app.regularization))
    return AppearanceModel(app.channels, tuple(mixtures), app.regularization)


def fit_appearance(image: np.ndarray, y, labels: LabelSet, components_per_label: int = 4, seed: int = 0, iterations: int = 20) -> AppearanceModel:
    """
    Supervised fit: initialize the mixture of every label from its own pixels and run EM steps on y
    """
    image = np.asarray(image, dtype=float)
    channels = 1 if image.ndim == 2 else image.shape[2]
    pixels = _as_pixels(image, channels)
    y = np.asarray(y).ravel()
    app = init_appearance(image, labels, components_per_label, seed)
    rng = np.random.default_rng(seed)
    mixtures = []
    for k, mixture in enumerate(app.mixtures):
        own = pixels[y == k]
        if own.shape[0] == 0:
            mixtures.append(mixture)
            continue
        idx = rng.choice(own.shape[0], size=len(mixture), replace=own.shape[0] < len(mixture))
        mixtures.append(tuple(GaussianComponent(c.weight, own[i], c.covariance) for c, i in zip(mixture, idx)))
    app = AppearanceModel(channels, tuple(mixtures), app.regularization)
    for _ in range(iterations):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EmptyAssignment)
            app = update_appearance(app, image, [y.reshape(image.shape[:2])], 1.0)
    return app


def shared_appearance(labels: LabelSet, mixture) -> AppearanceModel:
    """All labels share one mixture, the likelihood field is then constant across labels"""
    mixture = tuple(mixture)
    return AppearanceModel(mixture[0].mean.shape[0], tuple(mixture for _ in range(labels.count)))


def mixture_data_loglik(app: AppearanceModel, k: int, pixels: np.ndarray) -> float:
    """Total log-likelihood of pixels (N, C) under the mixture of label k"""
    return float(_mixture_loglik(app.mixture(k), np.asarray(pixels, dtype=float).reshape(-1, app.channels)).sum())
