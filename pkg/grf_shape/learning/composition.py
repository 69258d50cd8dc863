"""
Composition of two separately learned shape models into one joint model.

The joint label set is the union of the part labels of both models plus one shared
background label. The a-posteriori statistics of both models are re-indexed to the
joint label set, mixed with weights w1, w2 and a small uniform component w0, and the
joint model is learned from the mixed statistics.
"""
import logging
import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from grf_shape.core.grid import GrfModel, LabelSet, NeighborhoodStructure, SufficientStatistics, build_model, zero_potentials
from grf_shape.core.appearance import AppearanceModel, GaussianComponent
from grf_shape.core.sampler import SamplerConfig, estimate_statistics
from grf_shape.learning.potentials import LearningSchedule, learn_from_statistics
from grf_shape.errors import (MappingMismatch, IncompatibleIndexing, IncompatibleDomains, IncompatibleStatistics,
                              ChannelMismatch, WeightRegimeWarning)
from grf_shape.settings import settings

log = logging.getLogger(__name__)

JOINT_BACKGROUND = 0


@dataclass(frozen=True, eq=False)
class LabelMapping:
    """
    @param maps: per component model an int array: component label -> joint label
    @param backgrounds: per component model its background label
    @param n_joint: size of the joint label set
    """
    maps: tuple
    backgrounds: tuple
    n_joint: int

    def __post_init__(self):
        maps = tuple(np.asarray(m, dtype=np.int64) for m in self.maps)
        object.__setattr__(self, "maps", maps)
        if len(maps) != len(self.backgrounds):
            raise MappingMismatch(f"{len(maps)} maps but {len(self.backgrounds)} background labels")
        if self.n_joint != sum(m.shape[0] - 1 for m in maps) + 1:
            raise MappingMismatch(f"Joint label set of size {self.n_joint} does not fit the component label sets")
        used = set()
        for i, (m, b) in enumerate(zip(maps, self.backgrounds)):
            if not 0 <= b < m.shape[0]:
                raise MappingMismatch(f"Background label {b} of model {i} outside of its label set")
            if m[b] != JOINT_BACKGROUND:
                raise MappingMismatch(f"Background label of model {i} must map to the joint background")
            parts = [int(j) for k, j in enumerate(m) if k != b]
            for j in parts:
                if not 0 <= j < self.n_joint or j == JOINT_BACKGROUND or j in used:
                    raise MappingMismatch(f"Part labels of model {i} do not map injectively into the joint label set")
                used.add(j)

    @classmethod
    def joint(cls, n_labels1: int, n_labels2: int, background1: int = 0, background2: int = 0) -> "LabelMapping":
        """Joint background 0, then the parts of model 1, then the parts of model 2"""
        maps = []
        next_label = 1
        for K, b in ((n_labels1, background1), (n_labels2, background2)):
            m = np.zeros(K, dtype=np.int64)
            for k in range(K):
                if k != b:
                    m[k] = next_label
                    next_label += 1
            maps.append(m)
        return cls(tuple(maps), (background1, background2), next_label)

    @classmethod
    def identity(cls, n_labels: int) -> "LabelMapping":
        return cls((np.arange(n_labels),), (0,), n_labels)

    def component(self, joint_label: int) -> int | None:
        """Index of the component model a joint part label belongs to, None for the background"""
        for i, m in enumerate(self.maps):
            if joint_label != JOINT_BACKGROUND and joint_label in m:
                return i
        return None

    def joint_labels(self, *label_sets: LabelSet) -> LabelSet:
        names = ["background"] + [""] * (self.n_joint - 1)
        for i, (m, labels) in enumerate(zip(self.maps, label_sets)):
            for k, j in enumerate(m):
                if j != JOINT_BACKGROUND:
                    names[j] = f"{i + 1}:{labels.name(k)}"
        return LabelSet(self.n_joint, tuple(names))


@dataclass(frozen=True)
class MixtureWeights:
    w0: float
    w1: float
    w2: float

    def __post_init__(self):
        if not (self.w0 > 0 and self.w1 > 0 and self.w2 > 0):
            raise ValueError(f"MixtureWeights: all weights must be > 0, got {self}")
        if self.w0 >= min(self.w1, self.w2) / 10:
            warnings.warn(f"MixtureWeights: w0={self.w0} is not much smaller than w1={self.w1}, w2={self.w2}", WeightRegimeWarning)

    @classmethod
    def default(cls, n_joint: int, epsilon: float | None = None) -> "MixtureWeights":
        """w1 = w2 = (1 - eps) / 2, w0 = eps / (number of joint label pairs)"""
        epsilon = epsilon or settings["composition_epsilon"]
        return cls(epsilon / n_joint**2, (1 - epsilon) / 2, (1 - epsilon) / 2)


def extend_statistics(stats: SufficientStatistics, mapping: LabelMapping, i: int) -> SufficientStatistics:
    """
    Re-index per edge frequencies of component model i to the joint label set.
    Entries with labels that model i does not know are zero.
    """
    if not 0 <= i < len(mapping.maps):
        raise MappingMismatch(f"No component model {i}")
    m = mapping.maps[i]
    if stats.n_labels != m.shape[0]:
        raise MappingMismatch(f"Statistics over {stats.n_labels} labels, model {i} of the mapping has {m.shape[0]}")
    freq = stats.frequencies()
    J = mapping.n_joint
    unary = np.zeros(J)
    unary[m] = freq.unary
    pairwise = {}
    for a, n in freq.pairwise.items():
        table = np.zeros((J, J))
        table[np.ix_(m, m)] = n
        pairwise[a] = table
    return SufficientStatistics(unary, pairwise, "frequencies")


def mix_statistics(ext1: SufficientStatistics, ext2: SufficientStatistics, w: MixtureWeights, mapping: LabelMapping | None = None) -> SufficientStatistics:
    """
    Per table: w1 * ext1 + w2 * ext2 + w0, then normalized to sum 1.
    Within class blocks get w_i * ext_i + w0, background/background gets both terms,
    cross class entries get w0 only.
    """
    if ext1.n_labels != ext2.n_labels or set(ext1.offsets) != set(ext2.offsets):
        raise IncompatibleIndexing("Extended statistics are indexed by different label sets or offsets")
    if mapping is not None and ext1.n_labels != mapping.n_joint:
        raise IncompatibleIndexing(f"Statistics over {ext1.n_labels} labels, the joint label set has {mapping.n_joint}")

    def mix(n1, n2):
        n = w.w1 * n1 + w.w2 * n2 + w.w0
        return n / n.sum()
    return SufficientStatistics(mix(ext1.unary, ext2.unary),
                                {a: mix(n, ext2.pairwise[a]) for a, n in ext1.pairwise.items()},
                                "frequencies")


def _aligned(model: GrfModel, stats: SufficientStatistics, offsets: list, config: SamplerConfig | None) -> SufficientStatistics:
    """
    Statistics of model for every offset in offsets: given tables (transposed for -a),
    tables of offsets that the statistics lack are estimated by prior sampling.
    """
    if stats.n_labels != model.labels.count:
        raise IncompatibleStatistics(f"Statistics over {stats.n_labels} labels for a model with {model.labels.count}")
    own = [a for a in model.structure.nonzero if a not in stats.pairwise]
    if own:
        raise IncompatibleStatistics(f"Statistics lack the model offsets {', '.join(str(a) for a in own)}")
    freq = stats.frequencies()
    pairwise = {}
    missing = []
    for a in offsets:
        if a in freq.pairwise:
            pairwise[a] = freq.pairwise[a]
        elif -a in freq.pairwise:
            pairwise[a] = freq.pairwise[-a].T
        else:
            missing.append(a)
    if missing:
        log.info(f"compose_models: estimating prior statistics for {len(missing)} offsets")
        estimated = estimate_statistics(model, None, None, config, offsets=missing).frequencies()
        pairwise.update(estimated.pairwise)
    return SufficientStatistics(freq.unary, pairwise, "frequencies")


@dataclass(frozen=True, eq=False)
class CompositionResult:
    model: GrfModel
    mapping: LabelMapping
    statistics: SufficientStatistics
    trace: pd.DataFrame


def compose_models(m1: GrfModel, stats1: SufficientStatistics, m2: GrfModel, stats2: SufficientStatistics, w: MixtureWeights | None = None,
                   schedule: LearningSchedule | None = None, background1: int = 0, background2: int = 0, config: SamplerConfig | None = None, update_func=None) -> CompositionResult:
    """
    Learn a joint model of two component models from their mixed a-posteriori statistics.
    The joint structure is the union of both structures.
    """
    if m1.domain != m2.domain:
        raise IncompatibleDomains(f"Models are defined on {m1.domain} and {m2.domain}")
    mapping = LabelMapping.joint(m1.labels.count, m2.labels.count, background1, background2)
    w = w or MixtureWeights.default(mapping.n_joint)
    offsets = list(m1.structure.nonzero)
    for a in m2.structure.nonzero:
        if a not in offsets and -a not in offsets:
            offsets.append(a)
    ext1 = extend_statistics(_aligned(m1, stats1, offsets, config), mapping, 0)
    ext2 = extend_statistics(_aligned(m2, stats2, offsets, config), mapping, 1)
    mixed = mix_statistics(ext1, ext2, w, mapping)
    structure = NeighborhoodStructure.from_offsets(offsets)
    labels = mapping.joint_labels(m1.labels, m2.labels)
    joint = build_model(m1.domain, labels, structure, zero_potentials(structure, labels))
    log.info(f"compose_models: joint model with {labels.count} labels and {len(offsets)} offsets")
    result = learn_from_statistics(joint, mixed, schedule, update_func)
    return CompositionResult(result.model, mapping, mixed, result.trace)


def compose_appearance(app1: AppearanceModel, app2: AppearanceModel, mapping: LabelMapping) -> AppearanceModel:
    """
    Joint appearance by re-indexing. The joint background mixture holds the components
    of both background mixtures with halved weights.
    """
    if app1.channels != app2.channels:
        raise ChannelMismatch(f"Appearance models with {app1.channels} and {app2.channels} channels")
    mixtures = [None] * mapping.n_joint
    background = []
    for app, m, b in zip((app1, app2), mapping.maps, mapping.backgrounds):
        if app.n_labels != m.shape[0]:
            raise MappingMismatch(f"Appearance model with {app.n_labels} labels, mapping expects {m.shape[0]}")
        for k, j in enumerate(m):
            if k == b:
                background.extend(GaussianComponent(c.weight / 2, c.mean, c.covariance) for c in app.mixture(k))
            else:
                mixtures[j] = app.mixture(k)
    mixtures[JOINT_BACKGROUND] = tuple(background)
    return AppearanceModel(app1.channels, tuple(mixtures), max(app1.regularization, app2.regularization))
