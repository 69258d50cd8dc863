"""
Greedy estimation of the neighbourhood structure A.

grow_structure:   start with A = {0}, repeatedly add the candidate whose posterior and
                  prior pair statistics differ most (largest gradient component).
shrink_structure: start with the full candidate range, repeatedly remove the offset
                  with the smallest potential norm ||u_a|| (canonical gauge).
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.stats import entropy

from grf_shape.core.grid import (GrfModel, GridDomain, LabelSet, NeighborhoodStructure, Offset, SufficientStatistics,
                                 as_offset, build_model, zero_potentials, potential_norms)
from grf_shape.core.appearance import AppearanceModel
from grf_shape.core.sampler import SamplerConfig, estimate_statistics
from grf_shape.learning.potentials import LearningSchedule, TrainingEvent, learn_potentials
from grf_shape.errors import CandidateInStructure, RangeExhausted
from grf_shape.settings import settings

log = logging.getLogger(__name__)

METRICS = ("euclid", "kl")
# smoothing of empty pair frequencies for the KL divergence
KL_EPSILON = 1e-9
STRUCTURE_TRACE_COLUMNS = ["step", "action", "dx", "dy", "score", "likelihood proxy"]


@dataclass(frozen=True)
class CandidateRange:
    """
    All offsets a with |dx|, |dy| <= d, one representative per pair {a, -a}, zero excluded
    """
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"CandidateRange: d must be >= 1, got {self.d}")

    def candidates(self) -> list[Offset]:
        offsets = [Offset(dx, dy) for dy in range(0, self.d + 1) for dx in range(-self.d, self.d + 1)]
        return sorted((a for a in offsets if not a.is_zero() and a.canonical() == a), key=Offset.sort_key)

    def structure(self) -> NeighborhoodStructure:
        return NeighborhoodStructure.from_offsets(self.candidates())

    def __len__(self):
        return ((2 * self.d + 1) ** 2 - 1) // 2


@dataclass(frozen=True)
class StructureStep:
    action: str
    offset: Offset
    score: float
    proxy: float


@dataclass
class StructureTrace:
    """Append-only log of the structure steps"""
    steps: list = field(default_factory=list)

    def append(self, action: str, offset: Offset, score: float, proxy: float):
        self.steps.append(StructureStep(action, offset, float(score), float(proxy)))

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def to_dataframe(self) -> pd.DataFrame:
        rows = [(i, s.action, s.offset.dx, s.offset.dy, s.score, s.proxy) for i, s in enumerate(self.steps)]
        return pd.DataFrame(rows, columns=STRUCTURE_TRACE_COLUMNS)


def _score(posterior: np.ndarray, prior: np.ndarray, metric: str) -> float:
    if metric == "euclid":
        return float(np.sum((posterior - prior) ** 2))
    return float(entropy(posterior.ravel() + KL_EPSILON, prior.ravel() + KL_EPSILON))


def _posterior_frequencies(model: GrfModel, events: list, appearance, candidates: list, config: SamplerConfig) -> SufficientStatistics:
    total = sum(e.weight for e in events)
    mean = None
    for j, event in enumerate(events):
        stats = estimate_statistics(model, event.evidence, appearance, config, offsets=candidates, chain_index=j + 1).frequencies()
        stats = stats.scaled(event.weight / total)
        mean = stats if mean is None else mean + stats
    return mean


def _scores(model: GrfModel, events: list, appearance, candidates: list, metric: str, config: SamplerConfig | None) -> dict[Offset, float]:
    if metric not in METRICS:
        raise ValueError(f"Unknown metric '{metric}', must be one of {METRICS}")
    candidates = [as_offset(a) for a in candidates]
    for a in candidates:
        if a in model.structure or -a in model.structure:
            raise CandidateInStructure(f"Candidate {a} is already part of the structure")
    config = config or SamplerConfig(burn_in=settings["learning_burn_in"], n_samples=settings["samples_per_expectation"])
    # candidates carry zero potentials, sampling the current model is enough
    posterior = _posterior_frequencies(model, events, appearance, candidates, config)
    prior = estimate_statistics(model, None, None, config, offsets=candidates, chain_index=0).frequencies()
    return {a: _score(posterior.pairwise[a], prior.pairwise[a], metric) for a in candidates}


def candidate_scores(model: GrfModel, event: TrainingEvent, appearance: AppearanceModel | None = None, candidates=None, metric: str = "euclid", config: SamplerConfig | None = None) -> dict[Offset, float]:
    """
    Score candidate offsets by the distance between their posterior and prior pair frequencies.

    @param metric: 'euclid' (sum of squared differences) or 'kl' (KL(posterior || prior))
    @returns dict offset -> score
    """
    return _scores(model, [event], appearance, list(candidates or []), metric, config)


def _unary_model(domain: GridDomain, labels: LabelSet) -> GrfModel:
    structure = NeighborhoodStructure.from_offsets([])
    return build_model(domain, labels, structure, zero_potentials(structure, labels))


def _learn(model, events, appearance, schedule, update_func):
    result = learn_potentials(model, events, appearance, schedule, update_func)
    residual = float(result.trace["moment residual"].iloc[-1]) if len(result.trace) else 0.0
    return result.model, residual


def grow_structure(events: list, labels: LabelSet, domain: GridDomain, candidate_range: CandidateRange, target_size: int, schedule: LearningSchedule | None = None,
                   appearance: AppearanceModel | None = None, metric: str = "euclid", config: SamplerConfig | None = None, budget_fraction: float | None = None, update_func=None) -> tuple[GrfModel, StructureTrace]:
    """
    Start with unary potentials only and add the best scoring candidate until the structure has target_size offsets.
    Potentials are warm started, the search uses a reduced learning budget, the final structure the full one.
    """
    schedule = schedule or LearningSchedule.from_settings()
    budget_fraction = budget_fraction or settings["structure_budget_fraction"]
    candidates = candidate_range.candidates()
    if target_size < 0:
        raise ValueError(f"grow_structure: target_size must be >= 0, got {target_size}")
    if target_size > len(candidates):
        raise RangeExhausted(f"Target size {target_size} exceeds the {len(candidates)} candidates of range d={candidate_range.d}")
    search_schedule = schedule.scaled(budget_fraction)
    model = _unary_model(domain, labels)
    trace = StructureTrace()
    while len(model.structure.nonzero) < target_size:
        model, residual = _learn(model, events, appearance, search_schedule, update_func)
        remaining = [a for a in candidates if a not in model.structure]
        scores = _scores(model, events, appearance, remaining, metric, config)
        best = min(remaining, key=lambda a: (-scores[a], a.sort_key()))
        log.info(f"grow_structure: adding {best} with score {scores[best]:.4g}")
        trace.append("add", best, scores[best], residual)
        model = model.with_structure(model.structure.with_offset(best))
    model, _ = _learn(model, events, appearance, schedule, update_func)
    return model, trace


def shrink_structure(events: list, labels: LabelSet, domain: GridDomain, candidate_range: CandidateRange, target_size: int, schedule: LearningSchedule | None = None,
                     appearance: AppearanceModel | None = None, budget_fraction: float | None = None, update_func=None) -> tuple[GrfModel, StructureTrace]:
    """
    Start with the full candidate range and remove the offset with the smallest ||u_a|| until target_size offsets remain.
    Ties are broken towards the smallest offset in (dy, dx) order.
    """
    schedule = schedule or LearningSchedule.from_settings()
    budget_fraction = budget_fraction or settings["structure_budget_fraction"]
    if target_size < 0:
        raise ValueError(f"shrink_structure: target_size must be >= 0, got {target_size}")
    if target_size > len(candidate_range):
        raise RangeExhausted(f"Target size {target_size} exceeds the {len(candidate_range)} candidates of range d={candidate_range.d}")
    search_schedule = schedule.scaled(budget_fraction)
    structure = candidate_range.structure()
    model = build_model(domain, labels, structure, zero_potentials(structure, labels))
    trace = StructureTrace()
    while len(model.structure.nonzero) > target_size:
        model, residual = _learn(model, events, appearance, search_schedule, update_func)
        worst, norm = smallest_norm(model)
        log.info(f"shrink_structure: removing {worst} with norm {norm:.4g}")
        trace.append("remove", worst, norm, residual)
        model = model.with_structure(model.structure.without_offset(worst))
    model, _ = _learn(model, events, appearance, schedule, update_func)
    return model, trace


def smallest_norm(model: GrfModel) -> tuple[Offset, float]:
    """Offset with the smallest canonical Frobenius norm, ties -> smallest (dy, dx)"""
    norms = potential_norms(model.potentials)
    worst = min(norms, key=lambda a: (norms[a], a.sort_key()))
    return worst, norms[worst]


def structure_histogram(structures: list, d: int) -> np.ndarray:
    """
    How often every offset was selected over repeated runs.
    @returns array (2d+1, 2d+1) indexed [dy + d, dx + d], symmetric under a -> -a
    """
    hist = np.zeros((2 * d + 1, 2 * d + 1), dtype=int)
    for structure in structures:
        for a in structure.nonzero:
            if max(abs(a.dx), abs(a.dy)) > d:
                continue
            hist[a.dy + d, a.dx + d] += 1
            hist[-a.dy + d, -a.dx + d] += 1
    return hist
