"""
Maximum likelihood learning of Gibbs potentials by stochastic gradient ascent.

Every iteration:
    1. sample y~ from the posterior p(y | B; u) and y from the prior p(y; u)
    2. compute the co-occurrences n_a(k, k'; y~) and n_a(k, k'; y)
    3. u <- u + step_i * (n(y~) - n(y)), followed by canonical normalization

The chains are persistent across iterations by default. The posterior term may be
replaced by fixed target statistics (learn_from_statistics).
"""
import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from grf_shape.core.grid import GrfModel, PotentialTable, SufficientStatistics, normalize_potentials
from grf_shape.core.evidence import Evidence
from grf_shape.core.appearance import AppearanceModel, likelihood_field, update_appearance
from grf_shape.core.sampler import SamplerConfig, SamplerChain, init_chain, estimate_statistics
from grf_shape.errors import IncompatibleStatistics, EmptyAssignment
from grf_shape.settings import settings

log = logging.getLogger(__name__)

TRACE_COLUMNS = ["iteration", "step", "gradient max-norm", "moment residual"]
APPEARANCE_TRACE_COLUMNS = ["iteration", "step", "log-likelihood"]


@dataclass(frozen=True)
class LearningSchedule:
    """
    @param iterations: number of gradient steps
    @param step0: initial step size, None -> 1 / (W * H)
    @param tau: decay, step_i = step0 / (1 + i / tau), None -> iterations / 3
    @param samples_per_expectation: samples averaged for each expectation
    @param inner_sweeps: sweeps between samples
    @param persistent_chains: keep the chains across iterations, otherwise every iteration starts new chains
    @param burn_in: sweeps before the first iteration (or before every iteration without persistent chains)
    @param chains: independent replicas per chain
    @param appearance_step: blend factor of appearance updates
    """
    iterations: int = 1000
    step0: float | None = None
    tau: float | None = None
    samples_per_expectation: int = 1
    inner_sweeps: int = 2
    persistent_chains: bool = True
    burn_in: int = 100
    seed: int = 0
    scan: str = "raster"
    chains: int = 1
    appearance_step: float = 0.1

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError(f"LearningSchedule: iterations must be >= 0, got {self.iterations}")
        if self.step0 is not None and not self.step0 > 0:
            raise ValueError(f"LearningSchedule: step0 must be > 0, got {self.step0}")
        if self.tau is not None and not self.tau > 0:
            raise ValueError(f"LearningSchedule: tau must be > 0, got {self.tau}")
        if self.samples_per_expectation < 1 or self.inner_sweeps < 1 or self.chains < 1:
            raise ValueError("LearningSchedule: samples_per_expectation, inner_sweeps and chains must be >= 1")

    @classmethod
    def from_settings(cls, **overrides) -> "LearningSchedule":
        kwargs = dict(
            iterations=settings["iterations"],
            step0=settings["step0"] or None,
            tau=settings["tau"] or None,
            samples_per_expectation=settings["samples_per_expectation"],
            inner_sweeps=settings["inner_sweeps"],
            burn_in=settings["learning_burn_in"],
            scan=settings["scan"],
            chains=settings["chains"],
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    def step_size(self, i: int, domain) -> float:
        step0 = self.step0 or 1.0 / domain.size
        tau = self.tau or max(self.iterations / 3, 1.0)
        return step0 / (1 + i / tau)

    def scaled(self, fraction: float) -> "LearningSchedule":
        """Schedule with a reduced number of iterations, the decay is kept relative to the budget"""
        iterations = max(1, int(round(self.iterations * fraction)))
        tau = None if self.tau is None else self.tau * iterations / max(self.iterations, 1)
        return replace(self, iterations=iterations, tau=tau)

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(burn_in=self.burn_in, n_samples=self.samples_per_expectation, thinning=self.inner_sweeps,
                             seed=self.seed, scan=self.scan, n_chains=self.chains)


@dataclass(frozen=True, eq=False)
class TrainingEvent:
    """
    An element of the training sample: an image and/or a partial labelling
    """
    evidence: Evidence
    weight: float = 1.0

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"TrainingEvent: weight must be > 0, got {self.weight}")
        if self.evidence.image is None and self.evidence.clamps is None:
            raise ValueError("TrainingEvent: needs an image or clamped labels")

    @classmethod
    def supervised(cls, y, image=None, weight: float = 1.0) -> "TrainingEvent":
        return cls(Evidence.from_labelling(y, image), weight)


@dataclass(frozen=True, eq=False)
class LearningResult:
    model: GrfModel
    trace: pd.DataFrame
    appearance: AppearanceModel | None = None


class _ExpectationSampler:
    """
    Chain that delivers Monte Carlo estimates of E[Phi] for the current model
    """
    def __init__(self, model: GrfModel, evidence: Evidence | None, appearance: AppearanceModel | None, schedule: LearningSchedule, chain_index: int, stride: int):
        self.evidence = evidence
        self.appearance = appearance
        self.schedule = schedule
        self.chain_index = chain_index
        self.stride = stride
        self.chain: SamplerChain | None = None
        if schedule.persistent_chains:
            self.chain = self._new_chain(model, chain_index)

    def _new_chain(self, model: GrfModel, chain_index: int) -> SamplerChain:
        chain = init_chain(model, self.evidence, self.appearance, self.schedule.sampler_config(), chain_index=chain_index)
        for _ in range(self.schedule.burn_in):
            chain.sweep()
        return chain

    def set_appearance(self, appearance: AppearanceModel):
        self.appearance = appearance
        if self.chain is not None:
            self.chain.set_appearance(appearance)

    def draw(self, model: GrfModel, iteration: int) -> SufficientStatistics:
        if self.schedule.persistent_chains:
            self.chain.set_model(model)
        else:
            self.chain = self._new_chain(model, self.chain_index + (iteration + 1) * self.stride)
        total = None
        for _ in range(self.schedule.samples_per_expectation):
            for _ in range(self.schedule.inner_sweeps):
                self.chain.sweep()
            stats = self.chain.statistics()
            total = stats if total is None else total + stats
        return total.scaled(1.0 / self.schedule.samples_per_expectation)


def _apply_gradient(potentials: PotentialTable, gradient: SufficientStatistics, step: float) -> PotentialTable:
    return normalize_potentials(PotentialTable(potentials.unary + step * gradient.unary,
                                               {a: u + step * gradient.pairwise[a] for a, u in potentials.pairwise.items()}))


def _weighted_mean(stats: list, weights: list) -> SufficientStatistics:
    total = sum(weights)
    mean = None
    for s, w in zip(stats, weights):
        mean = s.scaled(w / total) if mean is None else mean + s.scaled(w / total)
    return mean


def gradient_estimate(model: GrfModel, event: TrainingEvent, appearance: AppearanceModel | None = None, config: SamplerConfig | None = None, samples_per_expectation: int = 1) -> SufficientStatistics:
    """
    Monte Carlo estimate of the log-likelihood gradient: mean posterior statistics minus mean prior statistics,
    each averaged over samples_per_expectation retained samples (per replica).
    """
    config = replace(config or SamplerConfig(burn_in=settings["learning_burn_in"]), n_samples=samples_per_expectation)
    posterior = estimate_statistics(model, event.evidence, appearance, config, chain_index=1)
    prior = estimate_statistics(model, None, None, config, chain_index=0)
    return posterior - prior


def _ascent(model: GrfModel, events: list, appearance: AppearanceModel | None, schedule: LearningSchedule, target: SufficientStatistics | None, update_func, learn_appearance: bool) -> LearningResult:
    stride = len(events) + 1
    prior_sampler = _ExpectationSampler(model, None, None, schedule, 0, stride)
    posterior_samplers = [_ExpectationSampler(model, e.evidence, appearance, schedule, j + 1, stride) for j, e in enumerate(events)]
    weights = [e.weight for e in events]
    rows = []
    for i in range(schedule.iterations):
        prior = prior_sampler.draw(model, i)
        if target is None:
            posterior = _weighted_mean([s.draw(model, i) for s in posterior_samplers], weights)
        else:
            posterior = target
        gradient = posterior - prior
        step = schedule.step_size(i, model.domain)
        model = model.with_potentials(_apply_gradient(model.potentials, gradient, step))
        grad_norm = gradient.max_abs()
        residual = (posterior.frequencies() - prior.frequencies()).max_abs()
        rows.append((i, step, grad_norm, residual))
        if update_func:
            update_func(i, step, grad_norm=grad_norm, residual=residual)
        if learn_appearance and appearance is not None:
            appearance = _appearance_step(appearance, events, posterior_samplers, schedule.appearance_step)
        if i % 100 == 0:
            log.debug(f"learn: iteration {i}, step {step:.3g}, gradient max-norm {grad_norm:.4g}, moment residual {residual:.4g}")
    trace = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    return LearningResult(model, trace, appearance)


def _appearance_step(appearance: AppearanceModel, events: list, samplers: list, step: float) -> AppearanceModel:
    for event, sampler in zip(events, samplers):
        if event.evidence.image is None or sampler.chain is None:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EmptyAssignment)
            appearance = update_appearance(appearance, event.evidence.image, list(sampler.chain.labels), step)
    for sampler in samplers:
        sampler.set_appearance(appearance)
    return appearance


def learn_potentials(model: GrfModel, events: list, appearance: AppearanceModel | None = None, schedule: LearningSchedule | None = None, update_func=None, learn_appearance: bool = False) -> LearningResult:
    """
    Stochastic gradient ascent on the likelihood of the training events.
    Gradients of several events are averaged with the event weights.
    With learn_appearance, the appearance model is updated once per iteration from the posterior samples.

    @param update_func: Callable (iteration, step, grad_norm=, residual=) -> None
    @returns LearningResult with the final model, the convergence trace and the appearance model
    """
    schedule = schedule or LearningSchedule.from_settings()
    if not events:
        raise ValueError("learn_potentials: at least one training event is required")
    for e in events:
        e.evidence.validate(model.domain, model.labels)
    if learn_appearance and appearance is None:
        raise ValueError("learn_potentials: learn_appearance requires an initial appearance model")
    log.info(f"learn_potentials: {len(events)} events, {schedule.iterations} iterations, {len(model.structure.nonzero)} offsets")
    return _ascent(model, events, appearance, schedule, None, update_func, learn_appearance)


def _target_expectations(model: GrfModel, target: SufficientStatistics) -> SufficientStatistics:
    if target.kind == "counts":
        raise IncompatibleStatistics("Target statistics must be expectations or frequencies, not raw counts")
    if target.n_labels != model.labels.count:
        raise IncompatibleStatistics(f"Target statistics have {target.n_labels} labels, the model {model.labels.count}")
    missing = [a for a in model.structure.nonzero if a not in target.pairwise]
    if missing:
        raise IncompatibleStatistics(f"Target statistics lack the offsets {', '.join(str(a) for a in missing)}")
    return target.restricted(model.structure.nonzero).to_expectations(model.domain)


def learn_from_statistics(model: GrfModel, target: SufficientStatistics, schedule: LearningSchedule | None = None, update_func=None) -> LearningResult:
    """
    Learn potentials that reproduce the given statistics: dL/du = target - E_prior[Phi].
    Only prior sampling is performed. The target is compared per edge, so frequencies
    estimated on other domains can be used.
    """
    schedule = schedule or LearningSchedule.from_settings()
    target = _target_expectations(model, target)
    log.info(f"learn_from_statistics: {schedule.iterations} iterations, {len(model.structure.nonzero)} offsets")
    return _ascent(model, [], None, schedule, target, update_func, False)


def moment_residual(model: GrfModel, target: SufficientStatistics, config: SamplerConfig | None = None) -> float:
    """
    Max-norm of the difference between estimated prior statistics and the target, both per edge normalized
    """
    target = _target_expectations(model, target)
    estimated = estimate_statistics(model, None, None, config)
    return (estimated.frequencies() - target.frequencies()).max_abs()


def learn_appearance(model: GrfModel, appearance: AppearanceModel, events: list, schedule: LearningSchedule | None = None, update_func=None) -> LearningResult:
    """
    Unsupervised appearance learning with a fixed prior: sample from the posterior,
    update the mixtures from the samples, repeat.

    @param update_func: Callable (iteration, step, loglik=) -> None
    """
    schedule = schedule or LearningSchedule.from_settings()
    events = [e for e in events if e.evidence.image is not None]
    if not events:
        raise ValueError("learn_appearance: at least one event with an image is required")
    samplers = [_ExpectationSampler(model, e.evidence, appearance, schedule, j + 1, len(events) + 1) for j, e in enumerate(events)]
    rows = []
    for i in range(schedule.iterations):
        for sampler in samplers:
            sampler.draw(model, i)
        appearance = _appearance_step(appearance, events, samplers, schedule.appearance_step)
        loglik = np.mean([_sample_loglik(appearance, e.evidence.image, s.chain.labels) for e, s in zip(events, samplers)])
        rows.append((i, schedule.appearance_step, loglik))
        if update_func:
            update_func(i, schedule.appearance_step, loglik=loglik)
    trace = pd.DataFrame(rows, columns=APPEARANCE_TRACE_COLUMNS)
    return LearningResult(model, trace, appearance)


def _sample_loglik(appearance: AppearanceModel, image: np.ndarray, labels: np.ndarray) -> float:
    """Mean per pixel log p(x | y) of sampled labellings (R, H, W)"""
    field = likelihood_field(appearance, image)
    values = np.take_along_axis(field[np.newaxis], labels[..., np.newaxis], axis=-1)
    return float(values.mean())
