"""
Long running end to end checks, run with: pytest -m slow
"""
import numpy as np
import pytest

from grf_shape.core.grid import GridDomain, LabelSet, NeighborhoodStructure, build_model, count_statistics, zero_potentials
from grf_shape.core.evidence import Evidence, FREE
from grf_shape.core.sampler import SamplerConfig, init_chain, estimate_marginals
from grf_shape.core.appearance import fit_appearance
from grf_shape.core import oracle
from grf_shape.learning.potentials import (LearningSchedule, TrainingEvent, gradient_estimate, learn_potentials, learn_from_statistics,
                                           moment_residual)
from grf_shape.learning.structure import CandidateRange, grow_structure
from grf_shape.learning.composition import MixtureWeights, compose_models
from grf_shape.segmentation import segment, pixel_accuracy
from grf_shape.utility.synthetic import (gen_blob_model, gen_cells, gen_collage, gen_potts_baseline, figure_mask, SHORT_OFFSETS,
                                        BLOB_SCALE)

from conftest import make_random_model

pytestmark = pytest.mark.slow


def test_sampler_agrees_with_oracle():
    rng = np.random.default_rng(0)
    for i in range(10):
        model = make_random_model(100 + i, 3, 3, 2)
        clamps = np.full(9, FREE)
        sites = rng.choice(9, 2, replace=False)
        clamps[sites] = rng.integers(0, 2, 2)
        evidence = Evidence(clamps=clamps.reshape(3, 3))
        config = SamplerConfig(burn_in=1000, n_samples=1000, n_chains=200, seed=i)
        estimated = estimate_marginals(model, evidence, config=config)
        assert np.abs(estimated - oracle.exact_marginals(model, evidence)).max() <= 0.01


def test_gradient_estimates_are_unbiased():
    model = make_random_model(21, 3, 3, 2)
    clamps = np.full((3, 3), FREE)
    clamps[0, 0], clamps[2, 1] = 1, 0
    event = TrainingEvent(Evidence(clamps=clamps))
    # 20 batches of 500 replicas, one sample each
    batches = 20
    estimates = np.array([gradient_estimate(model, event, config=SamplerConfig(burn_in=200, n_chains=500, seed=s)).as_vector() for s in range(batches)])
    exact = oracle.exact_loglik_gradient(model, event.evidence).as_vector()
    standard_error = estimates.std(axis=0, ddof=1) / np.sqrt(batches)
    assert np.all(np.abs(estimates.mean(axis=0) - exact) <= 4 * standard_error + 1e-9)


def test_learning_from_exact_statistics():
    target_model = make_random_model(33, 3, 3, 2, scale=0.8)
    target = oracle.exact_statistics_expectation(target_model)
    structure = target_model.structure
    start = target_model.with_potentials(zero_potentials(structure, target_model.labels))
    schedule = LearningSchedule(iterations=3000, step0=0.1, burn_in=100, chains=100, seed=1)
    learned = learn_from_statistics(start, target, schedule).model
    achieved = oracle.exact_statistics_expectation(learned)
    assert np.abs(achieved.frequencies().as_vector() - target.frequencies().as_vector()).max() <= 0.01


def test_moment_matching_on_blob_sample():
    model = gen_blob_model(0.35, 0.5, GridDomain(64, 64))
    chain = init_chain(model, config=SamplerConfig(seed=11, scan="block"))
    for _ in range(500):
        chain.sweep()
    y = chain.labelling
    observed = count_statistics(model.domain, model.structure, model.labels, y)
    start = model.with_potentials(zero_potentials(model.structure, model.labels))
    schedule = LearningSchedule(iterations=2000, burn_in=100, scan="block", chains=4, seed=2)
    learned = learn_potentials(start, [TrainingEvent.supervised(y)], schedule=schedule).model
    residual = moment_residual(learned, observed.frequencies(), SamplerConfig(burn_in=200, n_samples=200, scan="block", n_chains=4, seed=3))
    assert residual <= 0.02


BLOB_OFFSETS = {(dx, dy) for dx, dy in SHORT_OFFSETS} | {(BLOB_SCALE * dx, BLOB_SCALE * dy) for dx, dy in SHORT_OFFSETS}


def _scaled_offsets(scales):
    return [(s * dx, s * dy) for s in scales for dx, dy in SHORT_OFFSETS]


def _zero_model(domain, labels, offsets):
    structure = NeighborhoodStructure.from_offsets(offsets)
    return build_model(domain, labels, structure, zero_potentials(structure, labels))


def test_growth_recovers_blob_structure():
    domain = GridDomain(48, 48)
    chain = init_chain(gen_blob_model(0.35, 0.5, domain), config=SamplerConfig(seed=0, scan="block"))
    for _ in range(400):
        chain.sweep()
    schedule = LearningSchedule(iterations=400, burn_in=50, scan="block", chains=2, seed=0)
    config = SamplerConfig(burn_in=50, n_samples=20, scan="block", n_chains=2, seed=0)
    model, trace = grow_structure([TrainingEvent.supervised(chain.labelling)], LabelSet(2), domain, CandidateRange(5), 8, schedule, config=config)
    assert len(trace) == 8
    assert len(set(model.structure.nonzero) & BLOB_OFFSETS) >= 6


def test_shape_model_beats_potts_on_cells():
    domain, labels = GridDomain(64, 64), LabelSet(2)
    image, y = gen_cells(64, discs=4, bars=3, bar_length=24, seed=0)
    schedule = LearningSchedule(iterations=300, burn_in=50, scan="block", chains=4, seed=0)
    events = [TrainingEvent.supervised(y)]
    shape = learn_potentials(_zero_model(domain, labels, _scaled_offsets((1, 3, 6))), events, schedule=schedule).model
    potts = learn_potentials(gen_potts_baseline(labels, neighbourhood=4, free=True, domain=domain), events, schedule=schedule).model
    # bars belong to the background but look like cells
    appearance = fit_appearance(image, y, labels, components_per_label=2)
    accuracy = {"shape": [], "potts": []}
    for seed in (1, 2):
        test_image, truth = gen_cells(64, discs=4, bars=3, bar_length=24, seed=seed)
        config = SamplerConfig(burn_in=100, n_samples=50, scan="block", n_chains=2, seed=seed)
        for name, model in (("shape", shape), ("potts", potts)):
            accuracy[name].append(pixel_accuracy(segment(model, appearance, test_image, config=config).labelling, truth))
    assert np.mean(accuracy["shape"]) > np.mean(accuracy["potts"])


def test_composed_model_separates_figure_classes():
    domain, parts = GridDomain(64, 64), LabelSet(7)
    offsets = _scaled_offsets((1, 2, 4))
    man, cat = np.zeros(domain.shape, dtype=int), np.zeros(domain.shape, dtype=int)
    man[16:48, 22:42] = figure_mask("man", 7)
    cat[22:42, 16:48] = figure_mask("cat", 7)
    m1, m2 = _zero_model(domain, parts, offsets), _zero_model(domain, parts, offsets)
    stats1 = count_statistics(domain, m1.structure, parts, man)
    stats2 = count_statistics(domain, m2.structure, parts, cat)
    schedule = LearningSchedule(iterations=600, burn_in=50, scan="block", chains=2, seed=0)
    result = compose_models(m1, stats1, m2, stats2, MixtureWeights.default(13), schedule)
    train_image, train_truth = gen_collage(size=(64, 64), scale=1, seed=0)
    appearance = fit_appearance(train_image, train_truth, result.model.labels, components_per_label=1)
    image, truth = gen_collage(size=(64, 64), scale=1, seed=1)
    y = segment(result.model, appearance, image, config=SamplerConfig(burn_in=200, n_samples=50, scan="block", n_chains=2, seed=3)).labelling
    component = np.array([-1] + [result.mapping.component(k) for k in range(1, 13)])
    for c in (0, 1):
        figure = component[truth] == c
        assert np.mean(component[y[figure]] == c) > 0.5
    figure = truth > 0
    assert np.mean(y[figure] == truth[figure]) > 1 / 6
