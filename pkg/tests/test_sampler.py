import numpy as np
import pytest

from grf_shape.core.grid import count_statistics
from grf_shape.core.evidence import Evidence, FREE
from grf_shape.core.appearance import AppearanceModel, GaussianComponent
from grf_shape.core.sampler import (SamplerConfig, site_conditional, init_chain, sweep, sample, iter_samples,
                                    estimate_marginals, estimate_statistics)
from grf_shape.core import oracle
from grf_shape.errors import OutOfDomain, ClampConflict

from conftest import make_random_model


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(burn_in=-1)
    with pytest.raises(ValueError):
        SamplerConfig(n_samples=0)
    with pytest.raises(ValueError):
        SamplerConfig(scan="diagonal")


def test_site_conditional(two_node_model, zero_model_3x3):
    y = np.zeros((3, 3), dtype=int)
    assert np.allclose(site_conditional(zero_model_3x3, y, (1, 1)), 0.5)
    p = site_conditional(two_node_model, np.array([[1, 0]]), (0, 0))
    assert p[0] == pytest.approx(0.731059, abs=1e-6)
    with pytest.raises(OutOfDomain):
        site_conditional(two_node_model, np.array([[0, 0]]), (2, 0))


def test_site_conditional_matches_oracle():
    model = make_random_model(5, 2, 2, 3, ((1, 0), (0, 1), (1, 1)))
    y = np.array([[2, 0], [1, 1]])
    for t in [(0, 0), (1, 0), (0, 1), (1, 1)]:
        x0, y0 = t
        clamps = y.copy()
        clamps[y0, x0] = FREE
        exact = oracle.exact_marginals(model, Evidence(clamps=clamps))[y0, x0]
        assert np.allclose(site_conditional(model, y, t), exact, atol=1e-12)


@pytest.mark.parametrize("scan", ["raster", "random", "block"])
def test_chain_conditionals_match_site_conditional(scan):
    model = make_random_model(2, 4, 3, 3, ((1, 0), (0, 1), (-1, 1), (2, 0)))
    chain = init_chain(model, config=SamplerConfig(seed=3, scan=scan))
    y = chain.labelling
    sites = np.arange(model.domain.size)
    conditionals = chain.conditionals(sites)[0]
    for s in sites:
        t = (s % model.domain.width, s // model.domain.width)
        assert np.allclose(conditionals[s], site_conditional(model, y, t), atol=1e-12)


def test_init_chain(random_model):
    init = np.eye(3, dtype=int)
    chain = init_chain(random_model, init=init)
    assert np.array_equal(chain.labelling, init)
    a = init_chain(random_model, config=SamplerConfig(seed=42))
    b = init_chain(random_model, config=SamplerConfig(seed=42))
    assert np.array_equal(a.labelling, b.labelling)
    clamps = np.full((3, 3), FREE)
    clamps[0, 0] = 1
    with pytest.raises(ClampConflict):
        init_chain(random_model, Evidence(clamps=clamps), init=np.zeros((3, 3), dtype=int))


def test_clamps_preserved(random_model):
    clamps = np.full((3, 3), FREE)
    clamps[1, :] = [1, 0, 1]
    chain = init_chain(random_model, Evidence(clamps=clamps), config=SamplerConfig(seed=1, n_chains=4))
    for _ in range(50):
        sweep(chain)
        assert np.all(chain.labels[:, 1, :] == [1, 0, 1])
    assert chain.sweeps == 50


def test_frozen_chain(random_model):
    y = np.array([[0, 1, 0], [1, 1, 0], [0, 0, 1]])
    chain = init_chain(random_model, Evidence.from_labelling(y))
    samples = sample(chain, SamplerConfig(burn_in=3, n_samples=5))
    assert len(samples) == 5
    assert all(np.array_equal(s, y) for s in samples)


def test_sample_minimal_config(random_model):
    config = SamplerConfig(burn_in=0, n_samples=1, thinning=1, seed=9)
    chain = init_chain(random_model, config=config)
    samples = sample(chain, config)
    reference = init_chain(random_model, config=config)
    sweep(reference)
    assert len(samples) == 1
    assert np.array_equal(samples[0], reference.labelling)


def test_determinism(random_model):
    config = SamplerConfig(burn_in=10, n_samples=5, seed=123, scan="random")
    first = sample(init_chain(random_model, config=config), config)
    second = sample(init_chain(random_model, config=config), config)
    assert all(np.array_equal(a, b) for a, b in zip(first, second))


def test_replicas_pooled(random_model):
    config = SamplerConfig(burn_in=2, n_samples=3, n_chains=4)
    batches = list(iter_samples(init_chain(random_model, config=config), config))
    assert len(batches) == 3
    assert batches[0].shape == (4, 3, 3)


def test_uniform_prior(zero_model_3x3):
    config = SamplerConfig(burn_in=5, n_samples=500, n_chains=20, seed=0)
    marginals = estimate_marginals(zero_model_3x3, config=config)
    assert np.allclose(marginals.sum(axis=-1), 1)
    # 10^4 samples per node
    assert np.abs(marginals - 0.5).max() < 0.03
    stats = estimate_statistics(zero_model_3x3, config=config)
    assert stats.kind == "expectations"
    assert np.abs(stats.table((1, 0)) - 1.5).max() < 0.1


def test_clamped_statistics(random_model):
    y = np.array([[0, 1, 0], [1, 1, 0], [0, 0, 1]])
    stats = estimate_statistics(random_model, Evidence.from_labelling(y), config=SamplerConfig(burn_in=1, n_samples=2))
    expected = count_statistics(random_model.domain, random_model.structure, random_model.labels, y)
    assert np.allclose(stats.as_vector(), expected.as_vector())


def test_candidate_offsets(zero_model_3x3):
    stats = estimate_statistics(zero_model_3x3, config=SamplerConfig(burn_in=1, n_samples=2), offsets=[(1, 1), (0, 2)])
    assert set(stats.pairwise) == {(1, 1), (0, 2)}
    assert stats.table((1, 1)).sum() == pytest.approx(4)


def test_image_evidence_changes_marginals():
    model = make_random_model(0, 2, 2, 2, ((1, 0),), scale=0.1)
    appearance = AppearanceModel(1, ((GaussianComponent(1.0, [0.0], [[0.01]]),), (GaussianComponent(1.0, [1.0], [[0.01]]),)))
    image = np.array([[0.0, 1.0], [1.0, 0.0]])
    config = SamplerConfig(burn_in=10, n_samples=200, n_chains=10)
    marginals = estimate_marginals(model, Evidence(image=image), appearance, config)
    assert np.array_equal(marginals.argmax(axis=-1), [[0, 1], [1, 0]])


@pytest.mark.parametrize("scan", ["raster", "random", "block"])
def test_marginals_match_oracle(scan):
    model = make_random_model(4, 3, 3)
    clamps = np.full((3, 3), FREE)
    clamps[0, 2] = 1
    evidence = Evidence(clamps=clamps)
    config = SamplerConfig(burn_in=50, n_samples=500, n_chains=40, seed=1, scan=scan)
    estimated = estimate_marginals(model, evidence, config=config)
    exact = oracle.exact_marginals(model, evidence)
    # 2 * 10^4 samples, standard error <= 0.0035 per entry ignoring autocorrelation
    assert np.abs(estimated - exact).max() < 0.03


@pytest.mark.slow
def test_statistics_match_oracle():
    model = make_random_model(8, 3, 3, 2, ((1, 0), (0, 1), (1, 1)))
    config = SamplerConfig(burn_in=100, n_samples=2000, n_chains=100, seed=2)
    estimated = estimate_statistics(model, config=config)
    exact = oracle.exact_statistics_expectation(model)
    assert np.abs(estimated.as_vector() - exact.as_vector()).max() < 0.05
