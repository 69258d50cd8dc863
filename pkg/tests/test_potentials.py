import numpy as np
import pandas as pd
import pytest

from grf_shape.core.grid import GridDomain, LabelSet, NeighborhoodStructure, SufficientStatistics, build_model, zero_potentials, normalize_potentials
from grf_shape.core.evidence import Evidence
from grf_shape.core.appearance import AppearanceModel, GaussianComponent, shared_appearance
from grf_shape.core.sampler import SamplerConfig
from grf_shape.core import oracle
from grf_shape.learning.potentials import (LearningSchedule, TrainingEvent, TRACE_COLUMNS, APPEARANCE_TRACE_COLUMNS, gradient_estimate,
                                           learn_potentials, learn_from_statistics, learn_appearance, moment_residual)
from grf_shape.errors import IncompatibleStatistics

from conftest import make_random_model

STRIPES = np.array([[0, 0, 0], [1, 1, 1], [0, 0, 0]])


def _zero_model(offsets=((1, 0),), K=2, size=(3, 3)):
    structure = NeighborhoodStructure.from_offsets(offsets)
    labels = LabelSet(K)
    return build_model(GridDomain(*size), labels, structure, zero_potentials(structure, labels))


def _same_label_target():
    # horizontal neighbours mostly share their label
    pair = np.array([[0.45, 0.05], [0.05, 0.45]])
    return SufficientStatistics(np.array([0.5, 0.5]), {(1, 0): pair}, "frequencies")


def test_schedule_validation():
    with pytest.raises(ValueError):
        LearningSchedule(iterations=-1)
    with pytest.raises(ValueError):
        LearningSchedule(step0=0.0)
    with pytest.raises(ValueError):
        LearningSchedule(tau=-1.0)
    with pytest.raises(ValueError):
        LearningSchedule(inner_sweeps=0)


def test_step_size():
    domain = GridDomain(3, 3)
    schedule = LearningSchedule(iterations=30)
    assert schedule.step_size(0, domain) == pytest.approx(1 / 9)
    assert schedule.step_size(10, domain) == pytest.approx(1 / 18)
    schedule = LearningSchedule(iterations=30, step0=0.5, tau=5.0)
    assert schedule.step_size(5, domain) == pytest.approx(0.25)


def test_scaled_schedule():
    schedule = LearningSchedule(iterations=100, tau=30.0).scaled(0.25)
    assert schedule.iterations == 25
    assert schedule.tau == pytest.approx(7.5)
    assert LearningSchedule(iterations=2).scaled(0.1).iterations == 1


def test_schedule_from_settings():
    from grf_shape.settings import settings
    settings["iterations"] = 17
    schedule = LearningSchedule.from_settings(burn_in=3)
    assert schedule.iterations == 17
    assert schedule.burn_in == 3
    assert schedule.step0 is None


def test_training_event():
    with pytest.raises(ValueError):
        TrainingEvent(Evidence())
    with pytest.raises(ValueError):
        TrainingEvent.supervised(STRIPES, weight=0)
    assert TrainingEvent.supervised(STRIPES).evidence.clamps.shape == (3, 3)


def test_zero_iterations_keep_model():
    model = _zero_model()
    result = learn_potentials(model, [TrainingEvent.supervised(STRIPES)], schedule=LearningSchedule(iterations=0, burn_in=0))
    assert result.model is model
    assert list(result.trace.columns) == TRACE_COLUMNS
    assert len(result.trace) == 0


def test_learn_requires_events():
    with pytest.raises(ValueError):
        learn_potentials(_zero_model(), [], schedule=LearningSchedule(iterations=1))


def test_gradient_estimate_is_balanced():
    model = _zero_model(((1, 0), (0, 1)))
    gradient = gradient_estimate(model, TrainingEvent.supervised(STRIPES), config=SamplerConfig(burn_in=5, n_chains=3))
    assert gradient.unary.sum() == pytest.approx(0, abs=1e-9)
    for a in gradient.pairwise:
        assert gradient.table(a).sum() == pytest.approx(0, abs=1e-9)


def test_supervised_learning_prefers_observed_pairs():
    model = _zero_model(((1, 0), (0, 1)))
    calls = []
    schedule = LearningSchedule(iterations=100, step0=0.1, burn_in=10, chains=4, seed=1)
    result = learn_potentials(model, [TrainingEvent.supervised(STRIPES)], schedule=schedule, update_func=lambda *args: calls.append(args))
    assert len(calls) == 100
    assert len(result.trace) == 100
    horizontal = result.model.potentials.table((1, 0))
    vertical = result.model.potentials.table((0, 1))
    # rows are constant: horizontal pairs agree, vertical pairs disagree
    assert horizontal[0, 0] + horizontal[1, 1] > horizontal[0, 1] + horizontal[1, 0]
    assert vertical[0, 1] + vertical[1, 0] > vertical[0, 0] + vertical[1, 1]
    for a in result.model.structure.offsets:
        assert abs(result.model.potentials.table(a).sum()) < 1e-9


def test_learning_is_deterministic():
    schedule = LearningSchedule(iterations=20, step0=0.1, burn_in=5, seed=7)
    events = [TrainingEvent.supervised(STRIPES)]
    first = learn_potentials(_zero_model(), events, schedule=schedule)
    second = learn_potentials(_zero_model(), events, schedule=schedule)
    assert np.array_equal(first.model.potentials.table((1, 0)), second.model.potentials.table((1, 0)))
    assert first.trace.equals(second.trace)


def test_fresh_chains():
    schedule = LearningSchedule(iterations=5, step0=0.1, burn_in=2, persistent_chains=False)
    result = learn_potentials(_zero_model(), [TrainingEvent.supervised(STRIPES)], schedule=schedule)
    assert len(result.trace) == 5


def test_learn_from_statistics():
    schedule = LearningSchedule(iterations=200, step0=0.1, burn_in=10, chains=16, seed=2)
    result = learn_from_statistics(_zero_model(), _same_label_target(), schedule)
    u = result.model.potentials.table((1, 0))
    assert u[0, 0] > 0 and u[1, 1] > 0
    assert u[0, 1] < 0 and u[1, 0] < 0
    assert result.trace["moment residual"].iloc[-20:].mean() < result.trace["moment residual"].iloc[:5].mean()


def test_learn_from_statistics_validation():
    model = _zero_model()
    counts = SufficientStatistics(np.array([5.0, 4.0]), {(1, 0): np.ones((2, 2))}, "counts")
    with pytest.raises(IncompatibleStatistics):
        learn_from_statistics(model, counts, LearningSchedule(iterations=1))
    missing = SufficientStatistics(np.array([0.5, 0.5]), {(0, 1): np.full((2, 2), 0.25)}, "frequencies")
    with pytest.raises(IncompatibleStatistics):
        learn_from_statistics(model, missing, LearningSchedule(iterations=1))
    three = SufficientStatistics(np.full(3, 1 / 3), {(1, 0): np.full((3, 3), 1 / 9)}, "frequencies")
    with pytest.raises(IncompatibleStatistics):
        learn_from_statistics(model, three, LearningSchedule(iterations=1))


def test_moment_residual_of_uniform_target():
    target = SufficientStatistics(np.array([0.5, 0.5]), {(1, 0): np.full((2, 2), 0.25)}, "frequencies")
    residual = moment_residual(_zero_model(), target, SamplerConfig(burn_in=5, n_samples=200, n_chains=20))
    assert residual < 0.05
    assert moment_residual(_zero_model(), _same_label_target(), SamplerConfig(burn_in=5, n_samples=50, n_chains=10)) > 0.1


def test_learn_appearance():
    y = np.zeros((6, 6), dtype=int)
    y[2:4, 1:5] = 1
    image = np.where(y == 1, 0.9, 0.1)
    app = AppearanceModel(1, ((GaussianComponent(1.0, [0.3], [[0.1]]),), (GaussianComponent(1.0, [0.7], [[0.1]]),)))
    schedule = LearningSchedule(iterations=10, burn_in=5, appearance_step=0.5)
    result = learn_appearance(_zero_model(size=(6, 6)), app, [TrainingEvent(Evidence(image=image))], schedule)
    assert list(result.trace.columns) == APPEARANCE_TRACE_COLUMNS
    assert len(result.trace) == 10
    assert result.appearance.mixture(0)[0].mean[0] < 0.3
    assert result.appearance.mixture(1)[0].mean[0] > 0.7
    with pytest.raises(ValueError):
        learn_appearance(_zero_model(), app, [TrainingEvent.supervised(STRIPES)], schedule)


def test_joint_appearance_learning():
    image = np.where(STRIPES == 1, 0.8, 0.2)
    app = AppearanceModel(1, ((GaussianComponent(1.0, [0.4], [[0.05]]),), (GaussianComponent(1.0, [0.6], [[0.05]]),)))
    schedule = LearningSchedule(iterations=5, step0=0.1, burn_in=2)
    result = learn_potentials(_zero_model(), [TrainingEvent(Evidence(image=image))], app, schedule, learn_appearance=True)
    assert isinstance(result.trace, pd.DataFrame)
    assert result.appearance is not app
    with pytest.raises(ValueError):
        learn_potentials(_zero_model(), [TrainingEvent(Evidence(image=image))], None, schedule, learn_appearance=True)


def test_uninformative_evidence_is_a_fixed_point():
    model = make_random_model(5, scale=0.5)
    image = np.random.default_rng(0).random((3, 3))
    app = shared_appearance(model.labels, (GaussianComponent(1.0, [0.5], [[0.1]]),))
    event = TrainingEvent(Evidence(image=image))
    # posterior equals prior: the exact update vanishes
    assert oracle.exact_loglik_gradient(model, event.evidence, app).max_abs() < 1e-10
    schedule = LearningSchedule(iterations=50, step0=0.05, burn_in=100, chains=400, seed=4)
    learned = learn_potentials(model, [event], app, schedule).model
    start = normalize_potentials(model.potentials)
    assert np.abs(learned.potentials.unary - start.unary).max() < 0.1
    for a, u in start.pairwise.items():
        assert np.abs(learned.potentials.table(a) - u).max() < 0.1


def test_appearance_progress_reports_loglik():
    y = np.zeros((6, 6), dtype=int)
    y[2:4, 1:5] = 1
    image = np.where(y == 1, 0.9, 0.1)
    app = AppearanceModel(1, ((GaussianComponent(1.0, [0.3], [[0.1]]),), (GaussianComponent(1.0, [0.7], [[0.1]]),)))
    calls = []
    result = learn_appearance(_zero_model(size=(6, 6)), app, [TrainingEvent(Evidence(image=image))],
                              LearningSchedule(iterations=3, burn_in=2), lambda i, step, **values: calls.append(values))
    assert [set(values) for values in calls] == [{"loglik"}] * 3
    assert [values["loglik"] for values in calls] == list(result.trace["log-likelihood"])
