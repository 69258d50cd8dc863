import numpy as np
import pytest

from grf_shape.core.grid import GridDomain, LabelSet, Offset
from grf_shape.learning.composition import LabelMapping
from grf_shape.utility.synthetic import (SHORT_OFFSETS, FIGURES, gen_blob_model, figure_mask, gen_composite_figure, gen_collage,
                                         gen_potts_baseline, gen_cells)
from grf_shape.errors import PlacementFailure


def test_blob_model():
    model = gen_blob_model(0.35, 0.5)
    assert model.labels.count == 2
    assert len(model.structure.nonzero) == 8
    assert np.allclose(model.potentials.table((1, 0)), [[0.35, -0.35], [-0.35, 0.35]])
    assert np.allclose(model.potentials.table((5, 0)), [[0.15, 0.35], [0.35, -0.85]])
    assert np.allclose(model.potentials.table((-5, 5)), [[0.15, 0.35], [0.35, -0.85]])
    for a in model.structure.offsets:
        assert abs(model.potentials.table(a).sum()) < 1e-12


def test_blob_model_without_correlation():
    model = gen_blob_model(0.0, 0.5, GridDomain(16, 16))
    assert np.allclose(model.potentials.table((0, 5)), [[0.5, 0], [0, -0.5]])
    assert model.domain == GridDomain(16, 16)


def test_figure_mask():
    mask = figure_mask("man", 7)
    (width, height), _ = FIGURES["man"]
    assert mask.shape == (height, width)
    assert set(np.unique(mask)) == set(range(7))
    assert figure_mask("man", 3, scale=2).shape == (2 * height, 2 * width)
    assert set(np.unique(figure_mask("cat", 3))) == {0, 1, 2}
    with pytest.raises(ValueError):
        figure_mask("dog")
    with pytest.raises(ValueError):
        figure_mask("man", 1)


def test_composite_figure_without_noise():
    image, y = gen_composite_figure(parts=7, noise=0.0, seed=1)
    assert image.shape == y.shape == (64, 64)
    assert set(np.unique(y)) == set(range(7))
    levels = np.linspace(0.1, 0.9, 7)
    assert np.allclose(image, levels[y])


def test_composite_figure_seeded():
    a = gen_composite_figure(noise=0.1, seed=4)
    b = gen_composite_figure(noise=0.1, seed=4)
    assert np.array_equal(a[0], b[0])
    assert not np.array_equal(a[0], gen_composite_figure(noise=0.1, seed=5)[0])


def test_collage():
    image, y = gen_collage(instances=(1, 1), noise=0.0, seed=2)
    mapping = LabelMapping.joint(7, 7)
    assert y.shape == (128, 128)
    assert set(np.unique(y)) == set(range(mapping.n_joint))
    # identical part appearance across both classes
    assert np.allclose(image[y > 0], 0.7)
    assert np.allclose(image[y == 0], 0.2)


def test_collage_placement_failure():
    with pytest.raises(PlacementFailure):
        gen_collage(instances=(3, 3), size=(80, 80), max_attempts=50)
    with pytest.raises(ValueError):
        gen_collage(instances=(0, 1))


def test_potts_baseline():
    model = gen_potts_baseline(LabelSet(3), neighbourhood=4, strength=1.5)
    assert model.structure.nonzero == (Offset(1, 0), Offset(0, 1))
    u = model.potentials.table((1, 0))
    assert u[0, 0] - u[0, 1] == pytest.approx(1.5)
    assert abs(u.sum()) < 1e-12
    model = gen_potts_baseline(anisotropic=True, strengths=(1.0, 2.0, 0.5, 0.5))
    assert set(model.structure.nonzero) == set(SHORT_OFFSETS)
    assert model.potentials.table((0, 1))[1, 1] > model.potentials.table((1, 0))[1, 1]
    free = gen_potts_baseline(free=True)
    assert all(np.all(free.potentials.table(a) == 0) for a in free.structure.nonzero)
    with pytest.raises(ValueError):
        gen_potts_baseline(neighbourhood=6)


def test_cells():
    image, y = gen_cells(size=96, discs=4, bars=3, noise=0.0, seed=0)
    assert image.shape == y.shape == (96, 96)
    assert set(np.unique(y)) == {0, 1}
    assert np.allclose(image[y == 1], 0.7)
    # bars have the disc grey level but belong to the background
    assert np.any(np.isclose(image[y == 0], 0.7))
    with pytest.raises(PlacementFailure):
        gen_cells(size=32, discs=10, radius=8, max_attempts=20)
