import matplotlib
matplotlib.use("Agg")
import numpy as np
import pytest

from grf_shape.core.grid import GridDomain, LabelSet, NeighborhoodStructure, PotentialTable, build_model, zero_potentials, random_potentials
from grf_shape import settings as _settings

EDGE_TABLE = np.array([[0.5, -0.5], [-0.5, 0.5]])


@pytest.fixture
def two_node_model():
    """1x2 grid, |K| = 2, u_0 = 0, u_(1,0) = [[0.5, -0.5], [-0.5, 0.5]]"""
    structure = NeighborhoodStructure.from_offsets([(1, 0)])
    return build_model(GridDomain(2, 1), LabelSet(2), structure, PotentialTable(np.zeros(2), {(1, 0): EDGE_TABLE}))


@pytest.fixture
def zero_model_3x3():
    structure = NeighborhoodStructure.from_offsets([(1, 0)])
    labels = LabelSet(2)
    return build_model(GridDomain(3, 3), labels, structure, zero_potentials(structure, labels))


def make_random_model(seed: int, width=3, height=3, n_labels=2, offsets=((1, 0), (0, 1)), scale=1.0):
    structure = NeighborhoodStructure.from_offsets(offsets)
    labels = LabelSet(n_labels)
    return build_model(GridDomain(width, height), labels, structure, random_potentials(structure, labels, scale, seed))


@pytest.fixture
def random_model():
    return make_random_model(0)


@pytest.fixture(autouse=True)
def restore_settings():
    """Tests may change the global settings"""
    saved = dict(_settings.settings)
    yield
    _settings.settings.clear()
    _settings.settings.update(saved)
