import json

import numpy as np
import pytest

from normalcoords import metrics as M
from normalcoords.laminar import LaminarSystem
from normalcoords.synth import plane_grid

# Two single-triangle "surfaces"; the nearest-vertex hops differ in each direction.
TRI_A = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
TRI_B = np.array([[0.0, 0.0, 1.0], [3.0, 0.0, 1.0], [0.0, 3.0, 1.0]])


def test_asymmetric_example():
    ab = M.fs_distance(TRI_A, TRI_B, method="brute").values
    ba = M.fs_distance(TRI_B, TRI_A, method="brute").values
    # A -> B: vertex 1 maps to B0 (distance sqrt 2) and back to A0 (1), and so on
    expect_ab = [1.0, (np.sqrt(2.0) + 1.0) / 2, (np.sqrt(2.0) + 1.0) / 2]
    assert np.allclose(ab, expect_ab)
    # B -> A: B1 maps to A1 (sqrt 5), whose nearest B vertex is B0 (sqrt 2)
    assert np.allclose(ba, [1.0, (np.sqrt(5.0) + np.sqrt(2.0)) / 2, (np.sqrt(5.0) + np.sqrt(2.0)) / 2])
    assert not np.allclose(ab, ba)


def test_parallel_planes_and_identity():
    a = plane_grid(6, 5, 0.3)
    b = plane_grid(6, 5, 0.3, z=0.7)
    assert np.allclose(M.fs_distance(a, b).values, 0.7)
    assert np.all(M.fs_distance(a, a).values == 0)
    assert np.allclose(M.fs_distance(a, b, squared=True).values, 0.49)


def test_random_5x7_pair_tree_equals_brute():
    rng = np.random.default_rng(57)
    A, B = rng.random((5, 3)), rng.random((7, 3))
    assert np.array_equal(M.fs_distance(A, B, method="tree").values, M.fs_distance(A, B, method="brute").values)


def test_ties_lowest_index():
    A = np.array([[0.0, 0, 0]])
    B = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0]])
    assert M.nearest_brute(A, B)[0][0] == 0 and M.nearest_tree(A, B)[0][0] == 0


def test_empty_rejected():
    with pytest.raises(ValueError):
        M.fs_distance(np.zeros((0, 3)), np.zeros((2, 3)))


def test_thickness_distribution_excludes_flagged():
    sy = LaminarSystem(points=np.zeros((2, 4, 3)), faces=np.zeros((0, 3), int),
                       thickness=np.array([1.0, 1.0, 5.0, 1.0]), flagged=np.array([0, 0, 1, 0], bool))
    d = M.thickness_distribution(sy)
    assert d.count == 3 and d.excluded == 1
    assert d.summary()["std"] == 0.0


def test_cdf():
    step = M.cdf(M.DistanceDistribution(np.full(10, 2.0)), 4)
    assert np.allclose(step[:, 1], [0, 0, 0, 1])
    u = np.random.default_rng(0).random(4000)
    table = M.cdf(u, 10, value_range=(0.0, 1.0))
    assert np.all(np.diff(table[:, 1]) >= 0) and table[-1, 1] == 1.0
    assert np.abs(table[:, 1] - table[:, 0]).max() < 1 / np.sqrt(u.size)


def test_report(tmp_path):
    fs = M.DistanceDistribution([1.0, 1.2], kind="fs")
    th = M.DistanceDistribution([1.5, 1.5], kind="streamline")
    rep = M.compare_report([fs, th])
    assert rep["underestimates"] is True
    assert np.isclose(rep["pairs"][0]["mean_difference"], -0.4)
    assert M.compare_report([fs])["underestimates"] is None
    M.write_report(rep, tmp_path / "r.json", tmp_path / "r.csv")
    assert json.loads((tmp_path / "r.json").read_text())["underestimates"] is True
    assert (tmp_path / "r.csv").read_text().startswith("name,kind,count")


def test_negative_distances_rejected():
    with pytest.raises(ValueError):
        M.DistanceDistribution([-1.0])
