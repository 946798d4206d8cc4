import numpy as np
import pytest

from normalcoords import levelset as LS
from normalcoords.io import read_vtk_structured_points
from normalcoords.mesh import MeshError
from normalcoords.synth import icosphere, plane_grid


@pytest.fixture(scope="module")
def sphere_grid():
    inner, outer = icosphere(4, 1.0), icosphere(4, 2.0)
    g = LS.voxelize(inner, outer, 0.1)
    LS.solve_laplace(g)
    return inner, g


def test_points_inside():
    m = icosphere(3)
    pts = np.array([[0, 0, 0], [0.5, 0.2, -0.1], [1.5, 0, 0], [0, 0, -3]])
    assert LS.points_inside(m, pts).tolist() == [True, True, False, False]


def test_labels(sphere_grid):
    _, g = sphere_grid
    X = np.stack(np.meshgrid(*[g.coords(a) for a in range(3)], indexing="ij"), axis=-1)
    r = np.linalg.norm(X, axis=-1)
    clear = (np.abs(r - 1) > 0.02) & (np.abs(r - 2) > 0.02)
    expect = np.where(r < 1, LS.INSIDE, np.where(r < 2, LS.RIBBON, LS.OUTSIDE))
    assert np.array_equal(g.labels[clear], expect[clear])


def test_maximum_principle(sphere_grid):
    _, g = sphere_grid
    F = g.F[g.labels == LS.RIBBON]
    assert F.min() > 0 and F.max() < 1


def test_streamlines_follow_gradient(sphere_grid):
    inner, g = sphere_grid
    for seed in inner.vertices[::300]:
        p, t, dev = LS.levelset_streamline(g, seed)
        tangent = np.diff(p, axis=0)[1:-1]
        mid = 0.5 * (p[1:-2] + p[2:-1])
        grad = np.array([LS._trilinear(g, g.gradient, x) for x in mid])
        cos = np.einsum("ij,ij->i", tangent, grad) / (np.linalg.norm(tangent, axis=1) * np.linalg.norm(grad, axis=1))
        assert np.degrees(np.arccos(np.clip(cos, -1, 1))).max() < 2.0
        assert dev < 0.02
        assert np.isclose(t[-1], 1.0, atol=0.02)


def test_curvature_of_level_sets(sphere_grid):
    _, g = sphere_grid
    H = LS.grid_mean_curvature(g)
    p = np.array([0.9, 0.8, 0.6])
    p *= 1.5 / np.linalg.norm(p)
    assert np.isclose(LS._trilinear(g, H, p), -1 / 1.5, rtol=0.03)


@pytest.mark.parametrize("rule", ["potential", "equivolume"])
def test_layers(sphere_grid, rule):
    inner, g = sphere_grid
    seeds = inner.vertices[::250]
    pts = LS.levelset_layer(g, seeds, 0.5, rule)
    r = np.linalg.norm(pts, axis=1)
    exact = 4.5 ** (1 / 3) if rule == "equivolume" else 1 / (1 - 0.5 * 0.5)
    assert np.allclose(r, exact, rtol=0.01)


def test_cross_check_with_registration(sphere_run, sphere_grid):
    _, g = sphere_grid
    inner = sphere_run.inner
    th = LS.levelset_thickness(g, inner.vertices[::32])
    assert abs(th.mean() / sphere_run.system.thickness.mean() - 1) < 0.05


def test_seed_checks(sphere_grid):
    _, g = sphere_grid
    with pytest.raises(LS.LevelSetError, match="outside the grid"):
        LS.levelset_streamline(g, [10.0, 0, 0])
    with pytest.raises(LS.LevelSetError, match="not next to the ribbon"):
        LS.levelset_streamline(g, [0.0, 0, 0])


def test_unsolved_grid():
    g = LS.voxelize_implicit(lambda X: X[..., 2], lambda X: X[..., 2] - 0.3, (-0.2, -0.2, -0.2), 0.05, (8, 8, 12))
    with pytest.raises(LS.LevelSetError):
        LS.levelset_streamline(g, [0, 0, 0])


def test_voxelize_rejects_bad_input():
    with pytest.raises(MeshError):
        LS.voxelize(plane_grid(4, 4), icosphere(2, 2.0), 0.1)
    with pytest.raises(MeshError):
        LS.voxelize(icosphere(2, 2.0), icosphere(2, 1.0), 0.1)
    with pytest.raises(LS.LevelSetError):
        LS.voxelize(icosphere(2, 1.0), icosphere(2, 1.001), 0.5)


def test_write_grid(tmp_path, sphere_grid):
    _, g = sphere_grid
    LS.write_grid(g, tmp_path / "g.vtk")
    doc = read_vtk_structured_points(tmp_path / "g.vtk")
    assert doc["dims"] == g.dims
    assert np.array_equal(doc["point_data"]["F"], g.F)
    assert np.array_equal(doc["point_data"]["label"], g.labels.astype(float))


def test_deterministic_solve(sphere_grid):
    _, g = sphere_grid
    again = LS.voxelize(icosphere(4, 1.0), icosphere(4, 2.0), 0.1)
    LS.solve_laplace(again)
    assert np.array_equal(again.F, g.F)
