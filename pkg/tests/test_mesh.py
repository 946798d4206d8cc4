import numpy as np
import pytest

from normalcoords.mesh import (DegenerateFaceError, MeshError, OrientationError, TriMesh, face_geometry,
                               mean_curvature, mixed_voronoi_areas, one_ring_area, one_ring_areas,
                               surface_divergence, vertex_normals)
from normalcoords.synth import icosphere, plane_grid, tube


def test_single_triangle():
    m = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    n, a, c = face_geometry(m)
    assert np.allclose(n, [[0, 0, 1]])
    assert np.isclose(a[0], 0.5)
    assert np.allclose(c, [[1 / 3, 1 / 3, 0]])
    assert m.is_closed() is False
    assert m.boundary_vertices().all()


def test_rejects_bad_index():
    with pytest.raises(MeshError, match="out of range"):
        TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]])


def test_rejects_degenerate_face():
    with pytest.raises(DegenerateFaceError) as e:
        TriMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
    assert e.value.face == 0


def test_rejects_inconsistent_winding():
    v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]]
    with pytest.raises(OrientationError):
        TriMesh(v, [[0, 1, 2], [1, 2, 3]])


def test_channel_length_checked():
    with pytest.raises(MeshError, match="point channel"):
        TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]], point_data={"x": np.zeros(2)})


def test_sphere_geometry():
    m = icosphere(4, 2.0)
    assert m.is_closed()
    assert np.isclose(m.area(), 4 * np.pi * 4, rtol=2e-3)
    assert np.isclose(m.volume(), 4 / 3 * np.pi * 8, rtol=3e-3)
    nv = vertex_normals(m)
    radial = m.vertices / np.linalg.norm(m.vertices, axis=1, keepdims=True)
    assert np.einsum("ij,ij->i", nv, radial).min() > 0.999
    H, bnd = mean_curvature(m)
    assert not bnd.any()
    # outward normals on a sphere of radius r give H = -1/r
    assert np.allclose(H, -0.5, rtol=1e-2)


def test_voronoi_areas_partition_the_surface():
    m = icosphere(2)
    assert np.isclose(mixed_voronoi_areas(m).sum(), m.area())
    assert np.isclose(one_ring_areas(m).sum(), 3 * m.area())
    assert np.isclose(one_ring_area(m, 5), one_ring_areas(m)[5])


def test_cylinder_curvature_and_flags():
    m = tube(lambda t: np.full_like(t, 1.0), 2.0, 64, 21)
    H, bnd = mean_curvature(m)
    assert bnd.sum() == 2 * 64
    assert np.allclose(H[~bnd], -0.5, rtol=1e-2)


def test_divergence_of_linear_tangent_field_on_plane():
    m = plane_grid(8, 8, 0.25)
    field = np.column_stack([m.vertices[:, 0], 2 * m.vertices[:, 1], np.zeros(m.n_vertices)])
    div, bnd = surface_divergence(m, field)
    assert np.allclose(div[~bnd], 3.0)


def test_divergence_on_sphere():
    m = icosphere(4)
    x = m.vertices
    # tangential gradient of z on the unit sphere; its divergence is -2z
    grad_z = np.array([0.0, 0.0, 1.0]) - x[:, 2:3] * x
    div, _ = surface_divergence(m, grad_z)
    assert np.abs(div + 2 * x[:, 2]).max() < 0.05
    spin = np.cross([0.3, -1.0, 0.5], x)
    assert np.abs(surface_divergence(m, spin)[0]).max() < 1e-2
