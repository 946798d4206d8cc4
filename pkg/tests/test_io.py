import numpy as np
import pytest

from normalcoords.io import (MeshParseError, infer_format, load_mesh, read_vtk_polydata,
                             read_vtk_structured_points, save_mesh, write_vtk_polydata,
                             write_vtk_structured_points)
from normalcoords.synth import icosphere


@pytest.mark.parametrize("fmt", ["off", "vtk"])
def test_round_trip_exact(tmp_path, fmt):
    m = icosphere(2)
    m = m.copy(m.vertices * np.pi)
    if fmt == "vtk":
        m.point_data["h"] = np.random.default_rng(0).random(m.n_vertices)
        m.point_data["n"] = np.random.default_rng(1).random((m.n_vertices, 3))
        m.cell_data["a"] = np.arange(m.n_faces, dtype=float)
    p = tmp_path / f"m.{fmt}"
    save_mesh(m, p)
    r = load_mesh(p)
    assert np.array_equal(r.vertices, m.vertices)
    assert np.array_equal(r.faces, m.faces)
    for k, v in m.point_data.items():
        assert np.array_equal(r.point_data[k], v)
    for k, v in m.cell_data.items():
        assert np.array_equal(r.cell_data[k], v)


def test_unknown_format():
    with pytest.raises(ValueError, match="unsupported"):
        infer_format("x.stl")


def test_off_error_has_line_number(tmp_path):
    p = tmp_path / "bad.off"
    p.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 3\n")
    with pytest.raises(MeshParseError, match="face index 3 out of range") as e:
        load_mesh(p)
    assert e.value.line == 6


def test_off_bad_number(tmp_path):
    p = tmp_path / "bad.off"
    p.write_text("OFF\n3 1 0\n0 0 0\n1 x 0\n0 1 0\n3 0 1 2\n")
    with pytest.raises(MeshParseError) as e:
        load_mesh(p)
    assert e.value.line == 4


def test_polylines(tmp_path):
    pts = np.random.default_rng(2).random((7, 3))
    lines = [np.arange(0, 3), np.arange(3, 7)]
    p = tmp_path / "l.vtk"
    write_vtk_polydata(p, pts, lines=lines, point_data={"tau": np.linspace(0, 1, 7)},
                       cell_data={"thickness": np.array([1.0, 2.0])})
    doc = read_vtk_polydata(p)
    assert np.array_equal(doc["points"], pts)
    assert [list(x) for x in doc["lines"]] == [list(x) for x in lines]
    assert np.array_equal(doc["cell_data"]["thickness"], [1.0, 2.0])


def test_structured_points(tmp_path):
    v = np.random.default_rng(3).random((3, 4, 5))
    p = tmp_path / "g.vtk"
    write_vtk_structured_points(p, (0.5, 0, -1), 0.25, v, extra={"label": np.ones_like(v)})
    doc = read_vtk_structured_points(p)
    assert doc["dims"] == (3, 4, 5)
    assert np.array_equal(doc["point_data"]["F"], v)
    assert np.allclose(doc["origin"], [0.5, 0, -1])
