import numpy as np
import pytest

from normalcoords.metrics import fs_distance
from normalcoords.synth import (FixtureSpec, check_normals_inner_to_outer, generate, oracle_F,
                                oracle_layer_radius)


def test_sphere_pair_oracle():
    inner, outer, oracle = generate(FixtureSpec(kind="sphere-pair", subdivision=4))
    assert inner.n_vertices == outer.n_vertices == 2562
    assert oracle.thickness(None) == 1.0
    assert np.isclose(oracle.layer_radius(0.5), 4.5 ** (1 / 3))
    assert np.isclose(oracle.F([1.5, 0, 0]), (1 - 1 / 1.5) / 0.5)
    assert check_normals_inner_to_outer(inner, outer) == 1.0


def test_cylinder_oracles():
    spec = FixtureSpec(kind="cylinder-pair", resolution=0.3, extent=(2.0,))
    assert np.isclose(oracle_layer_radius(spec, 0.5), np.sqrt(2.5))
    assert np.isclose(oracle_F(spec, [np.sqrt(2), 0, 0.3]), 0.5)
    inner, outer, _ = generate(spec)
    assert check_normals_inner_to_outer(inner, outer) == 1.0


def test_sheet_pair():
    inner, outer, oracle = generate(FixtureSpec(kind="sheet-pair", separation=0.4, resolution=0.5))
    assert oracle.thickness(None) == 0.4
    assert np.allclose(fs_distance(inner, outer).values, 0.4)


def test_folded_sheet_is_separated():
    inner, outer, oracle = generate(FixtureSpec(kind="folded-sheet-pair"))
    assert oracle.constants["min_vertex_gap"] > 0
    assert check_normals_inner_to_outer(inner, outer) == 1.0
    assert oracle.thickness(None) is None


def test_flower_tube():
    inner, outer, oracle = generate(FixtureSpec(kind="flower-tube-pair", outer_radius=2.0, amplitude=0.4,
                                                resolution=0.3, extent=(1.0,)))
    r = np.linalg.norm(outer.vertices[:, :2], axis=1)
    assert np.isclose(r.min(), 1.6, atol=0.02) and np.isclose(r.max(), 2.4, atol=1e-9)


def test_invalid_specs():
    with pytest.raises(ValueError):
        FixtureSpec(kind="torus")
    with pytest.raises(ValueError):
        FixtureSpec(kind="sphere-pair", inner_radius=2.0, outer_radius=1.0)
    with pytest.raises(ValueError):
        FixtureSpec(kind="flower-tube-pair", inner_radius=1.0, outer_radius=1.5, amplitude=0.6)


def test_oracle_json_describes_closed_forms():
    _, _, oracle = generate(FixtureSpec(kind="sphere-pair", subdivision=1))
    d = oracle.to_dict()
    assert d["closed_forms"]["layer_radius"].startswith("(a^3")
    assert d["spec"]["kind"] == "sphere-pair"
