import numpy as np
import pytest

from normalcoords.kernel import (KernelSpec, eval_velocity, eval_velocity_jacobian, hybrid_norm_sq,
                                 kernel_matrix, vnorm_sq)
from normalcoords.synth import icosphere


def test_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(0.0)
    with pytest.raises(ValueError):
        KernelSpec(1.0, extra=((0.5, -1.0),))
    s = KernelSpec(1.0, extra=((0.5, 2.0),))
    assert KernelSpec.from_dict(s.to_dict()) == s


def test_single_momentum():
    spec = KernelSpec(0.5)
    v = eval_velocity(spec, [[0, 0, 0]], [[1, 2, 3]], [0.5, 0, 0])
    assert np.allclose(v, np.exp(-0.5) * np.array([1, 2, 3]))


def test_multiscale_sum():
    spec = KernelSpec(0.5, extra=((2.0, 3.0),))
    K = kernel_matrix(spec, [[0, 0, 0]], [[1, 0, 0]])
    assert np.isclose(K[0, 0], np.exp(-2.0) + 3 * np.exp(-1 / 8))


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(0)
    spec = KernelSpec(0.7, extra=((0.3, 0.5),))
    q, a, x = rng.standard_normal((6, 3)), rng.standard_normal((6, 3)), rng.standard_normal(3)
    J = eval_velocity_jacobian(spec, q, a, x)
    h = 1e-6
    fd = np.column_stack([(eval_velocity(spec, q, a, x + h * e) - eval_velocity(spec, q, a, x - h * e)) / (2 * h)
                          for e in np.eye(3)])
    assert np.allclose(J, fd, atol=1e-8)


def test_norm_positive():
    rng = np.random.default_rng(1)
    q, a = rng.standard_normal((10, 3)), rng.standard_normal((10, 3))
    assert vnorm_sq(KernelSpec(0.4), q, a) > 0


def test_hybrid_norm_adds_surface_term():
    m = icosphere(1)
    a = np.random.default_rng(2).standard_normal((m.n_vertices, 3))
    spec = KernelSpec(0.6)
    assert hybrid_norm_sq(spec, m, a, 0.0) == pytest.approx(vnorm_sq(spec, m.vertices, a))
    assert hybrid_norm_sq(spec, m, a, 0.5) > vnorm_sq(spec, m.vertices, a)
    with pytest.raises(ValueError):
        hybrid_norm_sq(spec, m, a, -1.0)


def test_mismatched_inputs():
    with pytest.raises(ValueError):
        eval_velocity(KernelSpec(1.0), np.zeros((2, 3)), np.zeros((3, 3)), np.zeros(3))
