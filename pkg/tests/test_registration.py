import json

import numpy as np
import pytest

from normalcoords import registration as R
from normalcoords.attachment import VarifoldSpec
from normalcoords.kernel import KernelSpec
from normalcoords.mesh import face_areas
from normalcoords.synth import icosphere


def small_config(**kw):
    base = dict(kernel=KernelSpec(0.6), varifold=VarifoldSpec(0.8), n_steps=3, max_outer=4, max_inner=40)
    base.update(kw)
    return R.RegistrationConfig(**base)


@pytest.fixture(scope="module")
def small_run():
    inner, outer = icosphere(1, 1.0), icosphere(1, 1.5)
    cfg = small_config()
    state, report = R.optimize(cfg, inner, outer)
    return cfg, inner, outer, state, report


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(constraint="abs")
    with pytest.raises(ValueError):
        small_config(n_steps=0)
    with pytest.raises(ValueError):
        small_config(mu_growth=1.0)
    with pytest.raises(ValueError):
        small_config(tol_c=-1.0)
    cfg = small_config(hybrid_weight=0.2)
    again = R.RegistrationConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_forward_euler_matches_numpy_path(small_run):
    cfg, inner, _, state, _ = small_run
    q = R.integrate_forward(cfg, inner.vertices, state.alpha)
    assert np.allclose(q, state.q, atol=1e-12)


def test_zero_momenta_objective():
    cfg = small_config()
    inner, outer = icosphere(1, 1.0), icosphere(1, 1.5)
    state = R.initial_state(cfg, inner)
    total, out = R.objective(cfg, state, outer)
    # auto weight makes the initial attachment equal to attachment_scale
    assert np.isclose(total, cfg.attachment_scale)
    assert out["kinetic"] == 0.0
    assert np.abs(R.state_residuals(cfg, state)[0]).max() == 0.0


def test_smooth_and_sqrt_residuals():
    m = icosphere(1)
    nu = m.vertices / np.linalg.norm(m.vertices, axis=1, keepdims=True)
    v = 2.0 * nu + 0.1 * np.cross(nu, [0, 0, 1])
    smooth = R.constraint_residuals(small_config(), m, v)
    sqrt_form = R.constraint_residuals(small_config(constraint="sqrt"), m, v)
    assert np.all(smooth >= -1e-12) and np.all(sqrt_form >= -1e-8)
    assert np.allclose(R.constraint_residuals(small_config(), m, 3 * R.vertex_normals(m)), 0, atol=1e-12)


def test_solution_is_outward_and_sane(small_run):
    _, inner, _, state, report = small_run
    r0 = np.linalg.norm(state.q[0], axis=1)
    r1 = np.linalg.norm(state.q[-1], axis=1)
    assert np.all(r1 > r0 + 0.3)
    # diffeomorphism surrogate
    assert min(face_areas(q, state.faces).min() for q in state.q) > 1e-3 * face_areas(inner.vertices, inner.faces).min()
    assert report.max_step_displacement < report.mean_edge_length
    assert report.monotone_violations == 0
    assert report.outer[-1].backward_fraction == 0.0


def test_penalty_schedule(small_run):
    cfg, _, _, _, report = small_run
    recs = report.outer
    best = np.inf
    for a, b in zip(recs, recs[1:]):
        # mu grows unless the residual shrank enough relative to the best so far
        assert (b.mu > a.mu) == (a.max_residual > cfg.residual_ratio * best)
        best = min(best, a.max_residual)
    # the returned state is the one with the smallest residual
    assert report.final["max_residual"] <= min(r.max_residual for r in recs) * (1 + 1e-9)


def test_identical_surfaces_converge_immediately():
    m = icosphere(1)
    state, report = R.optimize(small_config(), m, m)
    assert report.converged and len(report.outer) == 1
    assert report.final["kinetic"] < 1e-8


def test_checkpoint_round_trip(tmp_path, small_run):
    cfg, _, _, state, report = small_run
    p = tmp_path / "flow.json"
    R.save_checkpoint(p, cfg, state, report)
    cfg2, state2, rep2 = R.load_checkpoint(p)
    assert cfg2 == cfg
    assert np.array_equal(state2.q, state.q) and np.array_equal(state2.alpha, state.alpha)
    assert rep2["converged"] == report.converged


def test_deterministic(small_run):
    cfg, inner, outer, state, _ = small_run
    again, _ = R.optimize(cfg, inner, outer)
    assert np.array_equal(again.q, state.q)


def test_lbfgs_rosenbrock():
    def fg(x):
        f = 100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2
        g = np.array([-400 * x[0] * (x[1] - x[0] ** 2) - 2 * (1 - x[0]), 200 * (x[1] - x[0] ** 2)])
        return f, g

    x, fx, gx, n_it, viol, _ = R.lbfgs(fg, np.array([-1.2, 1.0]), gtol=1e-10)
    assert np.allclose(x, 1.0, atol=1e-6)
    assert viol == 0


def test_sphere_run_report(sphere_run):
    rep = sphere_run.report
    row = rep.performance_row()
    assert row["inner_vertices"] == 642 and row["inner_faces"] == 1280
    assert rep.monotone_violations == 0
    assert rep.max_step_displacement < rep.mean_edge_length
    assert rep.min_face_area > 0
