"""Laminar coordinates from a solved flow.

Given trajectories p[i][k] of the inner-surface vertices, this module
computes streamline thickness, the surface Jacobian sigma (area dilation of
the evolving surface along each streamline), the equivolumetric time change
tau, layer surfaces at fixed tau, and two comparator rules (Waehnert's
quadratic depth and Leprince's curvature ODE).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from .io import write_csv, write_vtk_polydata
from .kernel import eval_velocity, eval_velocity_jacobian
from .mesh import TriMesh, mean_curvature, one_ring_areas, surface_divergence, vertex_normals

logger = logging.getLogger(__name__)


@dataclass
class LaminarSystem:
    """Per-seed streamline data; index i runs over time samples, k over seeds.

    points (n_steps + 1, N, 3); sigma and tau (n_steps + 1, N); s (n_steps, N),
    the normal speed on each time interval; c0, thickness and flagged (N,).
    """
    points: np.ndarray
    faces: np.ndarray
    sigma: np.ndarray | None = None
    s: np.ndarray | None = None
    c0: np.ndarray | None = None
    tau: np.ndarray | None = None
    thickness: np.ndarray | None = None
    flagged: np.ndarray | None = None
    normals: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_steps(self):
        return self.points.shape[0] - 1

    @property
    def n_seeds(self):
        return self.points.shape[1]

    @property
    def times(self):
        return np.linspace(0.0, 1.0, self.n_steps + 1)

    def surface(self, i):
        return TriMesh(self.points[i], self.faces, validate=False)


# ----------------------------------------------------------------------------- streamlines

def streamlines_from_flow(state):
    """Vertex trajectories of the solved flow, used verbatim as streamlines."""
    return LaminarSystem(points=np.array(state.q, dtype=float), faces=np.array(state.faces))


def streamline_from_point(state, seed, substeps=1, kernel=None):
    """Integrate dy/dt = v(t, y) from ``seed`` with RK4.

    On [t_i, t_{i+1}] the field is the one carried by (q[i], alpha[i]). Returns
    the polyline at the time samples, shape (n_steps + 1, 3), or
    (n_steps + 1, M, 3) for an (M, 3) array of seeds.
    """
    spec = kernel if kernel is not None else state.kernel
    if spec is None:
        raise ValueError("flow state carries no kernel; pass kernel=")
    y = np.array(seed, dtype=float)
    single = y.ndim == 1
    y = y.reshape(-1, 3)
    nt = state.n_steps
    h = 1.0 / (nt * substeps)
    out = [y.copy()]
    for i in range(nt):
        f = lambda x, i=i: eval_velocity(spec, state.q[i], state.alpha[i], x)
        for _ in range(substeps):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y.copy())
    out = np.array(out)
    return out[:, 0] if single else out


def polyline_length(points):
    """Arc length of polylines; points has shape (n, 3) or (n, M, 3)."""
    p = np.asarray(points, dtype=float)
    return np.linalg.norm(np.diff(p, axis=0), axis=-1).sum(axis=0)


def thickness(system):
    """Streamline length sum_i |p[i+1] - p[i]| per seed (stored on the system)."""
    system.thickness = polyline_length(system.points)
    return system.thickness


# ----------------------------------------------------------------------------- sigma

def sigma_one_ring(state_or_system):
    """Area ratio of the one-ring around each vertex, relative to time 0."""
    pts = state_or_system.q if hasattr(state_or_system, "q") else state_or_system.points
    faces = state_or_system.faces
    a0 = one_ring_areas(TriMesh(pts[0], faces, validate=False))
    return np.array([one_ring_areas(TriMesh(p, faces, validate=False)) / a0 for p in pts])


def zeta_ode(velocity, jacobian, y0, nu0, times, substeps=4):
    """Integrate the streamline y and zeta with dzeta/dt = div(v) zeta - Dv^T zeta.

    ``velocity(i, t, y)`` and ``jacobian(i, t, y)`` evaluate the field and its
    spatial Jacobian (Dv[a, b] = dv_a/dx_b) on time interval i for points y
    (M, 3). Returns (y, zeta) sampled at ``times``, each (len(times), M, 3);
    sigma is |zeta| when nu0 are unit normals.
    """
    y = np.array(y0, dtype=float).reshape(-1, 3)
    z = np.array(nu0, dtype=float).reshape(-1, 3)

    def rhs(i, t, y, z):
        J = jacobian(i, t, y)
        div = np.trace(J, axis1=1, axis2=2)
        return velocity(i, t, y), div[:, None] * z - np.einsum("mba,mb->ma", J, z)

    ys, zs = [y.copy()], [z.copy()]
    for i in range(len(times) - 1):
        h = (times[i + 1] - times[i]) / substeps
        t = times[i]
        for _ in range(substeps):
            k1 = rhs(i, t, y, z)
            k2 = rhs(i, t + h / 2, y + h / 2 * k1[0], z + h / 2 * k1[1])
            k3 = rhs(i, t + h / 2, y + h / 2 * k2[0], z + h / 2 * k2[1])
            k4 = rhs(i, t + h, y + h * k3[0], z + h * k3[1])
            y = y + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            z = z + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            t += h
        ys.append(y.copy())
        zs.append(z.copy())
    return np.array(ys), np.array(zs)


def sigma_zeta_ode(state, substeps=4, kernel=None):
    """Surface Jacobian from the zeta evolution along vertex streamlines."""
    spec = kernel if kernel is not None else state.kernel
    if spec is None:
        raise ValueError("flow state carries no kernel; pass kernel=")
    nu0 = vertex_normals(state.mesh_at(0))
    vel = lambda i, t, y: eval_velocity(spec, state.q[i], state.alpha[i], y)
    jac = lambda i, t, y: eval_velocity_jacobian(spec, state.q[i], state.alpha[i], y)
    _, z = zeta_ode(vel, jac, state.q[0], nu0, state.times, substeps)
    return np.linalg.norm(z, axis=-1)


# ----------------------------------------------------------------------------- time change

def evolving_normals(system):
    if system.normals is None:
        system.normals = np.array([vertex_normals(system.surface(i)) for i in range(system.n_steps + 1)])
    return system.normals


def equivolumetric_time_change(system):
    """Fill s, c0, tau and flagged on ``system`` (sigma must be set).

    s[i] is the normal speed on interval i, using the normal at the interval
    start. c0 = sum_i dt s_i (sigma_i + sigma_{i+1}) / 2 and tau is the
    normalized running sum. Seeds with c0 <= 0 are flagged and get tau = nan.
    """
    if system.sigma is None:
        raise ValueError("sigma has not been computed")
    nu = evolving_normals(system)
    p, sig = system.points, system.sigma
    dt = 1.0 / system.n_steps
    system.s = np.einsum("ikj,ikj->ik", nu[:-1], np.diff(p, axis=0)) / dt
    inc = dt * system.s * 0.5 * (sig[:-1] + sig[1:])
    cum = np.vstack([np.zeros(system.n_seeds), np.cumsum(inc, axis=0)])
    system.c0 = cum[-1].copy()
    system.flagged = ~(system.c0 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = cum / system.c0
    tau[:, system.flagged] = np.nan
    tau[-1, ~system.flagged] = 1.0
    system.tau = tau
    if system.flagged.any():
        logger.warning("%d seeds have a non-positive equivolumetric thickness", int(system.flagged.sum()))
    return system


def build_laminar(state, sigma_method="one_ring", substeps=4):
    """Streamlines, thickness, sigma and time change for a solved flow."""
    system = streamlines_from_flow(state)
    thickness(system)
    if sigma_method == "one_ring":
        system.sigma = sigma_one_ring(state)
    elif sigma_method == "zeta":
        system.sigma = sigma_zeta_ode(state, substeps)
    else:
        raise ValueError("sigma_method must be 'one_ring' or 'zeta'")
    return equivolumetric_time_change(system)


def _interp_profile(tau, pts, eps):
    """Point at tau = eps along one polyline (tau nondecreasing)."""
    if eps <= tau[0]:
        return pts[0]
    if eps >= tau[-1]:
        return pts[-1]
    j = int(np.searchsorted(tau, eps, side="right")) - 1
    j = min(max(j, 0), len(tau) - 2)
    span = tau[j + 1] - tau[j]
    w = 0.0 if span <= 0 else (eps - tau[j]) / span
    return (1 - w) * pts[j] + w * pts[j + 1]


def extract_layer(system, eps):
    """Surface of points with tau = eps, with the topology of the inner surface.

    Flagged seeds borrow the tau profile of the nearest valid seed and are
    marked in point_data["flagged"].
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    if system.tau is None:
        raise ValueError("time change has not been computed")
    tau = np.array(system.tau)
    flagged = np.asarray(system.flagged, dtype=bool)
    if flagged.any():
        valid = np.flatnonzero(~flagged)
        if len(valid):
            _, nn = cKDTree(system.points[0, valid]).query(system.points[0, flagged])
            tau[:, flagged] = tau[:, valid[nn]]
        else:
            tau[:, flagged] = system.times[:, None]
    # running maximum guards against tiny backward steps
    tau = np.maximum.accumulate(tau, axis=0)
    verts = np.array([_interp_profile(tau[:, k], system.points[:, k], eps)
                      for k in range(system.n_seeds)])
    return TriMesh(verts, system.faces, point_data={"flagged": flagged.astype(float)}, validate=False)


# ----------------------------------------------------------------------------- comparator rules

def waehnert_depth(theta, sigma1, eps):
    """Relative depth rho in [0, 1] of the equivolume layer eps under Waehnert's rule.

    The local volume to depth rho is theta rho (1 + rho (sigma1 - 1) / 2);
    rho solves V(rho) = eps V(1). The thickness theta cancels but must be > 0.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise ValueError("thickness must be > 0")
    if np.any(np.asarray(sigma1) <= 0):
        raise ValueError("sigma1 must be > 0")
    k = np.asarray(sigma1, dtype=float) - 1.0
    eps = np.asarray(eps, dtype=float)
    c = eps * (1.0 + 0.5 * k)
    # cancellation-free root of (k/2) rho^2 + rho - c = 0
    rho = 2.0 * c / (1.0 + np.sqrt(1.0 + 2.0 * k * c))
    return rho + 0.0 * theta


def leprince_sigma(H, theta, times=None, substeps=4):
    """sigma along a constant-speed normal evolution: dsigma/dt = -2 theta sigma H.

    H holds samples at ``times`` (default uniform on [0, 1]), shape (n,) or
    (n, M); it is interpolated with a cubic spline and the ODE is integrated
    with RK4, sigma(0) = 1.
    """
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    times = np.linspace(0.0, 1.0, n) if times is None else np.asarray(times, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if n == 1:
        return np.ones_like(H)
    Hs = CubicSpline(times, H, axis=0)
    f = lambda t, s: -2.0 * theta * Hs(t) * s
    sig = np.ones(H.shape[1:])
    out = [sig.copy()]
    for i in range(n - 1):
        h = (times[i + 1] - times[i]) / substeps
        t = times[i]
        for _ in range(substeps):
            k1 = f(t, sig)
            k2 = f(t + h / 2, sig + h / 2 * k1)
            k3 = f(t + h / 2, sig + h / 2 * k2)
            k4 = f(t + h, sig + h * k3)
            sig = sig + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        out.append(sig.copy())
    return np.array(out)


def leprince_sigma_from_system(system):
    """Leprince's sigma along each registration streamline.

    Mean curvature is sampled on the evolving surfaces and reparametrized by
    normalized arc length, which is the constant-speed time of that model;
    theta is the streamline thickness. Returns sigma at the system's samples.
    """
    if system.thickness is None:
        thickness(system)
    H = np.array([mean_curvature(system.surface(i))[0] for i in range(system.n_steps + 1)])
    seg = np.linalg.norm(np.diff(system.points, axis=0), axis=-1)
    arc = np.vstack([np.zeros(system.n_seeds), np.cumsum(seg, axis=0)])
    out = np.ones_like(H)
    for k in range(system.n_seeds):
        th = arc[-1, k]
        if th <= 0:
            continue
        u = arc[:, k] / th
        keep = np.concatenate([[True], np.diff(u) > 1e-12])
        out[keep, k] = leprince_sigma(H[keep, k], th, times=u[keep])
    return out


# ----------------------------------------------------------------------------- area-rate identity

def area_rate_residual(surfaces, times, normal_speed, tangent_field=None):
    """Relative residual of dsigma/dt = sigma (div_S(w) - 2 zeta H) along vertices.

    ``surfaces`` is a sequence of meshes sharing topology, sampled at ``times``;
    ``normal_speed`` (T, N) is zeta and ``tangent_field`` (T, N, 3) the
    tangential velocity w (default 0). The time derivative uses central
    differences, so residuals are returned for the interior samples 1..T-2,
    shape (T-2, N), together with the boundary-vertex mask.
    """
    times = np.asarray(times, dtype=float)
    faces = surfaces[0].faces
    a0 = one_ring_areas(surfaces[0])
    sig = np.array([one_ring_areas(TriMesh(s.vertices, faces, validate=False)) / a0 for s in surfaces])
    res = []
    for i in range(1, len(surfaces) - 1):
        dsig = (sig[i + 1] - sig[i - 1]) / (times[i + 1] - times[i - 1])
        H, bnd = mean_curvature(surfaces[i])
        rhs = -2.0 * normal_speed[i] * H
        if tangent_field is not None:
            rhs = rhs + surface_divergence(surfaces[i], tangent_field[i])[0]
        rhs = sig[i] * rhs
        with np.errstate(divide="ignore", invalid="ignore"):
            res.append(np.abs(dsig - rhs) / np.abs(dsig))
    return np.array(res), surfaces[0].boundary_vertices()


# ----------------------------------------------------------------------------- export

def write_streamlines(system, path):
    """Polylines with per-point tau and per-line thickness."""
    nt1, n = system.n_steps + 1, system.n_seeds
    pts = system.points.transpose(1, 0, 2).reshape(-1, 3)
    lines = [np.arange(k * nt1, (k + 1) * nt1) for k in range(n)]
    pdata = {}
    if system.tau is not None:
        pdata["tau"] = np.nan_to_num(system.tau.T.reshape(-1), nan=-1.0)
    cdata = {"thickness": system.thickness if system.thickness is not None else polyline_length(system.points)}
    write_vtk_polydata(path, pts, lines=lines, point_data=pdata, cell_data=cdata)


def write_seed_table(system, path):
    rows = []
    for k in range(system.n_seeds):
        rows.append((k, float(system.thickness[k]),
                     float(system.c0[k]) if system.c0 is not None else float("nan"),
                     int(bool(system.flagged[k])) if system.flagged is not None else 0))
    write_csv(path, ("seed", "thickness", "c0", "flagged"), rows)
