"""Volumetric baseline: Laplace potential between two closed nested surfaces.

The ribbon between the inner surface S0 and the outer surface S1 is
voxelized by ray parity. F solves the Laplace equation with F = 0 on S0 and
F = 1 on S1, and streamlines follow grad F / |grad F|^2 so that F increases
by one unit per unit time.

Grid nodes next to a surface use Shortley-Weller arms: the distance to the
surface crossing along each axis replaces the grid spacing, which keeps the
scheme second order at curved boundaries.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import ndimage

from .io import write_vtk_structured_points
from .mesh import MeshError

logger = logging.getLogger(__name__)

INSIDE, RIBBON, OUTSIDE = 0, 1, 2

# sub-nanometre offsets of the casting lines; avoids rays through mesh edges and vertices
_JITTER = (1.2345678e-9, 2.3456789e-9)


class LevelSetError(RuntimeError):
    pass


class StalledStreamlineError(LevelSetError):
    def __init__(self, point):
        super().__init__(f"|grad F| vanishes near {tuple(float(c) for c in point)}")
        self.point = np.asarray(point)


@dataclass
class ScalarGrid:
    """Uniform grid; node (i, j, k) sits at origin + h (i, j, k)."""
    origin: np.ndarray
    h: float
    labels: np.ndarray                       # int8, (nx, ny, nz)
    arms: np.ndarray | None = None           # (nx, ny, nz, 6) boundary distance / h, 1 if no crossing
    F: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("grid spacing must be > 0")
        self.origin = np.asarray(self.origin, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int8)

    @property
    def dims(self):
        return self.labels.shape

    def node(self, i, j, k):
        return self.origin + self.h * np.array([i, j, k], dtype=float)

    def coords(self, axis):
        return self.origin[axis] + self.h * np.arange(self.dims[axis])

    def n_ribbon(self):
        return int(np.count_nonzero(self.labels == RIBBON))


# ----------------------------------------------------------------------------- ray casting

@numba.njit(cache=True)
def _line_hits(P, faces, axis, o1, o2, h, n1, n2, j1, j2):
    """Intersections of the mesh with grid lines parallel to ``axis``.

    Lines pass through (o1 + h i1 + j1, o2 + h i2 + j2) in the other two axes.
    Returns flat line ids (i1 * n2 + i2) and the axis coordinate of each hit.
    """
    b = (axis + 1) % 3
    c = (axis + 2) % 3
    cap = 64
    ids = np.empty(cap, np.int64)
    ts = np.empty(cap)
    m = 0
    for f in range(faces.shape[0]):
        A = P[faces[f, 0]]
        B = P[faces[f, 1]]
        C = P[faces[f, 2]]
        ub0 = min(A[b], B[b], C[b])
        ub1 = max(A[b], B[b], C[b])
        uc0 = min(A[c], B[c], C[c])
        uc1 = max(A[c], B[c], C[c])
        lo1 = max(int(np.ceil((ub0 - o1 - j1) / h)), 0)
        hi1 = min(int(np.floor((ub1 - o1 - j1) / h)), n1 - 1)
        lo2 = max(int(np.ceil((uc0 - o2 - j2) / h)), 0)
        hi2 = min(int(np.floor((uc1 - o2 - j2) / h)), n2 - 1)
        area = (B[b] - A[b]) * (C[c] - A[c]) - (B[c] - A[c]) * (C[b] - A[b])
        if area == 0.0:
            continue
        for i1 in range(lo1, hi1 + 1):
            y = o1 + h * i1 + j1
            for i2 in range(lo2, hi2 + 1):
                z = o2 + h * i2 + j2
                w0 = (B[b] - y) * (C[c] - z) - (B[c] - z) * (C[b] - y)
                w1 = (C[b] - y) * (A[c] - z) - (C[c] - z) * (A[b] - y)
                w2 = (A[b] - y) * (B[c] - z) - (A[c] - z) * (B[b] - y)
                if (w0 >= 0 and w1 >= 0 and w2 >= 0) or (w0 <= 0 and w1 <= 0 and w2 <= 0):
                    t = (w0 * A[axis] + w1 * B[axis] + w2 * C[axis]) / (w0 + w1 + w2)
                    if m == cap:
                        cap *= 2
                        ids2 = np.empty(cap, np.int64)
                        ts2 = np.empty(cap)
                        ids2[:m] = ids[:m]
                        ts2[:m] = ts[:m]
                        ids, ts = ids2, ts2
                    ids[m] = i1 * n2 + i2
                    ts[m] = t
                    m += 1
    return ids[:m], ts[:m]


class _Crossings:
    """Sorted surface crossings per grid line for one mesh and one axis."""

    def __init__(self, mesh, axis, origin, h, dims):
        b, c = (axis + 1) % 3, (axis + 2) % 3
        self.axis, self.n2 = axis, dims[c]
        ids, ts = _line_hits(np.ascontiguousarray(mesh.vertices, dtype=float),
                             np.ascontiguousarray(mesh.faces, dtype=np.int64), axis,
                             float(origin[b]), float(origin[c]), float(h), dims[b], dims[c],
                             _JITTER[0], _JITTER[1])
        order = np.lexsort((ts, ids))
        self.ids, self.ts = ids[order], ts[order]
        n_lines = dims[b] * dims[c]
        self.start = np.searchsorted(self.ids, np.arange(n_lines + 1))

    def line(self, i1, i2):
        lid = i1 * self.n2 + i2
        return self.ts[self.start[lid]:self.start[lid + 1]]

    def parity_above(self, coords):
        """For every line, parity of the crossings above each coordinate: shape (n1, n2, len(coords))."""
        n_lines = len(self.start) - 1
        out = np.zeros((n_lines, len(coords)), dtype=bool)
        for lid in range(n_lines):
            s, e = self.start[lid], self.start[lid + 1]
            if e > s:
                above = (e - s) - np.searchsorted(self.ts[s:e], coords, side="right")
                out[lid] = above % 2 == 1
        return out


def points_inside(mesh, points):
    """Ray-parity point-in-mesh test (rays along +z)."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    P = np.ascontiguousarray(mesh.vertices, dtype=float)
    F = np.ascontiguousarray(mesh.faces, dtype=np.int64)
    out = np.empty(len(points), dtype=bool)
    for n, p in enumerate(points):
        # a one-line "grid" through the point
        ids, ts = _line_hits(P, F, 2, p[0], p[1], 1.0, 1, 1, _JITTER[0], _JITTER[1])
        out[n] = np.count_nonzero(ts > p[2]) % 2 == 1
    return out


# ----------------------------------------------------------------------------- voxelize

def _sample(points, n=256):
    step = max(1, len(points) // n)
    return points[::step]


def _grid_box(outer, h, pad):
    lo = outer.vertices.min(axis=0) - pad * h
    hi = outer.vertices.max(axis=0) + pad * h
    dims = tuple(int(np.ceil((hi[a] - lo[a]) / h)) + 1 for a in range(3))
    return lo, dims


def voxelize(inner, outer, h, pad=3):
    """Label grid nodes and record Shortley-Weller arm lengths.

    Both meshes must be closed, and the inner one must lie inside the outer one.
    """
    for name, m in (("inner", inner), ("outer", outer)):
        if not m.is_closed():
            raise MeshError(f"{name} surface is open; the level-set baseline needs closed surfaces")
    if points_inside(inner, _sample(outer.vertices)).any() or not points_inside(outer, _sample(inner.vertices)).all():
        raise MeshError("surfaces are not nested (inner must lie strictly inside outer)")
    origin, dims = _grid_box(outer, h, pad)
    cross = {(s, a): _Crossings(m, a, origin, h, dims)
             for s, m in ((0, inner), (1, outer)) for a in range(3)}
    zc = origin[2] + h * np.arange(dims[2])
    in0 = cross[(0, 2)].parity_above(zc).reshape(dims)
    in1 = cross[(1, 2)].parity_above(zc).reshape(dims)
    labels = np.full(dims, OUTSIDE, dtype=np.int8)
    labels[in1] = RIBBON
    labels[in0] = INSIDE
    if not (labels == RIBBON).any():
        raise LevelSetError("no ribbon voxels at this resolution")
    arms = _arm_lengths(labels, cross, origin, h)
    grid = ScalarGrid(origin, h, labels, arms)
    grid.info["boundary_value"] = {INSIDE: 0.0, OUTSIDE: 1.0}
    return grid


def _arm_lengths(labels, cross, origin, h):
    """arms[..., 2a] (minus side) and arms[..., 2a+1] (plus side) in units of h."""
    arms = np.ones(labels.shape + (6,))
    rib = labels == RIBBON
    for a in range(3):
        for side in (0, 1):
            shift = 1 if side else -1
            nb = np.roll(labels, -shift, axis=a)
            edge = [slice(None)] * 3
            edge[a] = -1 if side else 0
            nb[tuple(edge)] = RIBBON     # the grid border is not a surface crossing
            idx = np.argwhere(rib & (nb != RIBBON))
            for i, j, k in idx:
                s = 0 if nb[i, j, k] == INSIDE else 1
                pos = [i, j, k]
                x = origin[a] + h * pos[a]
                others = [pos[(a + 1) % 3], pos[(a + 2) % 3]]
                t = cross[(s, a)].line(*others)
                if side:
                    cand = t[(t >= x) & (t <= x + h)]
                    d = (cand.min() - x) if len(cand) else h
                else:
                    cand = t[(t <= x) & (t >= x - h)]
                    d = (x - cand.max()) if len(cand) else h
                arms[i, j, k, 2 * a + side] = max(d / h, 1e-6)
    return arms


def _edge_root(phi, x0, step, iters=60):
    """Fraction w in [0, 1] with phi(x0 + w step) = 0, by bisection (sign change assumed)."""
    lo = np.zeros(len(x0))
    hi = np.ones(len(x0))
    s0 = np.sign(phi(x0))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        same = np.sign(phi(x0 + mid[:, None] * step)) == s0
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def voxelize_implicit(phi0, phi1, origin, h, dims):
    """Labels and arms from level functions (phi0 < 0 inside S0, phi1 < 0 inside S1).

    ``phi`` maps (..., 3) points to (...) values. Crossings along grid edges
    are located by bisection. Surfaces may leave the grid, where zero-flux
    conditions apply.
    """
    origin = np.asarray(origin, dtype=float)
    axes = [origin[a] + h * np.arange(dims[a]) for a in range(3)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    p0, p1 = phi0(X), phi1(X)
    labels = np.full(dims, OUTSIDE, dtype=np.int8)
    labels[p1 < 0] = RIBBON
    labels[p0 < 0] = INSIDE
    if not (labels == RIBBON).any():
        raise LevelSetError("no ribbon voxels at this resolution")
    arms = np.ones(tuple(dims) + (6,))
    rib = labels == RIBBON
    for a in range(3):
        for side in (0, 1):
            shift = 1 if side else -1
            nb = np.roll(labels, -shift, axis=a)
            edge = [slice(None)] * 3
            edge[a] = -1 if side else 0
            nb[tuple(edge)] = RIBBON
            for s, fn in ((INSIDE, phi0), (OUTSIDE, phi1)):
                mask = rib & (nb == s)
                if not mask.any():
                    continue
                step = np.zeros(3)
                step[a] = shift * h
                arms[mask, 2 * a + side] = np.clip(_edge_root(fn, X[mask], step), 1e-6, 1.0)
    grid = ScalarGrid(origin, h, labels, arms)
    grid.info["boundary_value"] = {INSIDE: 0.0, OUTSIDE: 1.0}
    return grid


# ----------------------------------------------------------------------------- Laplace solve

def _stencil(grid):
    """Flattened Shortley-Weller stencil for the ribbon nodes.

    Returns (nodes, nb, coef, const, diag): u[n] = (const + sum coef * u[nb]) / diag.
    """
    labels, arms = grid.labels, grid.arms
    dims = labels.shape
    nodes = np.flatnonzero(labels.ravel() == RIBBON)
    ijk = np.array(np.unravel_index(nodes, dims)).T
    n = len(nodes)
    nb = np.full((n, 6), -1, dtype=np.int64)
    coef = np.zeros((n, 6))
    const = np.zeros(n)
    diag = np.zeros(n)
    strides = np.array([dims[1] * dims[2], dims[2], 1])
    for a in range(3):
        hm = arms[ijk[:, 0], ijk[:, 1], ijk[:, 2], 2 * a]
        hp = arms[ijk[:, 0], ijk[:, 1], ijk[:, 2], 2 * a + 1]
        at_lo = ijk[:, a] == 0
        at_hi = ijk[:, a] == dims[a] - 1
        idx_m = nodes - strides[a]
        idx_p = nodes + strides[a]
        lab_m = np.where(at_lo, RIBBON, labels.ravel()[np.clip(idx_m, 0, labels.size - 1)])
        lab_p = np.where(at_hi, RIBBON, labels.ravel()[np.clip(idx_p, 0, labels.size - 1)])
        # zero-flux border: mirror the opposite arm
        idx_m = np.where(at_lo, idx_p, idx_m)
        idx_p = np.where(at_hi, idx_m, idx_p)
        hm = np.where(at_lo, hp, hm)
        hp = np.where(at_hi, hm, hp)
        lab_m = np.where(at_lo, lab_p, lab_m)
        lab_p = np.where(at_hi, lab_m, lab_p)
        cm = 2.0 / (hm * (hm + hp))
        cp = 2.0 / (hp * (hm + hp))
        diag += cm + cp
        for col, c, idx, lab in ((2 * a, cm, idx_m, lab_m), (2 * a + 1, cp, idx_p, lab_p)):
            free = lab == RIBBON
            nb[free, col] = idx[free]
            coef[free, col] = c[free]
            const[lab == OUTSIDE] += c[lab == OUTSIDE]   # boundary value 1; inside contributes 0
    return nodes, ijk, nb, coef, const, diag


@numba.njit(cache=True)
def _sor(u, nodes, color, nb, coef, const, diag, omega, tol, max_iter):
    n = nodes.shape[0]
    it = 0
    delta = np.inf
    while it < max_iter:
        delta = 0.0
        for c in range(2):
            for m in range(n):
                if color[m] != c:
                    continue
                s = const[m]
                for j in range(6):
                    if nb[m, j] >= 0:
                        s += coef[m, j] * u[nb[m, j]]
                new = s / diag[m]
                upd = omega * (new - u[nodes[m]])
                u[nodes[m]] += upd
                if abs(upd) > delta:
                    delta = abs(upd)
        it += 1
        if delta < tol:
            break
    return it, delta


def solve_laplace(grid, omega=1.9, tol=1e-7, max_iter=100000, initial=None):
    """Red-black SOR for F; fills grid.F and returns the grid."""
    if grid.n_ribbon() == 0:
        raise LevelSetError("no ribbon voxels")
    if grid.arms is None:
        grid.arms = np.ones(grid.dims + (6,))
    nodes, ijk, nb, coef, const, diag = _stencil(grid)
    color = (ijk.sum(axis=1) % 2).astype(np.int8)
    u = np.where(grid.labels == OUTSIDE, 1.0, 0.0).ravel()
    if initial is not None:
        u[nodes] = np.asarray(initial, dtype=float).ravel()[nodes]
    else:
        u[nodes] = 0.5
    it, delta = _sor(u, nodes, color, nb, coef, const, diag, float(omega), float(tol), int(max_iter))
    if delta >= tol:
        logger.warning("SOR stopped after %d sweeps with max update %.3g", it, delta)
    grid.F = u.reshape(grid.dims)
    grid.info.update(sweeps=int(it), last_update=float(delta), omega=omega, tol=tol)
    grid.info["stencil"] = (nodes, ijk)
    _fill_ghosts(grid)
    return grid


# ----------------------------------------------------------------------------- gradient, ghosts

def _ribbon_gradient(grid):
    """Gradient of F at ribbon nodes from the (possibly unequal-arm) three-point formula."""
    F, arms, labels, h = grid.F, grid.arms, grid.labels, grid.h
    nodes, ijk = grid.info["stencil"]
    dims = labels.shape
    flatF = F.ravel()
    g = np.zeros((len(nodes), 3))
    strides = np.array([dims[1] * dims[2], dims[2], 1])
    u0 = flatF[nodes]
    for a in range(3):
        hm = arms[ijk[:, 0], ijk[:, 1], ijk[:, 2], 2 * a] * h
        hp = arms[ijk[:, 0], ijk[:, 1], ijk[:, 2], 2 * a + 1] * h
        at_lo = ijk[:, a] == 0
        at_hi = ijk[:, a] == dims[a] - 1
        um = flatF[np.clip(nodes - strides[a], 0, F.size - 1)]
        up = flatF[np.clip(nodes + strides[a], 0, F.size - 1)]
        lab_m = labels.ravel()[np.clip(nodes - strides[a], 0, F.size - 1)]
        lab_p = labels.ravel()[np.clip(nodes + strides[a], 0, F.size - 1)]
        # crossing values replace neighbour values on cut arms
        um = np.where((lab_m != RIBBON) & ~at_lo, np.where(lab_m == OUTSIDE, 1.0, 0.0), um)
        up = np.where((lab_p != RIBBON) & ~at_hi, np.where(lab_p == OUTSIDE, 1.0, 0.0), up)
        d = (hm ** 2 * (up - u0) + hp ** 2 * (u0 - um)) / (hm * hp * (hm + hp))
        d = np.where(at_lo | at_hi, 0.0, d)
        g[:, a] = d
    return g


def _fill_ghosts(grid, band=3):
    """Taylor-extrapolate F into non-ribbon nodes near the ribbon.

    The solved values stay untouched; extrapolated values go to grid.F_ext,
    and grid.gradient holds a nodal gradient used for tracing.
    """
    rib = grid.labels == RIBBON
    nodes, ijk = grid.info["stencil"]
    g_rib = _ribbon_gradient(grid)
    dist, ind = ndimage.distance_transform_edt(~rib, return_indices=True)
    ghost = (~rib) & (dist <= band)
    gi = np.argwhere(ghost)
    src = ind[:, gi[:, 0], gi[:, 1], gi[:, 2]].T
    F_ext = grid.F.copy()
    grad = np.zeros(grid.dims + (3,))
    lookup = np.full(grid.labels.size, -1, dtype=np.int64)
    lookup[nodes] = np.arange(len(nodes))
    grad.reshape(-1, 3)[nodes] = g_rib
    src_flat = np.ravel_multi_index(src.T, grid.dims)
    gs = g_rib[lookup[src_flat]]
    F_ext[gi[:, 0], gi[:, 1], gi[:, 2]] = (grid.F.ravel()[src_flat]
                                           + grid.h * np.einsum("ij,ij->i", gs, (gi - src).astype(float)))
    grad[gi[:, 0], gi[:, 1], gi[:, 2]] = gs
    grid.F_ext = F_ext
    grid.gradient = grad
    grid.ghost_mask = ghost


def _trilinear(grid, arr, p):
    """Trilinear interpolation of a nodal array (scalar or vector channels) at point p."""
    x = (np.asarray(p, dtype=float) - grid.origin) / grid.h
    i0 = np.floor(x).astype(int)
    dims = np.array(grid.dims)
    if np.any(i0 < 0) or np.any(i0 >= dims - 1):
        raise LevelSetError(f"point {tuple(p)} is outside the grid")
    f = x - i0
    out = 0.0
    for dx in (0, 1):
        wx = f[0] if dx else 1 - f[0]
        for dy in (0, 1):
            wy = f[1] if dy else 1 - f[1]
            for dz in (0, 1):
                wz = f[2] if dz else 1 - f[2]
                out = out + wx * wy * wz * arr[i0[0] + dx, i0[1] + dy, i0[2] + dz]
    return out


def sample_F(grid, p):
    return float(_trilinear(grid, grid.F_ext, p))


def _field(grid, p):
    g = _trilinear(grid, grid.gradient, p)
    n2 = float(g @ g)
    if n2 < 1e-20:
        raise StalledStreamlineError(p)
    return g / n2


# ----------------------------------------------------------------------------- streamlines

def _check_seed(grid, seed):
    x = (np.asarray(seed, dtype=float) - grid.origin) / grid.h
    i0 = np.floor(x).astype(int)
    if np.any(i0 < 0) or np.any(i0 >= np.array(grid.dims) - 1):
        raise LevelSetError(f"seed {tuple(seed)} is outside the grid")
    cell = grid.labels[i0[0]:i0[0] + 2, i0[1]:i0[1] + 2, i0[2]:i0[2] + 2]
    if not (cell == RIBBON).any():
        raise LevelSetError(f"seed {tuple(seed)} is not next to the ribbon")


def levelset_streamline(grid, seed, dt=0.01, t_max=1.5):
    """RK4 trace of dy/dt = grad F / |grad F|^2 from a seed on S0.

    Returns (points, times, max |F(point) - t|). The trace stops once the
    interpolated F reaches 1.
    """
    if grid.F is None:
        raise LevelSetError("grid has not been solved")
    _check_seed(grid, seed)
    y = np.array(seed, dtype=float)
    t = sample_F(grid, y)
    pts, ts = [y.copy()], [t]
    dev = 0.0
    while t < t_max:
        k1 = _field(grid, y)
        k2 = _field(grid, y + 0.5 * dt * k1)
        k3 = _field(grid, y + 0.5 * dt * k2)
        k4 = _field(grid, y + dt * k3)
        y_new = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t_new = t + dt
        F_new = sample_F(grid, y_new)
        if F_new >= 1.0:
            # cut the last step where F crosses 1
            F_old = sample_F(grid, y)
            w = (1.0 - F_old) / (F_new - F_old) if F_new > F_old else 1.0
            y_new = y + w * (y_new - y)
            t_new = t + w * dt
            pts.append(y_new)
            ts.append(t_new)
            dev = max(dev, abs(1.0 - t_new))
            break
        y, t = y_new, t_new
        pts.append(y.copy())
        ts.append(t)
        dev = max(dev, abs(F_new - t))
    return np.array(pts), np.array(ts), dev


def levelset_thickness(grid, seeds, dt=0.01):
    """Streamline arc length for each seed."""
    seeds = np.asarray(seeds, dtype=float).reshape(-1, 3)
    out = np.empty(len(seeds))
    for n, s in enumerate(seeds):
        p, _, _ = levelset_streamline(grid, s, dt)
        out[n] = np.linalg.norm(np.diff(p, axis=0), axis=1).sum()
    return out


def grid_mean_curvature(grid):
    """H = -div(grad F / |grad F|) / 2 by central differences on the extended F."""
    F, h = grid.F_ext, grid.h
    g = np.stack(np.gradient(F, h), axis=-1)
    n = g / np.maximum(np.linalg.norm(g, axis=-1, keepdims=True), 1e-12)
    div = sum(np.gradient(n[..., a], h, axis=a) for a in range(3))
    return -0.5 * div


def _sample_array(grid, arr, pts):
    return np.array([_trilinear(grid, arr, p) for p in pts])


def levelset_layer(grid, seeds, eps, rule="potential", dt=0.01):
    """Points at depth ``eps`` along each seed's streamline.

    rule "potential" takes the F = eps level. rule "equivolume" integrates
    Leprince's sigma with H sampled on the grid and places the point where the
    volume fraction sum(sigma ds) reaches eps.
    """
    from .laminar import leprince_sigma

    if rule not in ("potential", "equivolume"):
        raise ValueError("rule must be 'potential' or 'equivolume'")
    H = grid_mean_curvature(grid) if rule == "equivolume" else None
    out = []
    for seed in np.asarray(seeds, dtype=float).reshape(-1, 3):
        p, t, _ = levelset_streamline(grid, seed, dt)
        if rule == "potential":
            out.append(np.array([np.interp(eps, t, p[:, a]) for a in range(3)]))
            continue
        seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        theta = arc[-1]
        u = arc / theta
        keep = np.concatenate([[True], np.diff(u) > 1e-12])
        sig = leprince_sigma(_sample_array(grid, H, p[keep]), theta, times=u[keep])
        vol = np.concatenate([[0.0], np.cumsum(0.5 * (sig[1:] + sig[:-1]) * np.diff(u[keep]))])
        vol /= vol[-1]
        out.append(np.array([np.interp(eps, vol, p[keep][:, a]) for a in range(3)]))
    return np.array(out)


def write_grid(grid, path):
    extra = {"label": grid.labels.astype(float)}
    write_vtk_structured_points(path, grid.origin, grid.h, grid.F if grid.F is not None
                                else np.zeros(grid.dims), name="F", extra=extra)
