"""Triangulated surfaces and discrete differential geometry on them."""

from __future__ import annotations

import numpy as np

DEFAULT_MIN_AREA = 1e-12


class MeshError(ValueError):
    """Base class for invalid mesh data."""


class DegenerateFaceError(MeshError):
    def __init__(self, face, area):
        self.face = int(face)
        self.area = float(area)
        super().__init__(f"face {self.face} is degenerate (area {self.area:.3e})")


class OrientationError(MeshError):
    pass


class IsolatedVertexError(MeshError):
    pass


class TriMesh:
    """Oriented triangle mesh, possibly with boundary.

    Parameters
    ----------
    vertices : array_like, shape (n, 3)
        Vertex coordinates (mm).
    faces : array_like, shape (m, 3)
        Vertex indices of each triangle. All faces must be wound consistently.
    point_data, cell_data : dict, optional
        Named per-vertex / per-face channels (scalars or 3-vectors).
    min_area : float
        Faces with area at or below this value are rejected.
    validate : bool
        Run the invariant checks on construction.
    """

    def __init__(self, vertices, faces, point_data=None, cell_data=None,
                 *, min_area=DEFAULT_MIN_AREA, validate=True):
        self.vertices = np.array(vertices, dtype=float).reshape(-1, 3)
        self.faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
        self.point_data = {k: np.asarray(v) for k, v in (point_data or {}).items()}
        self.cell_data = {k: np.asarray(v) for k, v in (cell_data or {}).items()}
        self.min_area = float(min_area)
        if validate:
            self.validate()

    def __repr__(self):
        return f"TriMesh(n_vertices={self.n_vertices}, n_faces={self.n_faces})"

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    def copy(self, vertices=None):
        """Copy, optionally with new vertex positions (same topology)."""
        v = self.vertices if vertices is None else vertices
        return TriMesh(np.array(v, dtype=float), self.faces.copy(),
                       {k: v.copy() for k, v in self.point_data.items()},
                       {k: v.copy() for k, v in self.cell_data.items()},
                       min_area=self.min_area, validate=False)

    def flipped(self):
        """Same surface with every face winding reversed."""
        m = self.copy()
        m.faces = m.faces[:, ::-1].copy()
        return m

    def transformed(self, rotation=None, translation=None, scale=1.0):
        v = self.vertices * scale
        if rotation is not None:
            v = v @ np.asarray(rotation).T
        if translation is not None:
            v = v + np.asarray(translation)
        return self.copy(v)

    def validate(self):
        n = self.n_vertices
        f = self.faces
        if f.size and (f.min() < 0 or f.max() >= n):
            bad = int(np.nonzero((f < 0) | (f >= n))[0][0])
            raise MeshError(f"face {bad} has a vertex index out of range [0, {n})")
        repeated = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
        if repeated.any():
            raise MeshError(f"face {int(np.argmax(repeated))} repeats a vertex")
        areas = face_areas(self.vertices, f)
        small = areas <= self.min_area
        if small.any():
            i = int(np.argmax(small))
            raise DegenerateFaceError(i, areas[i])
        check_orientation(f)
        for name, arr in self.point_data.items():
            if arr.shape[0] != n:
                raise MeshError(f"point channel {name!r} has {arr.shape[0]} rows, expected {n}")
        for name, arr in self.cell_data.items():
            if arr.shape[0] != f.shape[0]:
                raise MeshError(f"cell channel {name!r} has {arr.shape[0]} rows, expected {f.shape[0]}")

    def edges(self):
        """Unique undirected edges, shape (e, 2), sorted per row."""
        e = np.sort(_directed_edges(self.faces), axis=1)
        return np.unique(e, axis=0)

    def boundary_edges(self):
        e = np.sort(_directed_edges(self.faces), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq[counts == 1]

    def boundary_vertices(self):
        """Boolean mask of vertices lying on a boundary edge."""
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_edges().ravel()] = True
        return mask

    def is_closed(self):
        return len(self.boundary_edges()) == 0

    def mean_edge_length(self):
        e = self.edges()
        return float(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1).mean())

    def area(self):
        return float(face_areas(self.vertices, self.faces).sum())

    def volume(self):
        """Signed enclosed volume (divergence theorem); positive for outward winding."""
        a, b, c = (self.vertices[self.faces[:, i]] for i in range(3))
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def _directed_edges(faces):
    return np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])


def check_orientation(faces):
    """Raise OrientationError unless every edge is shared by at most two faces
    traversing it in opposite directions."""
    d = _directed_edges(faces)
    _, counts = np.unique(d, axis=0, return_counts=True)
    if (counts > 1).any():
        raise OrientationError("inconsistent face orientation: a directed edge is used twice")
    und = np.sort(d, axis=1)
    _, counts = np.unique(und, axis=0, return_counts=True)
    if (counts > 2).any():
        raise OrientationError("non-manifold edge shared by more than two faces")


def face_areas(vertices, faces):
    a, b, c = (vertices[faces[:, i]] for i in range(3))
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def face_geometry(mesh):
    """Per-face unit normals, areas and centroids.

    The normal follows the winding: (v1 - v0) x (v2 - v0).
    """
    v, f = mesh.vertices, mesh.faces
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    cr = np.cross(b - a, c - a)
    dbl = np.linalg.norm(cr, axis=1)
    areas = 0.5 * dbl
    small = areas <= mesh.min_area
    if small.any():
        i = int(np.argmax(small))
        raise DegenerateFaceError(i, areas[i])
    normals = cr / dbl[:, None]
    centroids = (a + b + c) / 3.0
    return normals, areas, centroids


def vertex_normals(mesh):
    """Area-weighted average of incident face normals, normalized."""
    v, f = mesh.vertices, mesh.faces
    cr = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    acc = np.zeros_like(v)
    for j in range(3):
        np.add.at(acc, f[:, j], cr)
    norm = np.linalg.norm(acc, axis=1)
    if (norm == 0).any():
        i = int(np.argmax(norm == 0))
        raise IsolatedVertexError(f"vertex {i} has no incident face (or a vanishing normal)")
    return acc / norm[:, None]


def one_ring_areas(mesh):
    """Area of the union of faces around every vertex."""
    areas = face_areas(mesh.vertices, mesh.faces)
    out = np.zeros(mesh.n_vertices)
    for j in range(3):
        np.add.at(out, mesh.faces[:, j], areas)
    return out


def one_ring_area(mesh, vertex_index):
    incident = (mesh.faces == vertex_index).any(axis=1)
    if not incident.any():
        raise IsolatedVertexError(f"vertex {vertex_index} has no incident face")
    return float(face_areas(mesh.vertices, mesh.faces[incident]).sum())


def _cotangents(v, f):
    """Cotangent of the angle at each corner of each face, shape (m, 3)."""
    cots = np.empty(f.shape, dtype=float)
    for j in range(3):
        p = v[f[:, j]]
        u = v[f[:, (j + 1) % 3]] - p
        w = v[f[:, (j + 2) % 3]] - p
        cots[:, j] = np.einsum("ij,ij->i", u, w) / np.linalg.norm(np.cross(u, w), axis=1)
    return cots


def mixed_voronoi_areas(mesh):
    """Mixed Voronoi vertex areas (Meyer et al. 2003)."""
    v, f = mesh.vertices, mesh.faces
    cots = _cotangents(v, f)
    areas = face_areas(v, f)
    out = np.zeros(mesh.n_vertices)
    obtuse = cots < 0
    any_obtuse = obtuse.any(axis=1)
    for j in range(3):
        j1, j2 = (j + 1) % 3, (j + 2) % 3
        p = v[f[:, j]]
        # Voronoi part: edges to the other two corners weighted by opposite cotangents
        e1 = np.sum((v[f[:, j1]] - p) ** 2, axis=1)
        e2 = np.sum((v[f[:, j2]] - p) ** 2, axis=1)
        vor = (e1 * cots[:, j2] + e2 * cots[:, j1]) / 8.0
        a = np.where(any_obtuse, np.where(obtuse[:, j], areas / 2.0, areas / 4.0), vor)
        np.add.at(out, f[:, j], a)
    return out


def mean_curvature(mesh):
    """Per-vertex mean curvature with the convention -2H = div(normal).

    An outward-oriented sphere of radius R gets H = -1/R.

    Returns
    -------
    H : ndarray, shape (n,)
    on_boundary : ndarray of bool
        Boundary vertices; their values are not reliable.
    """
    v, f = mesh.vertices, mesh.faces
    cots = _cotangents(v, f)
    lap = np.zeros_like(v)
    for j in range(3):
        # edge opposite corner j joins corners j+1, j+2
        a, b = f[:, (j + 1) % 3], f[:, (j + 2) % 3]
        w = cots[:, j][:, None] * (v[b] - v[a])
        np.add.at(lap, a, w)
        np.add.at(lap, b, -w)
    area = mixed_voronoi_areas(mesh)
    lap /= 2.0 * area[:, None]
    H = 0.5 * np.einsum("ij,ij->i", lap, vertex_normals(mesh))
    return H, mesh.boundary_vertices()


def surface_divergence(mesh, field):
    """Tangential divergence of a per-vertex vector field.

    The field is linearly interpolated over each face after projecting out
    its normal component at every vertex; the constant per-face divergence is
    then area-averaged onto vertices. Intended for (nearly) tangent fields:
    the projection uses vertex normals, so a large normal component leaves an
    O(1) discretization residue.

    Returns
    -------
    div : ndarray, shape (n,)
    on_boundary : ndarray of bool
    """
    field = np.asarray(field, dtype=float)
    nv = vertex_normals(mesh)
    field = field - np.einsum("ij,ij->i", field, nv)[:, None] * nv
    normals, areas, _ = face_geometry(mesh)
    v, f = mesh.vertices, mesh.faces
    div_face = np.zeros(len(f))
    for j in range(3):
        opp = v[f[:, (j + 2) % 3]] - v[f[:, (j + 1) % 3]]
        grad_phi = np.cross(normals, opp) / (2.0 * areas[:, None])
        div_face += np.einsum("ij,ij->i", field[f[:, j]], grad_phi)
    num = np.zeros(mesh.n_vertices)
    den = np.zeros(mesh.n_vertices)
    for j in range(3):
        np.add.at(num, f[:, j], div_face * areas)
        np.add.at(den, f[:, j], areas)
    return num / den, mesh.boundary_vertices()
