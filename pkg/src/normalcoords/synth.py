"""Synthetic surface pairs with closed-form oracles.

Every generator returns ``(inner, outer, oracle)`` with both meshes oriented
so that their normals point from the inner towards the outer surface.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from .mesh import MeshError, TriMesh, vertex_normals

KINDS = ("sphere-pair", "cylinder-pair", "sheet-pair", "folded-sheet-pair", "flower-tube-pair")


@dataclass
class FixtureSpec:
    kind: str
    inner_radius: float = 1.0        # a
    outer_radius: float = 2.0        # b
    amplitude: float = 0.5           # A (folded sheet, flower)
    wavelength: float = 2.0          # L (folded sheet)
    lobes: int = 5                   # k (flower)
    separation: float = 0.3          # d (sheets)
    extent: tuple = (4.0, 2.0)       # sheet size (x, y) or tube height (first entry)
    subdivision: int = 3             # icosphere level / grid density multiplier
    resolution: float = 0.1          # grid spacing for sheets and tubes (mm)
    inner_rotation: bool = False     # randomly rotate the inner icosphere (re-triangulation)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown fixture kind {self.kind!r}; expected one of {KINDS}")
        self.extent = tuple(float(e) for e in self.extent)
        if self.kind in ("sphere-pair", "cylinder-pair", "flower-tube-pair"):
            if not 0 < self.inner_radius < self.outer_radius:
                raise ValueError("radii must satisfy 0 < a < b")
        if self.kind == "flower-tube-pair" and self.outer_radius - self.amplitude <= self.inner_radius:
            raise ValueError("flower tube intersects the inner tube (need b - A > a)")

    def to_dict(self):
        return asdict(self)


@dataclass
class Oracle:
    """Closed-form quantities for a fixture; entries are None where undefined."""
    spec: FixtureSpec
    constants: dict = field(default_factory=dict)

    def thickness(self, point):
        return oracle_thickness(self.spec, point)

    def layer_radius(self, eps):
        return oracle_layer_radius(self.spec, eps)

    def F(self, point):
        return oracle_F(self.spec, point)

    def to_dict(self):
        k = self.spec.kind
        forms = {
            "sphere-pair": {"thickness": "b - a", "layer_radius": "(a^3 + eps (b^3 - a^3))^(1/3)",
                            "F": "(1/a - 1/r) / (1/a - 1/b)", "H_inner": "-1/a"},
            "cylinder-pair": {"thickness": "b - a", "layer_radius": "sqrt(a^2 + eps (b^2 - a^2))",
                              "F": "log(r/a) / log(b/a)", "H_inner": "-1/(2a)"},
            "sheet-pair": {"thickness": "d", "tau": "t", "F": "z / d", "H_inner": "0"},
            "folded-sheet-pair": {},
            "flower-tube-pair": {},
        }[k]
        return {"spec": self.spec.to_dict(), "closed_forms": forms, "constants": self.constants}


# ----------------------------------------------------------------------------- oracles

def oracle_thickness(spec, point=None):
    if spec.kind in ("sphere-pair", "cylinder-pair"):
        return spec.outer_radius - spec.inner_radius
    if spec.kind == "sheet-pair":
        return spec.separation
    return None


def oracle_layer_radius(spec, eps):
    a, b = spec.inner_radius, spec.outer_radius
    if spec.kind == "sphere-pair":
        return (a ** 3 + eps * (b ** 3 - a ** 3)) ** (1.0 / 3.0)
    if spec.kind == "cylinder-pair":
        return math.sqrt(a ** 2 + eps * (b ** 2 - a ** 2))
    return None


def oracle_F(spec, point):
    p = np.asarray(point, dtype=float)
    a, b = spec.inner_radius, spec.outer_radius
    if spec.kind == "sphere-pair":
        r = np.linalg.norm(p, axis=-1)
        return (1 / a - 1 / r) / (1 / a - 1 / b)
    if spec.kind == "cylinder-pair":
        r = np.linalg.norm(p[..., :2], axis=-1)
        return np.log(r / a) / np.log(b / a)
    if spec.kind == "sheet-pair":
        return p[..., 2] / spec.separation
    return None


# ----------------------------------------------------------------------------- primitives

def icosphere(subdivision=3, radius=1.0):
    """Outward-oriented icosphere with 10 * 4**subdivision + 2 vertices."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array([[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
                  [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
                  [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], dtype=float)
    f = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                  [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                  [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                  [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    v /= np.linalg.norm(v, axis=1)[:, None]
    verts = list(v)
    for _ in range(subdivision):
        cache = {}

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        nf = []
        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            nf += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        f = np.array(nf)
    return TriMesh(radius * np.array(verts), f)


def grid_faces(nu, nv, wrap_u=False):
    """Faces of an (nu x nv) vertex grid, vertex (i, j) at index i * nv + j.

    Winding makes (d/du) x (d/dv) the normal direction.
    """
    faces = []
    iu = nu if wrap_u else nu - 1
    for i in range(iu):
        i2 = (i + 1) % nu
        for j in range(nv - 1):
            a, b = i * nv + j, i2 * nv + j
            c, d = i2 * nv + j + 1, i * nv + j + 1
            faces.append([a, b, c])
            faces.append([a, c, d])
    return np.array(faces, dtype=np.int64)


def plane_grid(nx, ny, spacing=1.0, z=0.0, origin=(0.0, 0.0)):
    x = origin[0] + spacing * np.arange(nx)
    y = origin[1] + spacing * np.arange(ny)
    X, Y = np.meshgrid(x, y, indexing="ij")
    v = np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, float(z))])
    return TriMesh(v, grid_faces(nx, ny))


def tube(radius_fn, height, n_theta, n_z):
    """Open tube along z with outward normals; radius_fn(theta) gives the cross-section."""
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    z = np.linspace(-height / 2, height / 2, n_z)
    r = radius_fn(theta)
    T, Z = np.meshgrid(theta, z, indexing="ij")
    R = np.repeat(r[:, None], n_z, axis=1)
    v = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel(), Z.ravel()])
    return TriMesh(v, grid_faces(n_theta, n_z, wrap_u=True))


def random_rotation(seed):
    return Rotation.random(random_state=np.random.default_rng(seed)).as_matrix()


# ----------------------------------------------------------------------------- generate

def generate(spec):
    """Build the fixture described by ``spec``."""
    if isinstance(spec, dict):
        spec = FixtureSpec(**spec)
    builder = {
        "sphere-pair": _sphere_pair,
        "cylinder-pair": _cylinder_pair,
        "sheet-pair": _sheet_pair,
        "folded-sheet-pair": _folded_sheet_pair,
        "flower-tube-pair": _flower_pair,
    }[spec.kind]
    inner, outer, constants = builder(spec)
    inner.validate()
    outer.validate()
    gap = cKDTree(outer.vertices).query(inner.vertices)[0].min()
    if not gap > 0:
        raise MeshError("generated surfaces intersect")
    constants["min_vertex_gap"] = float(gap)
    return inner, outer, Oracle(spec, constants)


def _sphere_pair(spec):
    a, b = spec.inner_radius, spec.outer_radius
    inner = icosphere(spec.subdivision, a)
    if spec.inner_rotation:
        inner = inner.transformed(rotation=random_rotation(spec.seed))
    outer = icosphere(spec.subdivision, b)
    return inner, outer, {"a": a, "b": b}


def _tube_sizes(spec, radius):
    height = spec.extent[0]
    h = spec.resolution
    n_theta = max(8, int(round(2 * np.pi * radius / h)))
    n_z = max(2, int(round(height / h)) + 1)
    return height, n_theta, n_z


def _cylinder_pair(spec):
    a, b = spec.inner_radius, spec.outer_radius
    height, n_theta, n_z = _tube_sizes(spec, a)
    inner = tube(lambda t: np.full_like(t, a), height, n_theta, n_z)
    outer = tube(lambda t: np.full_like(t, b), height, n_theta, n_z)
    return inner, outer, {"a": a, "b": b, "height": height}


def _sheet_pair(spec):
    d, h = spec.separation, spec.resolution
    nx = int(round(spec.extent[0] / h)) + 1
    ny = int(round(spec.extent[1] / h)) + 1
    inner = plane_grid(nx, ny, h, 0.0)
    outer = plane_grid(nx, ny, h, d)
    return inner, outer, {"d": d}


def folded_surface(amplitude, wavelength, extent, spacing):
    """Sinusoidal sheet z = A sin(2 pi x / L), normals pointing to +z."""
    nx = int(round(extent[0] / spacing)) + 1
    ny = int(round(extent[1] / spacing)) + 1
    x = np.linspace(0, extent[0], nx)
    y = np.linspace(0, extent[1], ny)
    X, Y = np.meshgrid(x, y, indexing="ij")
    k = 2 * np.pi / wavelength
    Z = amplitude * np.sin(k * X)
    v = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    dz = amplitude * k * np.cos(k * X.ravel())
    n = np.column_stack([-dz, np.zeros_like(dz), np.ones_like(dz)])
    n /= np.linalg.norm(n, axis=1)[:, None]
    return TriMesh(v, grid_faces(nx, ny)), n


def _folded_sheet_pair(spec):
    inner, n = folded_surface(spec.amplitude, spec.wavelength, spec.extent, spec.resolution)
    d = spec.separation
    outer = inner.copy(inner.vertices + d * n)
    outer.validate()
    k = 2 * np.pi / spec.wavelength
    focal = 1.0 / (spec.amplitude * k * k)
    return inner, outer, {"A": spec.amplitude, "L": spec.wavelength, "d": d,
                          "min_radius_of_curvature": focal}


def _flower_pair(spec):
    a, b, A, k = spec.inner_radius, spec.outer_radius, spec.amplitude, spec.lobes
    height, n_theta, n_z = _tube_sizes(spec, b + A)
    inner = tube(lambda t: np.full_like(t, a), height, n_theta, n_z)
    outer = tube(lambda t: b + A * np.cos(k * t), height, n_theta, n_z)
    return inner, outer, {"a": a, "b": b, "A": A, "k": k}


def check_normals_inner_to_outer(inner, outer):
    """Fraction of inner vertices whose normal points towards the outer surface."""
    nv = vertex_normals(inner)
    _, idx = cKDTree(outer.vertices).query(inner.vertices)
    d = outer.vertices[idx] - inner.vertices
    return float(np.mean(np.einsum("ij,ij->i", nv, d) > 0))
