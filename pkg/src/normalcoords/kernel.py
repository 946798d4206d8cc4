"""Gaussian reproducing-kernel vector fields.

A field is carried by points ``q`` (N, 3) and momenta ``alpha`` (N, 3):
``v(x) = sum_l K(x, q_l) alpha_l`` with ``K(x, y) = sum_s w_s exp(-|x-y|^2 / (2 s^2)) Id``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import face_geometry


@dataclass(frozen=True)
class KernelSpec:
    """Scalar Gaussian kernel (times identity), optionally a weighted multi-scale sum.

    Parameters
    ----------
    width : float
        Width of the primary component (mm).
    extra : tuple of (width, weight) pairs
        Additional components. The primary one has weight 1.
    """
    width: float
    extra: tuple = ()
    family: str = "gaussian"

    def __post_init__(self):
        if self.family != "gaussian":
            raise ValueError(f"unsupported kernel family {self.family!r}")
        if not self.width > 0:
            raise ValueError("kernel width must be > 0")
        extra = tuple((float(w), float(c)) for w, c in self.extra)
        for w, c in extra:
            if not (w > 0 and c > 0):
                raise ValueError("multi-scale widths and weights must be > 0")
        object.__setattr__(self, "extra", extra)

    @property
    def components(self):
        return ((float(self.width), 1.0),) + self.extra

    def to_dict(self):
        return {"family": self.family, "width": self.width, "extra": [list(p) for p in self.extra]}

    @classmethod
    def from_dict(cls, d):
        return cls(width=d["width"], extra=tuple(tuple(p) for p in d.get("extra", ())),
                   family=d.get("family", "gaussian"))


def _sqdist(x, y):
    d = x[:, None, :] - y[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d), d


def kernel_matrix(spec, x, y):
    """Scalar kernel values k(x_i, y_j), shape (len(x), len(y))."""
    r2, _ = _sqdist(np.atleast_2d(x), np.atleast_2d(y))
    return sum(c * np.exp(-r2 / (2 * s * s)) for s, c in spec.components)


def _kernel_and_slope(spec, r2):
    """k(r2) and dk/d(r2)."""
    k = np.zeros_like(r2)
    dk = np.zeros_like(r2)
    for s, c in spec.components:
        g = c * np.exp(-r2 / (2 * s * s))
        k += g
        dk -= g / (2 * s * s)
    return k, dk


def eval_velocity(spec, q, alpha, x):
    """Velocity at x (a single point or an (M, 3) array of points)."""
    q = np.asarray(q, dtype=float).reshape(-1, 3)
    alpha = np.asarray(alpha, dtype=float).reshape(-1, 3)
    if len(q) == 0 or len(q) != len(alpha):
        raise ValueError("q and alpha must be non-empty with equal length")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    out = kernel_matrix(spec, x.reshape(-1, 3), q) @ alpha
    return out[0] if single else out


def eval_velocity_jacobian(spec, q, alpha, x):
    """Spatial Jacobian Dv(x), shape (3, 3) or (M, 3, 3); Dv[a, b] = d v_a / d x_b."""
    q = np.asarray(q, dtype=float).reshape(-1, 3)
    alpha = np.asarray(alpha, dtype=float).reshape(-1, 3)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    r2, d = _sqdist(x.reshape(-1, 3), q)
    _, dk = _kernel_and_slope(spec, r2)
    # d k / d x = 2 dk (x - q)
    jac = 2.0 * np.einsum("ml,la,mlb->mab", dk, alpha, d)
    return jac[0] if single else jac


def vnorm_sq(spec, q, alpha):
    """Squared V-norm of the field carried by (q, alpha): sum_kl a_k^T K(q_k, q_l) a_l."""
    q = np.asarray(q, dtype=float).reshape(-1, 3)
    alpha = np.asarray(alpha, dtype=float).reshape(-1, 3)
    return float(np.einsum("ka,kl,la->", alpha, kernel_matrix(spec, q, q), alpha))


def hybrid_norm_sq(spec, mesh_at_q, alpha, weight):
    """V-norm plus ``weight`` times the surface integral of |Dv|^2 (Frobenius).

    The surface term uses one quadrature point per face (its centroid). The
    momenta are carried by the vertices of ``mesh_at_q``.
    """
    if weight < 0:
        raise ValueError("hybrid-norm weight must be >= 0")
    q = mesh_at_q.vertices
    total = vnorm_sq(spec, q, alpha)
    if weight > 0:
        _, areas, centroids = face_geometry(mesh_at_q)
        jac = eval_velocity_jacobian(spec, q, alpha, centroids)
        total += weight * float(np.einsum("mab,mab,m->", jac, jac, areas))
    return total
