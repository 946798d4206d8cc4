"""Fused O(N^2) pair sums for the registration objective, with gradients.

Each accumulation runs in a fixed index order, so results do not depend on
scheduling.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def gauss_self_matrices(q, widths, weights):
    """Symmetric kernel matrix k(|q_i - q_j|^2) and its slope dk/d(r^2)."""
    n = q.shape[0]
    K = np.empty((n, n))
    dK = np.empty((n, n))
    inv = -0.5 / (widths * widths)
    for i in range(n):
        for j in range(i, n):
            d0 = q[i, 0] - q[j, 0]
            d1 = q[i, 1] - q[j, 1]
            d2 = q[i, 2] - q[j, 2]
            r2 = d0 * d0 + d1 * d1 + d2 * d2
            kv = 0.0
            dk = 0.0
            for c in range(widths.shape[0]):
                e = weights[c] * np.exp(r2 * inv[c])
                kv += e
                dk += e * inv[c]
            K[i, j] = kv
            K[j, i] = kv
            dK[i, j] = dk
            dK[j, i] = dk
    return K, dK


def gauss_self_matvec_grad(q, a, gv, K, dK):
    """Gradients of sum_i gv_i . (K a)_i w.r.t. q and a (K symmetric)."""
    ga = K @ gv
    M = 2.0 * dK * (gv @ a.T + a @ gv.T)
    gq = M.sum(axis=1)[:, None] * q - M @ q
    return gq, ga


@numba.njit(cache=True)
def _normals_areas(u):
    n = u.shape[0]
    a = np.empty(n)
    nrm = np.empty((n, 3))
    for f in range(n):
        a[f] = np.sqrt(u[f, 0] ** 2 + u[f, 1] ** 2 + u[f, 2] ** 2)
        for k in range(3):
            nrm[f, k] = u[f, k] / a[f]
    return nrm, a


@numba.njit(cache=True)
def varifold_self(c, u, width, want_grad):
    """sum_fg chi (A_f A_g + (u_f.u_g)^2 / (A_f A_g)) over all ordered pairs, and its
    gradient w.r.t. centroids c and area vectors u (u = area * unit normal)."""
    inv = -0.5 / (width * width)
    n = c.shape[0]
    nrm, a = _normals_areas(u)
    gc = np.zeros((n, 3))
    gu = np.zeros((n, 3))
    total = 0.0
    for f in range(n):
        total += 2.0 * a[f] * a[f]
        if want_grad:
            for k in range(3):
                gu[f, k] += 4.0 * a[f] * nrm[f, k]
        for g in range(f + 1, n):
            d0 = c[f, 0] - c[g, 0]
            d1 = c[f, 1] - c[g, 1]
            d2 = c[f, 2] - c[g, 2]
            chi = np.exp((d0 * d0 + d1 * d1 + d2 * d2) * inv)
            p = nrm[f, 0] * nrm[g, 0] + nrm[f, 1] * nrm[g, 1] + nrm[f, 2] * nrm[g, 2]
            w = chi * (1.0 + p * p) * a[f] * a[g]
            total += 2.0 * w
            if want_grad:
                s = 4.0 * inv * w
                gc[f, 0] += s * d0
                gc[f, 1] += s * d1
                gc[f, 2] += s * d2
                gc[g, 0] -= s * d0
                gc[g, 1] -= s * d1
                gc[g, 2] -= s * d2
                t = 1.0 - p * p
                for k in range(3):
                    gu[f, k] += 2.0 * chi * a[g] * (t * nrm[f, k] + 2.0 * p * nrm[g, k])
                    gu[g, k] += 2.0 * chi * a[f] * (t * nrm[g, k] + 2.0 * p * nrm[f, k])
    return total, gc, gu


@numba.njit(cache=True)
def varifold_cross(c1, u1, c2, u2, width, want_grad):
    """Varifold product of two discretizations and its gradient w.r.t. (c1, u1)."""
    inv = -0.5 / (width * width)
    n, m = c1.shape[0], c2.shape[0]
    n1, a1 = _normals_areas(u1)
    n2, a2 = _normals_areas(u2)
    gc = np.zeros((n, 3))
    gu = np.zeros((n, 3))
    total = 0.0
    for f in range(n):
        s = 0.0
        c0 = cc1 = cc2 = 0.0
        g0 = g1 = g2 = 0.0
        for g in range(m):
            d0 = c1[f, 0] - c2[g, 0]
            d1 = c1[f, 1] - c2[g, 1]
            d2 = c1[f, 2] - c2[g, 2]
            chi = np.exp((d0 * d0 + d1 * d1 + d2 * d2) * inv)
            p = n1[f, 0] * n2[g, 0] + n1[f, 1] * n2[g, 1] + n1[f, 2] * n2[g, 2]
            w = chi * (1.0 + p * p) * a1[f] * a2[g]
            s += w
            if want_grad:
                c0 += w * d0
                cc1 += w * d1
                cc2 += w * d2
                ca = chi * a2[g]
                t = ca * (1.0 - p * p)
                q2 = 2.0 * ca * p
                g0 += t * n1[f, 0] + q2 * n2[g, 0]
                g1 += t * n1[f, 1] + q2 * n2[g, 1]
                g2 += t * n1[f, 2] + q2 * n2[g, 2]
        total += s
        if want_grad:
            gc[f, 0] = 2.0 * inv * c0
            gc[f, 1] = 2.0 * inv * cc1
            gc[f, 2] = 2.0 * inv * cc2
            gu[f, 0] = g0
            gu[f, 1] = g1
            gu[f, 2] = g2
    return total, gc, gu
