"""Normality-constrained diffeomorphic surface flow.

The inner surface is flowed towards the outer one by a time-discretized
kernel field. Unknowns are the momenta ``alpha[i, k]`` carried by the
vertices at each of ``n_steps`` explicit Euler steps. The objective is

    sum_i dt ||v_i||^2_{q_i}  +  gamma * E(S(q_N), S_1)
      + sum_{i,k} ( -lam[i, k] c[i, k] + mu/2 c[i, k]^2 )

where ``c`` measures the tangential part of the velocity at each vertex.
It is minimized by an augmented Lagrangian outer loop around a
limited-memory BFGS inner solver with a strong-Wolfe line search.
Gradients come from reverse-mode differentiation through the Euler steps
(PyTorch autograd, float64).
"""

from __future__ import annotations

import json
import logging
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from scipy.optimize import line_search
from scipy.optimize._linesearch import LineSearchWarning

from . import _pairsums
from .attachment import VarifoldSpec, varifold_energy
from .kernel import KernelSpec, eval_velocity
from .mesh import DegenerateFaceError, TriMesh, face_areas, vertex_normals

logger = logging.getLogger(__name__)

CONSTRAINT_FORMS = ("smooth", "sqrt")


class NumericalFailure(RuntimeError):
    """Raised when the objective becomes non-finite; carries a dump path if written."""

    def __init__(self, message, dump_path=None):
        super().__init__(message if dump_path is None else f"{message} (state dumped to {dump_path})")
        self.dump_path = dump_path


@dataclass
class RegistrationConfig:
    kernel: KernelSpec
    varifold: VarifoldSpec
    hybrid_weight: float = 0.0
    attachment_weight: float | None = None   # None: auto = attachment_scale / E(S0, S1)
    attachment_scale: float = 3000.0
    n_steps: int = 10
    constraint: str = "smooth"
    sqrt_eps: float = 1e-8
    mu0: float = 1.0
    mu_growth: float = 10.0
    residual_ratio: float = 0.25
    memory: int = 10
    max_inner: int = 200
    max_outer: int = 20
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    inner_gtol: float = 1e-6
    inner_ftol: float = 1e-8     # relative-decrease stall test for the inner solver
    tol_c: float = 5e-4
    tol_g: float = 1e-3

    def __post_init__(self):
        if isinstance(self.kernel, dict):
            self.kernel = KernelSpec.from_dict(self.kernel)
        if isinstance(self.varifold, dict):
            self.varifold = VarifoldSpec(**self.varifold)
        if self.constraint not in CONSTRAINT_FORMS:
            raise ValueError(f"constraint must be one of {CONSTRAINT_FORMS}")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.hybrid_weight < 0:
            raise ValueError("hybrid_weight must be >= 0")
        if self.attachment_weight is not None and self.attachment_weight < 0:
            raise ValueError("attachment_weight must be >= 0")
        for name in ("attachment_scale", "mu0", "sqrt_eps", "inner_gtol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.mu_growth <= 1 or not 0 < self.residual_ratio < 1:
            raise ValueError("mu_growth must be > 1 and residual_ratio in (0, 1)")
        if self.tol_c < 0 or self.tol_g < 0 or self.inner_ftol < 0:
            raise ValueError("tolerances must be >= 0")

    @property
    def dt(self):
        return 1.0 / self.n_steps

    def to_dict(self):
        d = asdict(self)
        d["kernel"] = self.kernel.to_dict()
        d["varifold"] = self.varifold.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class FlowState:
    """Trajectories, momenta and augmented Lagrangian multipliers.

    ``q`` has shape (n_steps + 1, N, 3), ``alpha`` (n_steps, N, 3) and
    ``lam`` (n_steps, N).
    """
    q: np.ndarray
    alpha: np.ndarray
    faces: np.ndarray
    lam: np.ndarray
    mu: float = 1.0
    kernel: KernelSpec | None = None

    @property
    def n_steps(self):
        return self.alpha.shape[0]

    @property
    def times(self):
        return np.linspace(0.0, 1.0, self.n_steps + 1)

    def mesh_at(self, i):
        return TriMesh(self.q[i], self.faces, validate=False)

    def copy(self):
        return FlowState(self.q.copy(), self.alpha.copy(), self.faces.copy(), self.lam.copy(),
                         self.mu, self.kernel)

    def to_dict(self):
        return {"q": self.q.tolist(), "alpha": self.alpha.tolist(), "faces": self.faces.tolist(),
                "lam": self.lam.tolist(), "mu": self.mu,
                "kernel": None if self.kernel is None else self.kernel.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["q"], dtype=float), np.array(d["alpha"], dtype=float),
                   np.array(d["faces"], dtype=np.int64), np.array(d["lam"], dtype=float),
                   float(d["mu"]), None if d.get("kernel") is None else KernelSpec.from_dict(d["kernel"]))


def initial_state(config, inner):
    n, nt = inner.n_vertices, config.n_steps
    alpha = np.zeros((nt, n, 3))
    q = np.repeat(inner.vertices[None], nt + 1, axis=0)
    return FlowState(q, alpha, inner.faces.copy(), np.zeros((nt, n)), config.mu0, config.kernel)


# ----------------------------------------------------------------------------- numpy reference path

def integrate_forward(config, q0, alpha):
    """Explicit Euler: q[i+1] = q[i] + dt * v_i(q[i])."""
    q0 = np.asarray(q0, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    q = np.empty((alpha.shape[0] + 1,) + q0.shape)
    q[0] = q0
    dt = 1.0 / alpha.shape[0]
    for i in range(alpha.shape[0]):
        q[i + 1] = q[i] + dt * eval_velocity(config.kernel, q[i], alpha[i], q[i])
    return q


def constraint_residuals(config, mesh_at_q, v_at_vertices):
    """Per-vertex normality residual of the velocity on the current surface."""
    v = np.asarray(v_at_vertices, dtype=float)
    nu = vertex_normals(mesh_at_q)
    vn = np.einsum("ij,ij->i", v, nu)
    vv = np.einsum("ij,ij->i", v, v)
    if config.constraint == "smooth":
        return vv - vn * vn
    eps = config.sqrt_eps
    return np.sqrt(vv + eps * eps) - vn - eps


def state_residuals(config, state):
    """Residuals c[i, k] and velocities at each step start for a state."""
    cs, vs = [], []
    for i in range(state.n_steps):
        v = eval_velocity(config.kernel, state.q[i], state.alpha[i], state.q[i])
        vs.append(v)
        cs.append(constraint_residuals(config, state.mesh_at(i), v))
    return np.array(cs), np.array(vs)


# ----------------------------------------------------------------------------- torch objective

def _t(x):
    return torch.as_tensor(np.asarray(x), dtype=torch.float64)


def _t_sqdist(x, y):
    r2 = (x * x).sum(1)[:, None] + (y * y).sum(1)[None, :] - 2.0 * (x @ y.T)
    return torch.clamp(r2, min=0.0)


class _SelfMatvec(torch.autograd.Function):
    """v = K(q, q) a for the Gaussian kernel."""

    @staticmethod
    def forward(ctx, q, a, widths, weights):
        qn = q.detach().numpy()
        K, dK = _pairsums.gauss_self_matrices(qn, widths, weights)
        ctx.save_for_backward(q, a)
        ctx.mats = (K, dK)
        return torch.from_numpy(K @ a.detach().numpy())

    @staticmethod
    def backward(ctx, gv):
        q, a = ctx.saved_tensors
        gq, ga = _pairsums.gauss_self_matvec_grad(q.detach().numpy(), a.detach().numpy(),
                                                  gv.numpy(), *ctx.mats)
        return torch.from_numpy(gq), torch.from_numpy(ga), None, None


class _VarifoldSelf(torch.autograd.Function):
    """D(S, S) from centroids c and area vectors u."""

    @staticmethod
    def forward(ctx, c, u, width):
        want = bool(c.requires_grad or u.requires_grad)
        val, gc, gu = _pairsums.varifold_self(c.detach().numpy(), u.detach().numpy(), width, want)
        ctx.grads = (gc, gu)
        return torch.tensor(val, dtype=torch.float64)

    @staticmethod
    def backward(ctx, g):
        gc, gu = ctx.grads
        return g * torch.from_numpy(gc), g * torch.from_numpy(gu), None


class _VarifoldCross(torch.autograd.Function):
    """D(S, T) with T fixed (numpy arrays c2, u2)."""

    @staticmethod
    def forward(ctx, c, u, c2, u2, width):
        want = bool(c.requires_grad or u.requires_grad)
        val, gc, gu = _pairsums.varifold_cross(c.detach().numpy(), u.detach().numpy(), c2, u2, width, want)
        ctx.grads = (gc, gu)
        return torch.tensor(val, dtype=torch.float64)

    @staticmethod
    def backward(ctx, g):
        gc, gu = ctx.grads
        return g * torch.from_numpy(gc), g * torch.from_numpy(gu), None, None, None


def _kernel_arrays(spec):
    comps = np.array(spec.components, dtype=float)
    return np.ascontiguousarray(comps[:, 0]), np.ascontiguousarray(comps[:, 1])


def _t_face_geom(q, faces):
    a, b, c = q[faces[:, 0]], q[faces[:, 1]], q[faces[:, 2]]
    cr = torch.linalg.cross(b - a, c - a)
    dbl = torch.linalg.norm(cr, dim=1)
    return cr / dbl[:, None], 0.5 * dbl, (a + b + c) / 3.0, cr


def _t_vertex_normals(q, faces, cr):
    acc = torch.zeros_like(q)
    for j in range(3):
        acc = acc.index_add(0, faces[:, j], cr)
    return acc / torch.linalg.norm(acc, dim=1, keepdim=True)


def _t_jacobian_sq(spec, q, a, x):
    """Sum over rows of x of |Dv(x)|_F^2, returned per row."""
    d = x[:, None, :] - q[None, :, :]
    r2 = (d ** 2).sum(-1)
    dk = sum(-c * torch.exp(-r2 / (2 * s * s)) / (2 * s * s) for s, c in spec.components)
    jac = 2.0 * torch.einsum("ml,la,mlb->mab", dk, a, d)
    return (jac ** 2).sum(dim=(1, 2))


class _Problem:
    """Holds the fixed data of one registration and evaluates the objective."""

    def __init__(self, config, inner, outer, gamma):
        self.config = config
        self.q0 = _t(inner.vertices)
        self.faces = torch.as_tensor(inner.faces, dtype=torch.long)
        self.n = inner.n_vertices
        self.gamma = float(gamma)
        self.kernel_arrays = _kernel_arrays(config.kernel)
        tq = _t(outer.vertices)
        tf = torch.as_tensor(outer.faces, dtype=torch.long)
        tg = _t_face_geom(tq, tf)
        self.target_c = np.ascontiguousarray(tg[2].numpy())
        self.target_u = np.ascontiguousarray(0.5 * tg[3].numpy())
        w = float(config.varifold.width)
        self.target_self = _pairsums.varifold_self(self.target_c, self.target_u, w, False)[0]
        if config.varifold.normalize:
            self.att_norm = float(tg[1].sum()) ** 2
        else:
            self.att_norm = 1.0

    def evaluate(self, alpha, lam, mu, want_grad=True, keep=False):
        cfg = self.config
        nt = cfg.n_steps
        dt = cfg.dt
        a_all = _t(alpha).reshape(nt, self.n, 3)
        if want_grad:
            a_all.requires_grad_(True)
        lam_t = _t(lam)
        q = self.q0
        kinetic = torch.zeros((), dtype=torch.float64)
        al = torch.zeros((), dtype=torch.float64)
        traj, cs, min_area = [q.detach()], [], math.inf
        for i in range(nt):
            a = a_all[i]
            v = _SelfMatvec.apply(q, a, *self.kernel_arrays)
            geom = _t_face_geom(q, self.faces)
            amin = float(geom[1].detach().min())
            if amin <= 1e-12:
                raise DegenerateFaceError(int(torch.argmin(geom[1])), amin)
            min_area = min(min_area, amin)
            step_kin = (a * v).sum()
            if cfg.hybrid_weight > 0:
                step_kin = step_kin + cfg.hybrid_weight * (
                    _t_jacobian_sq(cfg.kernel, q, a, geom[2]) * geom[1]).sum()
            kinetic = kinetic + dt * step_kin
            nu = _t_vertex_normals(q, self.faces, geom[3])
            vn = (v * nu).sum(1)
            vv = (v * v).sum(1)
            if cfg.constraint == "smooth":
                c = vv - vn * vn
            else:
                eps = cfg.sqrt_eps
                c = torch.sqrt(vv + eps * eps) - vn - eps
            al = al + (-lam_t[i] * c + 0.5 * mu * c * c).sum()
            cs.append(c.detach())
            q = q + dt * v
            traj.append(q.detach())
        g_end = _t_face_geom(q, self.faces)
        end_min = float(g_end[1].detach().min())
        if end_min <= 1e-12:
            raise DegenerateFaceError(int(torch.argmin(g_end[1].detach())), end_min)
        w = float(cfg.varifold.width)
        c_end, u_end = g_end[2], 0.5 * g_end[3]
        att = (_VarifoldSelf.apply(c_end, u_end, w)
               - 2 * _VarifoldCross.apply(c_end, u_end, self.target_c, self.target_u, w)
               + self.target_self) / self.att_norm
        total = kinetic + self.gamma * att + al
        out = {"total": total.item(), "kinetic": kinetic.item(), "attachment": self.gamma * att.item(),
               "energy": att.item(), "al": al.item(), "min_area": min_area}
        if keep:
            out["q"] = torch.stack(traj).numpy()
            out["c"] = torch.stack(cs).numpy()
        if want_grad:
            (grad,) = torch.autograd.grad(total, a_all)
            return out, grad.numpy().reshape(-1)
        return out, None


def attachment_weight(config, inner, outer):
    """Explicit weight if configured, else scaled so the initial attachment is attachment_scale."""
    if config.attachment_weight is not None:
        return float(config.attachment_weight)
    e0 = varifold_energy(config.varifold, inner, outer)
    if e0 <= 0:
        return float(config.attachment_scale)
    return float(config.attachment_scale / e0)


def objective(config, state, target, inner=None, gamma=None):
    """Objective value and its breakdown (kinetic, attachment, AL terms).

    ``inner`` defaults to the surface at ``state.q[0]``; ``gamma`` to the
    configured/auto attachment weight.
    """
    inner = inner or TriMesh(state.q[0], state.faces, validate=False)
    if gamma is None:
        gamma = attachment_weight(config, inner, target)
    prob = _Problem(config, inner, target, gamma)
    out, _ = prob.evaluate(state.alpha, state.lam, state.mu, want_grad=False)
    return out["total"], out


def objective_gradient(config, state, target, inner=None, gamma=None):
    """Gradient of the objective with respect to alpha, shape (n_steps, N, 3)."""
    inner = inner or TriMesh(state.q[0], state.faces, validate=False)
    if gamma is None:
        gamma = attachment_weight(config, inner, target)
    prob = _Problem(config, inner, target, gamma)
    _, g = prob.evaluate(state.alpha, state.lam, state.mu)
    return g.reshape(state.alpha.shape)


# ----------------------------------------------------------------------------- optimizer

@dataclass
class OuterRecord:
    iteration: int
    objective: float
    kinetic: float
    attachment: float
    max_residual: float
    backward_fraction: float
    mu: float
    inner_iterations: int
    grad_norm: float


@dataclass
class ConvergenceReport:
    converged: bool = False
    reason: str = ""
    outer: list = field(default_factory=list)
    n_vertices: int = 0
    n_faces: int = 0
    target_vertices: int = 0
    target_faces: int = 0
    total_inner_iterations: int = 0
    evaluations: int = 0
    wall_time: float = 0.0
    attachment_weight: float = 0.0
    max_step_displacement: float = 0.0
    mean_edge_length: float = 0.0
    min_face_area: float = 0.0
    monotone_violations: int = 0
    final: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        return d

    def performance_row(self):
        """Vertices/faces/iterations/runtime line for a performance table."""
        return {"inner_vertices": self.n_vertices, "inner_faces": self.n_faces,
                "outer_vertices": self.target_vertices, "outer_faces": self.target_faces,
                "iterations": self.total_inner_iterations, "runtime_s": round(self.wall_time, 3)}


class _Cache:
    def __init__(self, fun):
        self.fun = fun
        self.key = None
        self.count = 0

    def __call__(self, x):
        key = x.tobytes()
        if key != self.key:
            self.val = self.fun(x)
            self.key = key
            self.count += 1
        return self.val


def lbfgs(fun_grad, x0, memory=10, max_iter=200, gtol=1e-6, c1=1e-4, c2=0.9, callback=None,
          ftol=0.0, patience=5):
    """Limited-memory BFGS with a strong-Wolfe line search.

    Stops when max|g| <= gtol, or when the relative decrease of f stays below
    ``ftol`` for ``patience`` consecutive iterations.
    Returns (x, f, g, n_iter, n_monotone_violations, n_evals).
    """
    cache = _Cache(fun_grad)
    f = lambda x: cache(x)[0]
    g = lambda x: cache(x)[1]
    x = x0.copy()
    fx, gx = cache(x)
    s_hist, y_hist, rho_hist = [], [], []
    violations = 0
    it = 0
    stall = 0
    while it < max_iter and np.abs(gx).max() > gtol:
        # two-loop recursion
        d = -gx.copy()
        alphas = []
        for s, y, rho in reversed(list(zip(s_hist, y_hist, rho_hist))):
            a = rho * s @ d
            alphas.append(a)
            d -= a * y
        if s_hist:
            d *= (s_hist[-1] @ y_hist[-1]) / (y_hist[-1] @ y_hist[-1])
        for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
            b = rho * y @ d
            d += (a - b) * s
        if gx @ d >= 0:
            d = -gx
            s_hist, y_hist, rho_hist = [], [], []
        step0 = 1.0 if s_hist else min(1.0, 1.0 / np.abs(d).max())
        ls = _wolfe(f, g, x, d, fx, gx, c1, c2, step0)
        if ls is None:
            if s_hist:
                s_hist, y_hist, rho_hist = [], [], []
                continue
            break
        t, fn = ls
        xn = x + t * d
        gn = g(xn)
        if fn > fx:
            violations += 1
        s, y = xn - x, gn - gx
        sy = s @ y
        if sy > 1e-12 * np.sqrt((s @ s) * (y @ y)):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > memory:
                s_hist.pop(0), y_hist.pop(0), rho_hist.pop(0)
        stall = stall + 1 if fx - fn <= ftol * max(abs(fx), 1.0) else 0
        x, fx, gx = xn, fn, gn
        it += 1
        if stall >= patience:
            break
        if callback is not None:
            callback(x, fx)
    return x, fx, gx, it, violations, cache.count


def _wolfe(f, g, x, d, fx, gx, c1, c2, step0):
    """Strong-Wolfe step via scipy, falling back to Armijo backtracking."""
    try:
        # a failed search is handled by the backtracking fallback below
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LineSearchWarning)
            res = line_search(f, g, x, d, gfk=gx, old_fval=fx, c1=c1, c2=c2, maxiter=30)
    except DegenerateFaceError:
        res = (None,)
    t = res[0]
    if t is not None and np.isfinite(res[3]) and res[3] <= fx:
        return t, res[3]
    slope = gx @ d
    t = step0
    for _ in range(40):
        try:
            ft = f(x + t * d)
        except DegenerateFaceError:
            ft = math.inf
        if np.isfinite(ft) and ft <= fx + c1 * t * slope:
            return t, ft
        t *= 0.5
    return None


def optimize(config, inner, outer, state=None, dump_dir=None, progress=None):
    """Run the augmented Lagrangian solve; returns (FlowState, ConvergenceReport)."""
    t_start = time.perf_counter()
    gamma = attachment_weight(config, inner, outer)
    prob = _Problem(config, inner, outer, gamma)
    state = state.copy() if state is not None else initial_state(config, inner)
    report = ConvergenceReport(n_vertices=inner.n_vertices, n_faces=inner.n_faces,
                               target_vertices=outer.n_vertices, target_faces=outer.n_faces,
                               attachment_weight=gamma, mean_edge_length=inner.mean_edge_length())
    x = state.alpha.reshape(-1).copy()
    lam = state.lam.copy()
    mu = float(state.mu)
    prev_res = math.inf
    best = None

    def fg(xv):
        out, grad = prob.evaluate(xv, lam, mu)
        if not (np.isfinite(out["total"]) and np.all(np.isfinite(grad))):
            path = _dump_failure(dump_dir, config, xv, lam, mu, inner)
            raise NumericalFailure("non-finite objective during inner solve", path)
        return out["total"], grad

    for outer_it in range(1, config.max_outer + 1):
        x, fx, gx, n_it, viol, n_eval = lbfgs(fg, x, memory=config.memory, max_iter=config.max_inner,
                                               gtol=config.inner_gtol, c1=config.wolfe_c1,
                                               c2=config.wolfe_c2, ftol=config.inner_ftol)
        report.total_inner_iterations += n_it
        report.evaluations += n_eval
        report.monotone_violations += viol
        out, _ = prob.evaluate(x, lam, mu, want_grad=False, keep=True)
        c = out["c"]
        max_res = float(np.abs(c).max())
        # orientation diagnostic: velocities pointing against the normal
        st = FlowState(out["q"], x.reshape(state.alpha.shape), state.faces, lam.copy(), mu, config.kernel)
        back = _backward_fraction(config, st)
        gnorm = float(np.abs(gx).max())
        report.outer.append(OuterRecord(outer_it, out["total"], out["kinetic"], out["attachment"],
                                        max_res, back, mu, n_it, gnorm))
        logger.info("outer %d: F=%.6g kin=%.6g att=%.6g max|c|=%.3g mu=%.3g inner=%d |g|=%.3g",
                    outer_it, out["total"], out["kinetic"], out["attachment"], max_res, mu, n_it, gnorm)
        if progress is not None:
            progress(report.outer[-1])
        if best is None or max_res < best[1]:
            best = (st, max_res)
        if max_res < config.tol_c and gnorm < config.tol_g:
            report.converged, report.reason = True, "tolerances met"
            break
        lam = lam - mu * c
        if max_res > config.residual_ratio * prev_res:
            mu *= config.mu_growth
        prev_res = min(prev_res, max_res)
    else:
        report.reason = "outer iteration cap"

    final = st if report.converged else best[0]
    final.lam, final.mu = lam, mu
    report.wall_time = time.perf_counter() - t_start
    _fill_sanity(config, final, report)
    out, _ = prob.evaluate(final.alpha.reshape(-1), final.lam, final.mu, want_grad=False, keep=True)
    report.final = {"objective": out["total"], "kinetic": out["kinetic"], "attachment": out["attachment"],
                    "varifold_energy": out["energy"], "max_residual": float(np.abs(out["c"]).max())}
    return final, report


def _backward_fraction(config, state):
    back = 0
    for i in range(state.n_steps):
        v = eval_velocity(config.kernel, state.q[i], state.alpha[i], state.q[i])
        vn = np.einsum("ij,ij->i", v, vertex_normals(state.mesh_at(i)))
        back += int(np.sum(vn < -1e-12))
    return back / (state.n_steps * state.q.shape[1])


def _fill_sanity(config, state, report):
    disp = np.linalg.norm(np.diff(state.q, axis=0), axis=2)
    report.max_step_displacement = float(disp.max())
    report.min_face_area = float(min(face_areas(state.q[i], state.faces).min()
                                     for i in range(state.n_steps + 1)))
    if report.max_step_displacement >= report.mean_edge_length:
        logger.warning("step displacement %.3g exceeds mean edge length %.3g",
                       report.max_step_displacement, report.mean_edge_length)


def _dump_failure(dump_dir, config, x, lam, mu, inner):
    if dump_dir is None:
        return None
    path = Path(dump_dir) / "failure_state.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    nt = config.n_steps
    alpha = np.asarray(x).reshape(nt, -1, 3)
    with np.errstate(all="ignore"):
        doc = {"config": config.to_dict(), "alpha": np.nan_to_num(alpha).tolist(),
               "lam": lam.tolist(), "mu": mu, "q0": inner.vertices.tolist(), "faces": inner.faces.tolist()}
    path.write_text(json.dumps(doc))
    return str(path)


def save_checkpoint(path, config, state, report=None):
    doc = {"format": "normalcoords.flowstate/1", "config": config.to_dict(), "state": state.to_dict()}
    if report is not None:
        doc["report"] = report.to_dict()
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path):
    doc = json.loads(Path(path).read_text())
    config = RegistrationConfig.from_dict(doc["config"])
    state = FlowState.from_dict(doc["state"])
    return config, state, doc.get("report")
