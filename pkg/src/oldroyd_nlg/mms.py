"""Manufactured solutions with closed-form memory integrals.

Each solution is a separable stream function psi(x, y) = F(x) G(y) times a
time factor, so the velocity u = (d_y psi, -d_x psi) is exactly divergence
free and vanishes on the boundary of the unit square together with its
tangential component.  The convolution of the exponential kernel with the
time factor is available in closed form, which keeps the forcing exact.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import fespace


def _phi1(x):
    """(e^x - 1)/x with the removable singularity at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 + x / 2.0, np.expm1(safe) / safe)
    return out if out.ndim else float(out)


@dataclass
class ManufacturedSolution:
    """Analytic (velocity, pressure) pair for the memory-augmented flow model.

    fx / gy hold the 1D stream-function factor and its first three
    derivatives; time_factor and its derivative set the temporal behaviour;
    memory_factor(params, t) returns the exact convolution
    int_0^t gamma exp(-delta (t-s)) time_factor(s) ds.
    """

    name: str
    description: str
    fx: tuple
    gy: tuple
    time_factor: callable
    time_factor_dt: callable
    memory_factor: callable = field(repr=False, default=None)
    pressure_xy: callable = field(repr=False, default=None)
    pressure_grad_xy: callable = field(repr=False, default=None)

    # spatial profile U = (F G', -F' G) and friends ------------------------
    def _profile(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        f, fp = self.fx[0](x), self.fx[1](x)
        g, gp = self.gy[0](y), self.gy[1](y)
        return np.column_stack([f * gp, -fp * g])

    def _profile_grad(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        f, fp, fpp = self.fx[0](x), self.fx[1](x), self.fx[2](x)
        g, gp, gpp = self.gy[0](y), self.gy[1](y), self.gy[2](y)
        out = np.empty((len(pts), 2, 2))
        out[:, 0, 0] = fp * gp
        out[:, 0, 1] = f * gpp
        out[:, 1, 0] = -fpp * g
        out[:, 1, 1] = -fp * gp
        return out

    def _profile_laplacian(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        f, fp, fpp, fppp = (fn(x) for fn in self.fx)
        g, gp, gpp, gppp = (fn(y) for fn in self.gy)
        return np.column_stack([fpp * gp + f * gppp, -(fppp * g + fp * gpp)])

    # public evaluation ----------------------------------------------------
    def velocity(self, pts, t):
        return self.time_factor(t) * self._profile(np.asarray(pts, dtype=float))

    def velocity_dt(self, pts, t):
        return self.time_factor_dt(t) * self._profile(np.asarray(pts, dtype=float))

    def velocity_gradient(self, pts, t):
        return self.time_factor(t) * self._profile_grad(np.asarray(pts, dtype=float))

    def velocity_laplacian(self, pts, t):
        return self.time_factor(t) * self._profile_laplacian(np.asarray(pts, dtype=float))

    def pressure(self, pts, t):
        return self.time_factor(t) * self.pressure_xy(np.asarray(pts, dtype=float))

    def pressure_gradient(self, pts, t):
        return self.time_factor(t) * self.pressure_grad_xy(np.asarray(pts, dtype=float))

    def initial_velocity(self):
        return lambda pts, t=None: self.velocity(pts, 0.0)


def forcing(sol, params, pts, t):
    """Forcing that makes (u, p) solve the flow model with memory exactly.

    f = u_t + (u.grad)u - mu lap(u) - [conv. factor] lap(U) + grad p, where
    the memory convolution collapses onto the spatial profile's Laplacian.
    """
    pts = np.asarray(pts, dtype=float)
    phi = sol.time_factor(t)
    u = phi * sol._profile(pts)
    gu = phi * sol._profile_grad(pts)
    lap_profile = sol._profile_laplacian(pts)
    advect = np.einsum("nd,ncd->nc", u, gu)
    mem = sol.memory_factor(params, t)
    return (
        sol.velocity_dt(pts, t)
        + advect
        - (params.mu * phi + mem) * lap_profile
        + sol.pressure_gradient(pts, t)
    )


def make_forcing(sol, params):
    """Forcing as an (points, t) callable for the steppers."""
    return lambda pts, t: forcing(sol, params, pts, t)


# --- error evaluation ----------------------------------------------------

def _space_at_degree(space, quad_degree):
    if quad_degree is None or quad_degree == space.quad_degree:
        return space
    return fespace.FeSpace(space.mesh, quad_degree=quad_degree,
                           eliminate_dirichlet=space.eliminate_dirichlet)


def field_errors(space, coeffs, sol, t, quad_degree=None):
    """(L2, H1-semi) error of a discrete velocity against the analytic one."""
    sq = _space_at_degree(space, quad_degree)
    vals, grads = fespace.eval_velocity(sq.tables, np.asarray(coeffs, dtype=float))
    pts = sq.qp.reshape(-1, 2)
    ue = sol.velocity(pts, t).reshape(vals.shape)
    ge = sol.velocity_gradient(pts, t).reshape(grads.shape)
    dv = vals - ue
    dg = grads - ge
    l2 = math.sqrt(max(np.einsum("eq,eqc,eqc->", sq.qw, dv, dv), 0.0))
    h1 = math.sqrt(max(np.einsum("eq,eqcd,eqcd->", sq.qw, dg, dg), 0.0))
    return l2, h1


def pair_field_errors(fine_space, coarse_tables, coarse_coeffs, fine_coeffs,
                      sol, t):
    """Errors of a two-mesh field (coarse part + fine part) on the fine backend."""
    vals_f, grads_f = fespace.eval_velocity(fine_space.tables, fine_coeffs)
    vals_c, grads_c = fespace.eval_velocity(coarse_tables, coarse_coeffs)
    vals = vals_f + vals_c
    grads = grads_f + grads_c
    pts = fine_space.qp.reshape(-1, 2)
    dv = vals - sol.velocity(pts, t).reshape(vals.shape)
    dg = grads - sol.velocity_gradient(pts, t).reshape(grads.shape)
    l2 = math.sqrt(max(np.einsum("eq,eqc,eqc->", fine_space.qw, dv, dv), 0.0))
    h1 = math.sqrt(max(np.einsum("eq,eqcd,eqcd->", fine_space.qw, dg, dg), 0.0))
    return l2, h1


def exact_errors(trajectory, sol, space, times=None, quad_degree=6):
    """Quadrature errors of trajectory snapshots at the requested times."""
    if times is None:
        times = trajectory.snapshot_times
    out = {}
    for t in times:
        coeffs = trajectory.velocity_coefficients(t)
        out[float(t)] = field_errors(space, coeffs, sol, t, quad_degree=quad_degree)
    return out


# --- the shipped catalogue ------------------------------------------------

def _poly_factor():
    # x^2 (1-x)^2 and derivatives
    return (
        lambda x: x**2 * (1.0 - x) ** 2,
        lambda x: 2.0 * x - 6.0 * x**2 + 4.0 * x**3,
        lambda x: 2.0 - 12.0 * x + 12.0 * x**2,
        lambda x: -12.0 + 24.0 * x,
    )


def _trig_factor():
    # sin^2(pi x) and derivatives
    pi = np.pi
    return (
        lambda x: np.sin(pi * x) ** 2,
        lambda x: pi * np.sin(2.0 * pi * x),
        lambda x: 2.0 * pi**2 * np.cos(2.0 * pi * x),
        lambda x: -4.0 * pi**3 * np.sin(2.0 * pi * x),
    )


def _bilinear_pressure():
    def p(pts):
        return (pts[:, 0] - 0.5) * (pts[:, 1] - 0.5)

    def grad(pts):
        return np.column_stack([pts[:, 1] - 0.5, pts[:, 0] - 0.5])

    return p, grad


def _memory_exp_decay(params, t):
    # int_0^t gamma e^{-delta (t-s)} e^{-s} ds, removable singularity at delta=1
    return params.gamma * math.exp(-params.delta * t) * t * _phi1((params.delta - 1.0) * t)


def _memory_linear(params, t):
    # int_0^t gamma e^{-delta (t-s)} (1+s) ds
    d = params.delta
    x = d * t
    em = -math.expm1(-x)                    # 1 - e^{-x}
    second = em - x * math.exp(-x)          # 1 - (1+x) e^{-x}
    return params.gamma * ((1.0 + t) * em / d - second / d**2)


def _build_s1():
    p, gp = _bilinear_pressure()
    return ManufacturedSolution(
        name="S1",
        description="polynomial stream function x^2(1-x)^2 y^2(1-y)^2, "
                    "time factor exp(-t)",
        fx=_poly_factor(),
        gy=_poly_factor(),
        time_factor=lambda t: math.exp(-t),
        time_factor_dt=lambda t: -math.exp(-t),
        memory_factor=_memory_exp_decay,
        pressure_xy=p,
        pressure_grad_xy=gp,
    )


def _build_s2():
    p, gp = _bilinear_pressure()
    return ManufacturedSolution(
        name="S2",
        description="trigonometric stream function sin^2(pi x) sin^2(pi y), "
                    "time factor 1+t",
        fx=_trig_factor(),
        gy=_trig_factor(),
        time_factor=lambda t: 1.0 + t,
        time_factor_dt=lambda t: 1.0,
        memory_factor=_memory_linear,
        pressure_xy=p,
        pressure_grad_xy=gp,
    )


_CATALOGUE = None


def list_solutions():
    """Catalogue of shipped manufactured solutions, keyed by id."""
    global _CATALOGUE
    if _CATALOGUE is None:
        _CATALOGUE = {"S1": _build_s1(), "S2": _build_s2()}
    return dict(_CATALOGUE)


def get_solution(name):
    cat = list_solutions()
    if name not in cat:
        raise KeyError(f"unknown manufactured solution {name!r}; have {sorted(cat)}")
    return cat[name]
