"""Backward-Euler time integration of the Galerkin system and the two
two-level variants.

All stepping happens in divergence-free basis coordinates.  The constant
implicit operator (mass/k + effective-viscosity stiffness, where the
effective viscosity includes the implicit weight of the memory increment)
is factored once per run; the convection term is handled by Picard fixed
point with the transport and transported fields frozen at the previous
iterate, so every sweep costs one back-substitution plus quadrature
evaluations.  The fixed point of the sweep satisfies the fully implicit
nonlinear equations, which is what the convergence checks assert.

Two-level runs start from a single-level bootstrap trajectory: the coarse
unknown is initialized with the projection of the bootstrap velocity at the
switch time, the complement unknown either solves its own equation at the
switch time (default) or takes the projected remainder, and the memory
integral restarts at the switch time.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from . import fespace, memory as memory_mod, mesh as mesh_mod
from .divfree import TwoMeshField, apply_PH
from .errors import SolveFailure, StepFailure

VARIANTS = ("cgm", "nlg1", "nlg2")


@dataclass(frozen=True)
class SchemeConfig:
    """Run parameters shared by all schemes.

    k: time step; t0: switch time (bootstrap end); T: final time; both t0
    and T must be integer multiples of k with 0 < k <= t0 < T.
    """

    kernel: memory_mod.KernelParams
    k: float
    t0: float
    T: float
    scheme: str = "cgm"
    picard_tol: float = 1e-10
    picard_maxit: int = 50
    memory_order: int = 2
    z_init: str = "solve"          # or "project"
    snapshot_times: tuple = ()
    snapshot_every: int = 0        # additionally snapshot every m-th step

    def __post_init__(self):
        if self.scheme not in VARIANTS:
            raise ValueError(f"scheme must be one of {VARIANTS}")
        if not (0 < self.k <= self.t0 < self.T):
            raise ValueError("need 0 < k <= t0 < T")
        for name, t in (("t0", self.t0), ("T", self.T)):
            if abs(round(t / self.k) * self.k - t) > 1e-9 * max(t, self.k):
                raise ValueError(f"{name}={t} is not an integer multiple of k={self.k}")
        if self.z_init not in ("solve", "project"):
            raise ValueError("z_init must be 'solve' or 'project'")
        for t in self.snapshot_times:
            if abs(round(t / self.k) * self.k - t) > 1e-9 * max(t, self.k):
                raise ValueError(f"snapshot time {t} not on the time grid")

    def step_count(self):
        return round(self.T / self.k)

    def switch_index(self):
        return round(self.t0 / self.k)


@dataclass
class Trajectory:
    """Time-indexed snapshots plus per-step diagnostic series.

    Snapshot payload: 'cgm' stores fine-basis coordinates; 'nlg1'/'nlg2'
    store (coarse coords, complement coords).  diag holds one entry per
    executed step (the start state included).
    """

    scheme: str
    config: SchemeConfig
    basis: object = None           # DivFreeBasis for cgm
    split: object = None           # TwoLevelSplit for nlg runs
    snapshot_times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    step_times: list = field(default_factory=list)
    diag: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def _index_of(self, t):
        times = np.asarray(self.snapshot_times)
        hits = np.nonzero(np.isclose(times, t, rtol=0.0, atol=1e-9 * max(1.0, abs(t))))[0]
        if hits.size == 0:
            raise ValueError(f"no snapshot at t={t}; have {self.snapshot_times}")
        return int(hits[0])

    def snapshot_at(self, t):
        return self.snapshots[self._index_of(t)]

    def basis_coords(self, t):
        if self.scheme != "cgm":
            raise ValueError("basis_coords is a single-level accessor")
        return self.snapshot_at(t)

    def velocity_coefficients(self, t):
        """Fine velocity coefficient vector of the snapshot at time t."""
        if self.scheme != "cgm":
            raise ValueError("use pair_field for two-level trajectories")
        return self.basis.basis @ self.snapshot_at(t)

    def pair_field(self, t):
        """Two-mesh velocity field of the snapshot at time t."""
        if self.scheme == "cgm":
            coeffs = self.velocity_coefficients(t)
            return TwoMeshField(np.zeros(0), coeffs)
        alpha, gamma = self.snapshot_at(t)
        return self.split.combined_field(alpha, gamma)

    def yz_coords(self, t):
        if self.scheme == "cgm":
            raise ValueError("single-level trajectory has no (y, z) split")
        return self.snapshot_at(t)


@dataclass(frozen=True)
class RunDiagnostics:
    """Per-step series: discrete energy |u|^2 + 2 mu k sum |grad u|^2, the
    coarse-smallness indicator mu - |log h| |y|^2, and complement norms."""

    times: np.ndarray
    energy: np.ndarray
    indicator: np.ndarray
    z_l2: np.ndarray
    z_h1: np.ndarray
    picard_iterations: np.ndarray
    memory_magnitude: np.ndarray


def _snapshot_plan(config, t_start):
    plan = {config.step_count()}
    plan.add(config.switch_index())
    i_start = round(t_start / config.k)
    plan.add(i_start)
    for t in config.snapshot_times:
        idx = round(t / config.k)
        if idx >= i_start:
            plan.add(idx)
    if config.snapshot_every > 0:
        plan.update(range(i_start, config.step_count() + 1, config.snapshot_every))
    return plan


def _project_initial(basis, u0):
    """L2 projection of the initial velocity into the divergence-free space."""
    if u0 is None:
        return np.zeros(basis.dim)
    if callable(u0):
        load = fespace.assemble_load(basis.space, lambda p, t: u0(p), 0.0)
        return basis.basis.T @ load
    u0 = np.asarray(u0, dtype=float)
    if u0.shape == (basis.dim,):
        return u0.copy()
    if u0.shape == (basis.space.n_velocity,):
        return basis.basis.T @ (basis.ops.M @ u0)
    raise ValueError("initial velocity shape not understood")


# --- single-level scheme ---------------------------------------------------

class _FineConvection:
    def __init__(self, basis):
        self.space = basis.space
        self.basis = basis.basis

    def dual(self, coords):
        coeffs = self.basis @ coords
        vals, grads = fespace.eval_velocity(self.space.tables, coeffs)
        F, G = fespace.convection_weights(vals, vals, grads)
        r = fespace.reduce_dual(self.space.tables, self.space.qw, F, G)
        return self.basis.T @ r


def run_cgm(basis, config, forcing, u0=None, split=None, t_end=None):
    """Single-level trajectory on [0, t_end] (default [0, T]).

    forcing(points, t) -> (n, 2) or None for f = 0; u0 as in
    _project_initial; split (optional) adds complement-norm diagnostics.
    """
    k = config.k
    params = config.kernel
    n_end = config.step_count() if t_end is None else round(t_end / k)
    if split is not None and split.fine is not basis:
        raise ValueError("diagnostics split must be built on the stepping basis")

    if split is not None:
        A_b = split.A_cc
    else:
        A_b = basis.basis.T @ (basis.ops.A @ basis.basis)
        A_b = 0.5 * (A_b + A_b.T)
    conv = _FineConvection(basis)

    u = _project_initial(basis, u0)
    mem = memory_mod.init_memory(params, k, 0.0, A_b @ u, order=config.memory_order)
    c_a = params.mu + mem.implicit_weight()
    K = c_a * A_b + (1.0 / k) * np.eye(basis.dim)
    cho = sla.cho_factor(K, check_finite=False)

    traj = Trajectory(scheme="cgm", config=config, basis=basis, split=split)
    plan = _snapshot_plan(config, 0.0)
    diag = {key: [] for key in ("picard", "u_l2sq", "u_h1sq", "mem_mag", "z_l2", "z_h1")}

    def record(n, coords, g, mem_state, iters):
        t = n * k
        traj.step_times.append(t)
        diag["picard"].append(iters)
        diag["u_l2sq"].append(float(coords @ coords))
        diag["u_h1sq"].append(float(coords @ g))
        diag["mem_mag"].append(float(np.linalg.norm(mem_state.value)))
        if split is not None:
            pc = split.P @ coords
            z2 = max(float(coords @ coords - pc @ pc), 0.0)
            zh = float(coords @ (split.A_cc @ coords) - 2.0 * pc @ (split.A_yc @ coords)
                       + pc @ (split.A_yy @ pc))
            diag["z_l2"].append(math.sqrt(z2))
            diag["z_h1"].append(math.sqrt(max(zh, 0.0)))
        if n in plan:
            traj.snapshot_times.append(t)
            traj.snapshots.append(coords.copy())

    record(0, u, A_b @ u, mem, 0)
    for n in range(1, n_end + 1):
        t = n * k
        load = (basis.basis.T @ fespace.assemble_load(basis.space, forcing, t)
                if forcing is not None else 0.0)
        rhs_const = load + u / k - mem.explicit_part()
        u_new, iters, residual = _picard_sweeps(
            lambda c: conv.dual(c), cho, rhs_const, u,
            config.picard_tol, config.picard_maxit)
        if u_new is None:
            raise StepFailure(n, t, residual)
        u = u_new
        mem = memory_mod.advance_memory(mem, A_b, u)
        record(n, u, mem.prev, mem, iters)

    traj.diag = {key: np.asarray(val) for key, val in diag.items() if val}
    return traj


def _picard_sweeps(conv_dual, cho, rhs_const, s_start, tol, maxit):
    """Fixed-point sweeps for the frozen-convection implicit step.

    Returns (state or None, iterations, last residual).  The residual of
    iterate m is |convection(m) - convection(m-1)|, which is exactly the
    equation残差 of the m-th iterate; linear problems converge in one sweep.
    """
    s = s_start
    b_dual = conv_dual(s)
    for it in range(1, maxit + 1):
        s_new = sla.cho_solve(cho, rhs_const - b_dual, check_finite=False)
        b_new = conv_dual(s_new)
        residual = float(np.linalg.norm(b_new - b_dual))
        increment = float(np.linalg.norm(s_new - s))
        s, b_dual = s_new, b_new
        if increment < tol or residual < tol:
            return s, it, residual
    return None, maxit, residual


# --- two-level schemes ------------------------------------------------------

class TwoLevelWorkspace:
    """Factorizations and block operators shared by every two-level step."""

    def __init__(self, split, config):
        self.split = split
        self.config = config
        dH, dz = split.dim_coarse, split.dim_complement
        self.dH, self.dz = dH, dz
        A = np.zeros((dH + dz, dH + dz))
        A[:dH, :dH] = split.A_yy
        A[:dH, dH:] = split.A_yz
        A[dH:, :dH] = split.A_yz.T
        A[dH:, dH:] = split.A_zz
        self.A_two = A
        mem0 = memory_mod.init_memory(config.kernel, config.k, config.t0,
                                      np.zeros(dH + dz), order=config.memory_order)
        self.c_a = config.kernel.mu + mem0.implicit_weight()
        K = self.c_a * A.copy()
        K[:dH, :dH] += np.eye(dH) / config.k
        self.cho = sla.cho_factor(K, check_finite=False)
        self.cho_zz = (sla.cho_factor(split.A_zz, check_finite=False)
                       if dz > 0 else None)
        self.log_h = abs(math.log(mesh_mod.mesh_size(split.fine.space.mesh)))

    def split_state(self, s):
        return s[:self.dH], s[self.dH:]

    def field(self, s):
        return self.split.combined_field(s[:self.dH], s[self.dH:])

    def loads(self, forcing, t):
        if forcing is None:
            return np.zeros(self.dH + self.dz)
        load_c = fespace.assemble_load(self.split.coarse.space, forcing, t)
        load_f = fespace.assemble_load(self.split.fine.space, forcing, t)
        return self.split.test_coords(load_c, load_f)


def _pair_eval(split, fld):
    vc, gc = fespace.eval_velocity(split.cross.coarse_tables, fld.coarse)
    vf, gf = fespace.eval_velocity(split.fine.space.tables, fld.fine)
    return vc + vf, gc + gf


def _reduce_pair(split, F, G):
    qw = split.fine.space.qw
    r_c = fespace.reduce_dual(split.cross.coarse_tables, qw, F, G)
    r_f = fespace.reduce_dual(split.fine.space.tables, qw, F, G)
    return split.test_coords(r_c, r_f)


class _TwoLevelConvection:
    """Stacked convection dual for either variant, all fields frozen.

    Variant 1 tests b(u, u, .) against both families.  Variant 2 keeps
    b(u, u, .) on the coarse tests but uses b(u, y, .) + b(y, z, .) on the
    complement tests (the complement equation is linear in the complement
    unknown for a frozen coarse field).
    """

    def __init__(self, workspace, variant):
        self.ws = workspace
        self.variant = variant

    def dual(self, s):
        split = self.ws.split
        alpha, gamma = self.ws.split_state(s)
        u = split.combined_field(alpha, gamma)
        uv, ug = _pair_eval(split, u)
        if self.variant == "nlg1":
            F, G = fespace.convection_weights(uv, uv, ug)
            return _reduce_pair(split, F, G)
        # variant 2
        yv, yg = fespace.eval_velocity(split.cross.coarse_tables,
                                       split.coarse.basis @ alpha)
        zv, zg = uv - yv, ug - yg
        qw = split.fine.space.qw
        Fy, Gy = fespace.convection_weights(uv, uv, ug)
        r_cy = fespace.reduce_dual(split.cross.coarse_tables, qw, Fy, Gy)
        F1, G1 = fespace.convection_weights(uv, yv, yg)
        F2, G2 = fespace.convection_weights(yv, zv, zg)
        Fz, Gz = F1 + F2, G1 + G2
        r_cz = fespace.reduce_dual(split.cross.coarse_tables, qw, Fz, Gz)
        r_fz = fespace.reduce_dual(split.fine.space.tables, qw, Fz, Gz)
        ry = split.coarse.basis.T @ r_cy
        rz = split.Z_c.T @ r_cz + split.Z_f.T @ r_fz
        return np.concatenate([ry, rz])


@dataclass
class CoupledStepState:
    """Inputs of one implicit two-level step handed to picard_coupled."""

    workspace: TwoLevelWorkspace
    s_prev: np.ndarray
    rhs_const: np.ndarray
    tol: float
    maxit: int


def picard_coupled(split, state, variant):
    """Fixed-point iteration for one two-level step.

    The frozen-field convection dual enters the right-hand side; the
    constant SPD two-level operator is solved per sweep.  Converged when
    the combined L2 increment of (y, z) drops below the tolerance (the
    coordinates are L2-orthonormal, so the Euclidean norm is the function
    norm); a vanishing equation residual short-circuits, which makes
    convection-free problems converge in a single sweep.

    Returns (stacked coords, iterations, residual); coords None on failure.
    """
    conv = _TwoLevelConvection(state.workspace, variant)
    return _picard_sweeps(conv.dual, state.workspace.cho, state.rhs_const,
                          state.s_prev, state.tol, state.maxit)


def solve_z_linear(split, y_coords, memory_dual, forcing, t, c_a,
                   workspace=None, tol=1e-13, maxit=200, z0=None):
    """Solve the complement equation for fixed coarse part (variant 2).

    The system c_a a(y + z, chi) + b(y + z, y, chi) + b(y, z, chi)
    + memory = (f, chi) over complement tests is linear in z; it is solved
    by Richardson iteration preconditioned with the complement stiffness
    factor, to a relative residual of 1e-10 or better.

    memory_dual: known memory contribution on the complement tests (or
    None); forcing: callable or precomputed stacked load coords.
    """
    dz = split.dim_complement
    dH = split.dim_coarse
    if dz == 0:
        return np.zeros(0)
    if workspace is not None:
        cho_zz = workspace.cho_zz
    else:
        try:
            cho_zz = sla.cho_factor(split.A_zz, check_finite=False)
        except sla.LinAlgError as exc:
            raise SolveFailure(f"complement stiffness block singular: {exc}") from exc
    if callable(forcing) or forcing is None:
        load_c = (fespace.assemble_load(split.coarse.space, forcing, t)
                  if forcing is not None else np.zeros(split.coarse.space.n_velocity))
        load_f = (fespace.assemble_load(split.fine.space, forcing, t)
                  if forcing is not None else np.zeros(split.fine.space.n_velocity))
        f_z = split.test_coords(load_c, load_f)[dH:]
    else:
        f_z = np.asarray(forcing, dtype=float)[dH:]
    rhs_fixed = f_z - (0.0 if memory_dual is None else memory_dual) \
        - c_a * (split.A_yz.T @ y_coords)

    qw = split.fine.space.qw
    y_field = TwoMeshField(split.coarse.basis @ y_coords,
                           np.zeros(split.fine.space.n_velocity))
    yv, yg = _pair_eval(split, y_field)

    def conv_dual_z(gamma):
        z = split.complement_field(gamma)
        zv, zg = _pair_eval(split, z)
        uv = yv + zv
        F1, G1 = fespace.convection_weights(uv, yv, yg)
        F2, G2 = fespace.convection_weights(yv, zv, zg)
        F, G = F1 + F2, G1 + G2
        r_c = fespace.reduce_dual(split.cross.coarse_tables, qw, F, G)
        r_f = fespace.reduce_dual(split.fine.space.tables, qw, F, G)
        return (split.Z_c.T @ r_c + split.Z_f.T @ r_f)

    gamma = np.zeros(dz) if z0 is None else np.asarray(z0, dtype=float)
    scale = max(float(np.linalg.norm(rhs_fixed)), 1e-300)
    for _ in range(maxit):
        resid_vec = rhs_fixed - conv_dual_z(gamma) - c_a * (split.A_zz @ gamma)
        if np.linalg.norm(resid_vec) <= max(tol * scale, 1e-15):
            break
        gamma = gamma + sla.cho_solve(cho_zz, resid_vec, check_finite=False) / c_a
    else:
        raise SolveFailure(
            f"complement solve stalled at residual {np.linalg.norm(resid_vec):.3e}")
    resid = float(np.linalg.norm(rhs_fixed - conv_dual_z(gamma)
                                 - c_a * (split.A_zz @ gamma)))
    if resid > 1e-10 * scale:
        raise SolveFailure(f"complement residual {resid:.3e} exceeds contract")
    return gamma


def _solve_z_nonlinear(split, ws, y_coords, forcing, t, c_a, tol, maxit):
    """Complement equation at the switch time with full nonlinearity
    (variant 1): fixed point with everything frozen."""
    dz = split.dim_complement
    dH = split.dim_coarse
    if dz == 0:
        return np.zeros(0)
    f_stacked = ws.loads(forcing, t)
    f_z = f_stacked[dH:]
    rhs_fixed = f_z - c_a * (split.A_yz.T @ y_coords)
    gamma = np.zeros(dz)
    conv = _TwoLevelConvection(ws, "nlg1")
    for _ in range(maxit):
        s = np.concatenate([y_coords, gamma])
        resid_vec = rhs_fixed - conv.dual(s)[dH:] - c_a * (split.A_zz @ gamma)
        if np.linalg.norm(resid_vec) <= max(tol * max(np.linalg.norm(f_z), 1.0), 1e-15):
            return gamma
        gamma = gamma + sla.cho_solve(ws.cho_zz, resid_vec, check_finite=False) / c_a
    raise SolveFailure("nonlinear complement initialization did not converge")


def run_nlg(split, config, forcing, variant, bootstrap=None, u0=None):
    """Two-level trajectory on [t0, T] after a single-level bootstrap.

    variant: 'nlg1' keeps the full nonlinearity in the complement equation;
    'nlg2' drops its complement-complement part.  bootstrap: a 'cgm'
    Trajectory on the same fine basis and grid covering [0, t0]; built here
    when absent.  The memory integral restarts at t0.
    """
    if variant not in ("nlg1", "nlg2"):
        raise ValueError("variant must be 'nlg1' or 'nlg2'")
    k = config.k
    params = config.kernel
    if bootstrap is None:
        bootstrap = run_cgm(split.fine, config, forcing, u0=u0, t_end=config.t0)
    if bootstrap.basis is not split.fine:
        raise ValueError("bootstrap trajectory lives on a different fine basis")
    if not math.isclose(bootstrap.config.k, k, rel_tol=1e-12):
        raise ValueError("bootstrap time grid differs from the two-level grid")

    ws = TwoLevelWorkspace(split, config)
    dH, dz = ws.dH, ws.dz
    c_boot = bootstrap.basis_coords(config.t0)
    alpha0 = split.P @ c_boot
    if dz == 0:
        gamma0 = np.zeros(0)
    elif config.z_init == "project":
        gamma0 = split.G_zc @ c_boot
    elif variant == "nlg2":
        gamma0 = solve_z_linear(split, alpha0, None, forcing, config.t0,
                                params.mu, workspace=ws,
                                tol=min(config.picard_tol, 1e-12))
    else:
        gamma0 = _solve_z_nonlinear(split, ws, alpha0, forcing, config.t0,
                                    params.mu, min(config.picard_tol, 1e-12),
                                    config.picard_maxit * 4)
    s = np.concatenate([alpha0, gamma0])

    mem = memory_mod.init_memory(params, k, config.t0, ws.A_two @ s,
                                 order=config.memory_order)
    traj = Trajectory(scheme=variant, config=config, split=split)
    plan = _snapshot_plan(config, config.t0)
    diag = {key: [] for key in ("picard", "y_l2sq", "u_h1sq", "mem_mag",
                                "z_l2", "z_h1", "indicator")}

    def record(n, s_cur, g_cur, mem_state, iters):
        t = n * k
        alpha, gamma = ws.split_state(s_cur)
        traj.step_times.append(t)
        diag["picard"].append(iters)
        y2 = float(alpha @ alpha)
        diag["y_l2sq"].append(y2)
        diag["u_h1sq"].append(float(s_cur @ g_cur))
        diag["mem_mag"].append(float(np.linalg.norm(mem_state.value)))
        diag["z_l2"].append(math.sqrt(max(float(gamma @ gamma), 0.0)))
        diag["z_h1"].append(math.sqrt(max(float(gamma @ (split.A_zz @ gamma)), 0.0))
                            if dz else 0.0)
        ind = params.mu - ws.log_h * y2
        diag["indicator"].append(ind)
        if ind <= 0:
            traj.warnings.append(
                f"coarse-smallness indicator nonpositive at t={t:.6g}: {ind:.3e}")
        if n in plan:
            traj.snapshot_times.append(t)
            traj.snapshots.append((alpha.copy(), gamma.copy()))

    n0 = config.switch_index()
    record(n0, s, ws.A_two @ s, mem, 0)
    for n in range(n0 + 1, config.step_count() + 1):
        t = n * k
        rhs_const = ws.loads(forcing, t) - mem.explicit_part()
        rhs_const[:dH] += s[:dH] / k
        state = CoupledStepState(ws, s, rhs_const, config.picard_tol,
                                 config.picard_maxit)
        s_new, iters, residual = picard_coupled(split, state, variant)
        if s_new is None:
            raise StepFailure(n, t, residual)
        s = s_new
        mem = memory_mod.advance_memory(mem, ws.A_two, s)
        record(n, s, mem.prev, mem, iters)

    traj.diag = {key: np.asarray(val) for key, val in diag.items() if val}
    return traj


def diagnostics(trajectory, split=None):
    """Assemble RunDiagnostics from the per-step series of a run."""
    d = trajectory.diag
    times = np.asarray(trajectory.step_times)
    params = trajectory.config.kernel
    k = trajectory.config.k
    if trajectory.scheme == "cgm":
        base = d["u_l2sq"]
    else:
        base = d["y_l2sq"]
    dissip = 2.0 * params.mu * k * np.cumsum(d["u_h1sq"])
    energy = base + dissip - dissip[0] + (0.0 if trajectory.scheme == "cgm"
                                          else 0.0)
    indicator = d.get("indicator", np.full_like(times, np.nan))
    z_l2 = d.get("z_l2", np.full_like(times, np.nan))
    z_h1 = d.get("z_h1", np.full_like(times, np.nan))
    return RunDiagnostics(
        times=times,
        energy=np.asarray(energy),
        indicator=np.asarray(indicator),
        z_l2=np.asarray(z_l2),
        z_h1=np.asarray(z_h1),
        picard_iterations=np.asarray(d["picard"]),
        memory_magnitude=np.asarray(d["mem_mag"]),
    )


# --- exports ---------------------------------------------------------------

def export_trajectory_csv(trajectory, path):
    """One row per snapshot: time followed by the stored dof values."""
    with open(path, "w") as fh:
        fh.write("time,dof_values...\n")
        for t, snap in zip(trajectory.snapshot_times, trajectory.snapshots):
            if trajectory.scheme == "cgm":
                vals = trajectory.basis.basis @ snap
            else:
                fld = trajectory.split.combined_field(*snap)
                vals = np.concatenate([fld.coarse, fld.fine])
            row = ",".join(f"{v:.17g}" for v in vals)
            fh.write(f"{t:.17g},{row}\n")


def export_vtk(mesh, vertex_velocity, path, name="velocity"):
    """Legacy-VTK ASCII dump of vertex point data for visualization."""
    nv = mesh.num_vertices
    nt = mesh.num_triangles
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write("velocity snapshot\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {nv} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} 0.0\n")
        fh.write(f"CELLS {nt} {4 * nt}\n")
        for i, j, kk in mesh.triangles:
            fh.write(f"3 {i} {j} {kk}\n")
        fh.write(f"CELL_TYPES {nt}\n")
        fh.write("\n".join(["5"] * nt) + "\n")
        fh.write(f"POINT_DATA {nv}\nVECTORS {name} double\n")
        for vx, vy in vertex_velocity:
            fh.write(f"{vx:.17g} {vy:.17g} 0.0\n")
