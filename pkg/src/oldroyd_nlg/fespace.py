"""MINI-element spaces (P1+bubble velocity, P1 pressure) on triangle meshes.

Assembly of mass/stiffness/divergence operators, loads, the antisymmetrized
convection form, and cross-level operators pairing a coarse space with a fine
one through nested-refinement parent containment.  All integrals use a
symmetric triangle quadrature rule (degree 6 by default, 12 points), applied
element-wise on the fine mesh.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import scipy.special

from .errors import AssemblyError

# Dunavant 12-point symmetric rule, exact for bivariate degree 6.
_DUNAVANT6_GROUPS = [
    (0.116786275726379, (0.501426509658179, 0.249286745170910, 0.249286745170910), 3),
    (0.050844906370207, (0.873821971016996, 0.063089014491502, 0.063089014491502), 3),
    (0.082851075618374, (0.053145049844816, 0.310352451033785, 0.636502499121399), 6),
]


@dataclass(frozen=True)
class TriangleRule:
    """Quadrature on the reference triangle: barycentric points, weights sum to 1."""

    degree: int
    bary: np.ndarray     # (nq, 3)
    weights: np.ndarray  # (nq,)


def _dunavant6():
    pts, wts = [], []
    for w, coords, mult in _DUNAVANT6_GROUPS:
        seen = set()
        perms = (
            [(0, 1, 2), (1, 0, 2), (1, 2, 0)] if mult == 3
            else [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
        )
        for p in perms:
            key = tuple(coords[i] for i in p)
            if key in seen:
                continue
            seen.add(key)
            pts.append(key)
            wts.append(w)
    bary = np.asarray(pts)
    weights = np.asarray(wts)
    weights = weights / weights.sum()  # exact partition of unity
    return TriangleRule(6, bary, weights)


def _conical_rule(m):
    """Conical-product Gauss rule on the triangle, exact for degree 2m-1."""
    xg, wg = scipy.special.roots_legendre(m)
    xg = 0.5 * (xg + 1.0)
    wg = 0.5 * wg
    xj, wj = scipy.special.roots_jacobi(m, 1.0, 0.0)   # weight (1-t) on [-1,1]
    xj = 0.5 * (xj + 1.0)
    wj = wj / 4.0                                       # maps weight to (1-t) on [0,1]
    lam1 = np.outer(1.0 - xj, xg).ravel()
    lam2 = np.repeat(xj, m)
    w = np.outer(wj, wg).ravel()
    bary = np.column_stack([1.0 - lam1 - lam2, lam1, lam2])
    return TriangleRule(2 * m - 1, bary, 2.0 * w)       # weights sum to 1


_RULES = {}


def get_rule(degree=6):
    """Symmetric triangle rule exact at least to the requested degree."""
    if degree not in _RULES:
        if degree <= 6:
            _RULES[degree] = _dunavant6()
        else:
            m = (degree + 2) // 2
            _RULES[degree] = _conical_rule(m)
    return _RULES[degree]


@dataclass
class EvalTables:
    """Element-wise basis data at the quadrature points of a (fine) mesh.

    dofmap: (ne, 4) scalar dofs per element [v0, v1, v2, bubble], -1 = eliminated
    vals:   (ne, nq, 4) basis values
    grads:  (ne, nq, 4, 2) basis gradients
    """

    n_scalar: int
    dofmap: np.ndarray
    vals: np.ndarray
    grads: np.ndarray


class FeSpace:
    """MINI velocity / P1 pressure space on one mesh.

    Velocity dofs are per component: interior vertex dofs followed by one
    bubble dof per triangle; homogeneous Dirichlet vertex dofs are eliminated.
    Pressure keeps all vertex dofs (the zero-mean constraint is handled by
    consumers).
    """

    def __init__(self, mesh, quad_degree=6, eliminate_dirichlet=True):
        self.mesh = mesh
        self.quad_degree = quad_degree
        self.eliminate_dirichlet = eliminate_dirichlet
        rule = get_rule(quad_degree)
        self.rule = rule

        verts = mesh.vertices
        tris = mesh.triangles
        ne = tris.shape[0]
        nq = rule.bary.shape[0]

        p = verts[tris]                       # (ne, 3, 2)
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        if np.any(det <= 0):
            raise AssemblyError("degenerate or mis-oriented element")
        self.areas = 0.5 * det
        # grad of barycentric coordinates, constant per element: (ne, 3, 2)
        gl = np.empty((ne, 3, 2))
        gl[:, 1, 0] = d2[:, 1] / det
        gl[:, 1, 1] = -d2[:, 0] / det
        gl[:, 2, 0] = -d1[:, 1] / det
        gl[:, 2, 1] = d1[:, 0] / det
        gl[:, 0] = -gl[:, 1] - gl[:, 2]
        self.grad_lambda = gl

        self.qp = np.einsum("qk,ekd->eqd", rule.bary, p)       # (ne, nq, 2)
        self.qw = rule.weights[None, :] * self.areas[:, None]  # (ne, nq)

        if eliminate_dirichlet:
            interior = ~mesh.boundary_vertex_flags
        else:
            interior = np.ones(mesh.num_vertices, dtype=bool)
        self.vertex_dof = np.full(mesh.num_vertices, -1, dtype=np.int64)
        self.vertex_dof[interior] = np.arange(interior.sum())
        self.n_interior = int(interior.sum())
        self.n_scalar = self.n_interior + ne
        self.n_velocity = 2 * self.n_scalar
        self.n_pressure = mesh.num_vertices

        dofmap = np.empty((ne, 4), dtype=np.int64)
        dofmap[:, :3] = self.vertex_dof[tris]
        dofmap[:, 3] = self.n_interior + np.arange(ne)
        self.tables = EvalTables(self.n_scalar, dofmap,
                                 *self._basis_tables(rule.bary, gl))
        self.pressure_dofmap = tris
        self.pressure_vals = np.broadcast_to(
            rule.bary[None], (ne, nq, 3)).copy()

    def _basis_tables(self, bary, grad_lambda):
        ne = grad_lambda.shape[0]
        nq = bary.shape[0]
        vals = np.empty((ne, nq, 4))
        vals[:, :, :3] = bary[None]
        vals[:, :, 3] = 27.0 * bary[:, 0] * bary[:, 1] * bary[:, 2]
        grads = np.empty((ne, nq, 4, 2))
        grads[:, :, :3] = grad_lambda[:, None]
        # bubble = 27 l0 l1 l2
        pair = np.stack([bary[:, 1] * bary[:, 2],
                         bary[:, 0] * bary[:, 2],
                         bary[:, 0] * bary[:, 1]], axis=1)   # (nq, 3)
        grads[:, :, 3] = 27.0 * np.einsum("ql,eld->eqd", pair, grad_lambda)
        return vals, grads

    def interpolate(self, func, t=None):
        """Nodal (vertex) interpolant into the velocity space; bubbles stay 0."""
        pts = self.mesh.vertices
        uvals = np.asarray(func(pts, t) if t is not None else func(pts))
        coeffs = np.zeros(self.n_velocity)
        keep = self.vertex_dof >= 0
        for c in range(2):
            coeffs[self.vertex_dof[keep] + c * self.n_scalar] = uvals[keep, c]
        return coeffs

    def vertex_values(self, coeffs):
        """Velocity at mesh vertices (bubbles vanish there); (nv, 2)."""
        out = np.zeros((self.mesh.num_vertices, 2))
        keep = self.vertex_dof >= 0
        for c in range(2):
            out[keep, c] = coeffs[self.vertex_dof[keep] + c * self.n_scalar]
        return out


@dataclass
class FieldCoefficients:
    """Velocity coefficient vector bound to its space."""

    space: FeSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.n_velocity,):
            raise ValueError(
                f"coefficient length {self.values.shape} does not match space "
                f"({self.space.n_velocity},)"
            )


def _local_coeffs(tables, coeffs):
    nd = tables.n_scalar
    dof = tables.dofmap
    safe = np.clip(dof, 0, None)
    out = np.empty(dof.shape + (2,))
    for c in range(2):
        comp = coeffs[c * nd:(c + 1) * nd]
        out[..., c] = np.where(dof >= 0, comp[safe], 0.0)
    return out  # (ne, 4, 2)


def eval_velocity(tables, coeffs):
    """Values (ne, nq, 2) and gradients (ne, nq, 2, 2) of a velocity field."""
    loc = _local_coeffs(tables, coeffs)
    vals = np.einsum("elc,eql->eqc", loc, tables.vals)
    grads = np.einsum("elc,eqld->eqcd", loc, tables.grads)
    return vals, grads


def reduce_dual(tables, qw, value_weights=None, grad_weights=None):
    """Assemble the dual vector r_i = sum_q qw (F_c psi_i + G_cd d_d psi_i).

    value_weights: (ne, nq, 2); grad_weights: (ne, nq, 2, 2) indexed [c, d].
    """
    ne, _, nloc = tables.vals.shape
    loc = np.zeros((ne, nloc, 2))
    if value_weights is not None:
        loc += np.einsum("eq,eqc,eql->elc", qw, value_weights, tables.vals)
    if grad_weights is not None:
        loc += np.einsum("eq,eqcd,eqld->elc", qw, grad_weights, tables.grads)
    r = np.zeros(2 * tables.n_scalar)
    dof = tables.dofmap
    mask = dof >= 0
    for c in range(2):
        np.add.at(r, dof[mask] + c * tables.n_scalar, loc[..., c][mask])
    return r


def _scatter_scalar(row_tables, col_tables, local, shape):
    ne, nl, nm = local.shape
    rows = np.repeat(row_tables.dofmap[:, :, None], nm, axis=2)
    cols = np.repeat(col_tables.dofmap[:, None, :], nl, axis=1)
    mask = (rows >= 0) & (cols >= 0)
    return sp.coo_matrix(
        (local[mask], (rows[mask], cols[mask])), shape=shape
    ).tocsr()


@dataclass
class DiscreteOperatorSet:
    """Velocity mass M, stiffness A, pressure-divergence B, and a load handle."""

    space: FeSpace
    M: sp.csr_matrix
    A: sp.csr_matrix
    B: sp.csr_matrix
    mass_scalar: sp.csr_matrix
    stiff_scalar: sp.csr_matrix

    def __post_init__(self):
        self._mass_solve = None

    def mass_solve(self, rhs):
        if self._mass_solve is None:
            self._mass_solve = spla.factorized(self.M.tocsc())
        return self._mass_solve(rhs)

    def load(self, f, t):
        return assemble_load(self.space, f, t)


def assemble_operators(space):
    """Assemble M, A (velocity, Dirichlet dofs eliminated) and B (pressure rows)."""
    tb = space.tables
    qw = space.qw
    nd = space.n_scalar
    mass_loc = np.einsum("eq,eql,eqm->elm", qw, tb.vals, tb.vals)
    stiff_loc = np.einsum("eq,eqld,eqmd->elm", qw, tb.grads, tb.grads)
    m = _scatter_scalar(tb, tb, mass_loc, (nd, nd))
    a = _scatter_scalar(tb, tb, stiff_loc, (nd, nd))
    m = (m + m.T) * 0.5
    a = (a + a.T) * 0.5
    M = sp.block_diag([m, m], format="csr")
    A = sp.block_diag([a, a], format="csr")

    # B[p, (c, j)] = (q_p, d_c psi_j)
    np_p = space.n_pressure
    bloc = np.einsum("eq,eqp,eqjc->epjc", qw, space.pressure_vals, tb.grads)
    rows_p = np.repeat(space.pressure_dofmap[:, :, None], 4, axis=2)
    cols_v = np.repeat(tb.dofmap[:, None, :], 3, axis=1)
    blocks = []
    for c in range(2):
        vals = bloc[..., c]
        mask = cols_v >= 0
        blocks.append(sp.coo_matrix(
            (vals[mask], (rows_p[mask], cols_v[mask] + c * nd)),
            shape=(np_p, 2 * nd),
        ))
    B = (blocks[0] + blocks[1]).tocsr()
    return DiscreteOperatorSet(space, M, A, B, m, a)


def assemble_load(space, f, t):
    """Load vector (f(., t), phi_i) with the space's quadrature."""
    pts = space.qp.reshape(-1, 2)
    fv = np.asarray(f(pts, t), dtype=float).reshape(space.qp.shape)
    return reduce_dual(space.tables, space.qw, value_weights=fv)


def convection_weights(vbar_vals, x_vals, x_grads):
    """Pointwise weights of the antisymmetrized convection dual.

    Returns (F, G) such that b(vbar, x, phi) = sum qw (F . phi + G : grad phi):
    F_c = 1/2 (vbar . grad x)_c and G_cd = -1/2 vbar_d x_c.
    """
    F = 0.5 * np.einsum("eqd,eqcd->eqc", vbar_vals, x_grads)
    G = -0.5 * np.einsum("eqd,eqc->eqcd", vbar_vals, x_vals)
    return F, G


def _require_same_space(*fields):
    space = fields[0].space
    for f in fields[1:]:
        if f.space is not space:
            raise ValueError("mismatched quadrature backends")
    return space


def trilinear_b(v, w, phi):
    """b(v, w, phi) = 1/2 (v.grad w, phi) - 1/2 (v.grad phi, w) by quadrature."""
    space = _require_same_space(v, w, phi)
    tb, qw = space.tables, space.qw
    vv, _ = eval_velocity(tb, v.values)
    wv, wg = eval_velocity(tb, w.values)
    pv, pg = eval_velocity(tb, phi.values)
    F, G = convection_weights(vv, wv, wg)
    return float(np.einsum("eq,eqc,eqc->", qw, F, pv)
                 + np.einsum("eq,eqcd,eqcd->", qw, G, pg))


def assemble_convection(space, v):
    """Matrix N(v)[i, j] = b(v, phi_j, phi_i) on the velocity dof space.

    v may be FieldCoefficients, a coefficient vector on this space, or
    precomputed quadrature-point values of shape (ne, nq, 2).
    """
    if isinstance(v, FieldCoefficients):
        if v.space is not space:
            raise ValueError("mismatched quadrature backends")
        vvals, _ = eval_velocity(space.tables, v.values)
    else:
        v = np.asarray(v, dtype=float)
        if v.shape == (space.n_velocity,):
            vvals, _ = eval_velocity(space.tables, v)
        elif v.shape == space.qp.shape:
            vvals = v
        else:
            raise ValueError("transport field has incompatible shape")
    tb, qw = space.tables, space.qw
    vdotg = np.einsum("eqd,eqmd->eqm", vvals, tb.grads)
    half = 0.5 * np.einsum("eq,eql,eqm->elm", qw, tb.vals, vdotg)
    local = half - half.transpose(0, 2, 1)
    nd = space.n_scalar
    n = _scatter_scalar(tb, tb, local, (nd, nd))
    return sp.block_diag([n, n], format="csr")


def field_norms(v, ops):
    """(L2 norm, H1 seminorm, discrete-Laplacian norm) of a velocity field."""
    vec = v.values if isinstance(v, FieldCoefficients) else np.asarray(v, dtype=float)
    l2 = float(np.sqrt(max(vec @ (ops.M @ vec), 0.0)))
    h1 = float(np.sqrt(max(vec @ (ops.A @ vec), 0.0)))
    av = ops.A @ vec
    z = ops.mass_solve(av)
    dlap = float(np.sqrt(max(av @ z, 0.0)))
    return l2, h1, dlap


def coarse_on_fine_tables(coarse_space, fine_space, ancestors=None, tol=1e-10):
    """Coarse-space basis evaluated at the fine space's quadrature points.

    ancestors maps fine triangles to coarse ones; None means both spaces share
    one mesh (identity).  Raises ValueError when a quadrature point escapes
    its recorded ancestor (non-nested meshes).
    """
    if ancestors is None:
        if coarse_space.mesh is not fine_space.mesh:
            raise ValueError("ancestor map required for distinct meshes")
        return EvalTables(coarse_space.n_scalar, coarse_space.tables.dofmap,
                          coarse_space.tables.vals, coarse_space.tables.grads)
    ancestors = np.asarray(ancestors, dtype=np.int64)
    if ancestors.shape != (fine_space.mesh.num_triangles,):
        raise ValueError("ancestor map has wrong length")

    ctris = coarse_space.mesh.triangles[ancestors]
    p = coarse_space.mesh.vertices[ctris]          # (ne_f, 3, 2)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])[:, None]
    rel = fine_space.qp - p[:, None, 0]            # (ne_f, nq, 2)
    lam1 = (rel[..., 0] * d2[:, None, 1] - rel[..., 1] * d2[:, None, 0]) / det
    lam2 = (d1[:, None, 0] * rel[..., 1] - d1[:, None, 1] * rel[..., 0]) / det
    lam0 = 1.0 - lam1 - lam2
    bary = np.stack([lam0, lam1, lam2], axis=-1)   # (ne_f, nq, 3)
    if bary.min() < -tol or bary.max() > 1.0 + tol:
        raise ValueError("quadrature point outside ancestor: meshes not nested")

    gl = coarse_space.grad_lambda[ancestors]       # (ne_f, 3, 2)
    nq = bary.shape[1]
    vals = np.empty((len(ancestors), nq, 4))
    vals[..., :3] = bary
    vals[..., 3] = 27.0 * bary[..., 0] * bary[..., 1] * bary[..., 2]
    grads = np.empty((len(ancestors), nq, 4, 2))
    grads[..., :3, :] = gl[:, None]
    pair = np.stack([bary[..., 1] * bary[..., 2],
                     bary[..., 0] * bary[..., 2],
                     bary[..., 0] * bary[..., 1]], axis=-1)
    grads[..., 3, :] = 27.0 * np.einsum("eql,eld->eqd", pair, gl)
    dofmap = coarse_space.tables.dofmap[ancestors]
    return EvalTables(coarse_space.n_scalar, dofmap, vals, grads)


@dataclass
class CrossOperators:
    """Cross mass/stiffness between a coarse and a fine velocity space.

    M_x[i, j] = (coarse phi_i, fine phi_j) in L2, A_x the H1-semi version;
    both (coarse velocity dofs) x (fine velocity dofs).  coarse_tables holds
    the coarse basis sampled on the fine quadrature backend.
    """

    M_x: sp.csr_matrix
    A_x: sp.csr_matrix
    coarse_tables: EvalTables
    fine_space: FeSpace


def cross_level_operators(coarse_space, fine_space, ancestors=None):
    """Composite-quadrature cross operators over the fine elements."""
    ct = coarse_on_fine_tables(coarse_space, fine_space, ancestors)
    ft = fine_space.tables
    qw = fine_space.qw
    mass_loc = np.einsum("eq,eql,eqm->elm", qw, ct.vals, ft.vals)
    stiff_loc = np.einsum("eq,eqld,eqmd->elm", qw, ct.grads, ft.grads)
    shape = (coarse_space.n_scalar, fine_space.n_scalar)
    m_x = _scatter_scalar(ct, ft, mass_loc, shape)
    a_x = _scatter_scalar(ct, ft, stiff_loc, shape)
    M_x = sp.block_diag([m_x, m_x], format="csr")
    A_x = sp.block_diag([a_x, a_x], format="csr")
    return CrossOperators(M_x, A_x, ct, fine_space)
