"""Discretely divergence-free bases and their two-level splitting.

J on a mesh is the null space of the pressure-divergence operator B; the
basis columns are M-orthonormalized.  For a nested coarse/fine pair the
trial space splits as (coarse J) + (I - P) (fine J) where P is the
L2-orthogonal projection onto the coarse space.  Because the coarse MINI
bubbles are not fine-mesh functions, members of the complement carry a
fine coefficient part and a coarse coefficient part; all pairings between
the two levels are evaluated by composite quadrature on the fine mesh.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from . import fespace, linalg, mesh as mesh_mod
from .errors import ConditioningError

PRUNE_TOL = 1e-10  # singular-value threshold for complement directions


@dataclass
class DivFreeBasis:
    """M-orthonormal basis of the discretely divergence-free velocity space."""

    space: fespace.FeSpace
    ops: fespace.DiscreteOperatorSet
    basis: np.ndarray  # (n_velocity, dim)

    @property
    def dim(self):
        return self.basis.shape[1]


def nullspace_basis(space, ops, residual_tol=1e-9):
    """Null space of B via rank-revealing SVD, M-orthonormalized.

    The expected dimension is n_velocity - (n_pressure - 1): the constant
    pressure mode tests nothing because discrete velocities vanish on the
    boundary.
    """
    expected = space.n_velocity - (space.n_pressure - 1)
    phi = linalg.nullspace(ops.B.toarray(), expected_dim=expected)
    gram = phi.T @ (ops.M @ phi)
    L = sla.cholesky(gram, lower=True, check_finite=False)
    phi = sla.solve_triangular(L, phi.T, lower=True, check_finite=False).T
    resid = np.abs(ops.B @ phi).max() if phi.size else 0.0
    if resid > residual_tol:
        raise linalg.SolveFailure(f"divergence residual {resid:.3e} of basis too large")
    return DivFreeBasis(space, ops, phi)


@dataclass
class TwoMeshField:
    """Velocity field with a coarse-space part and a fine-space part."""

    coarse: np.ndarray
    fine: np.ndarray

    def __add__(self, other):
        return TwoMeshField(self.coarse + other.coarse, self.fine + other.fine)

    def __sub__(self, other):
        return TwoMeshField(self.coarse - other.coarse, self.fine - other.fine)

    def __rmul__(self, a):
        return TwoMeshField(a * self.coarse, a * self.fine)

    def copy(self):
        return TwoMeshField(self.coarse.copy(), self.fine.copy())


@dataclass
class TwoLevelSplit:
    """Two-level splitting with projection, complement, and Gram data.

    Complement members are pairs: column j is the function
    (fine coeffs Z_f[:, j]) + (coarse coeffs Z_c[:, j]).  Bases for the
    coarse space and the complement are L2-orthonormal and mutually
    L2-orthogonal by construction.  Block matrices are indexed y (coarse
    basis), z (complement basis), c (fine basis).
    """

    coarse: DivFreeBasis
    fine: DivFreeBasis
    cross: fespace.CrossOperators
    ancestors: np.ndarray
    P: np.ndarray        # (dH, dh) fine-basis coords -> coarse-basis coords
    W: np.ndarray        # (dh, dz) fine-basis coords -> complement coords
    Z_f: np.ndarray      # (n_vel_fine, dz)
    Z_c: np.ndarray      # (n_vel_coarse, dz)
    A_yy: np.ndarray
    A_yz: np.ndarray
    A_zz: np.ndarray
    A_cc: np.ndarray
    A_yc: np.ndarray
    A_zc: np.ndarray
    G_yc: np.ndarray
    G_zc: np.ndarray

    @property
    def dim_coarse(self):
        return self.coarse.dim

    @property
    def dim_complement(self):
        return self.Z_f.shape[1]

    @property
    def dim_fine(self):
        return self.fine.dim

    # --- field reconstruction and pairings --------------------------------
    def complement_field(self, z_coords):
        return TwoMeshField(self.Z_c @ z_coords, self.Z_f @ z_coords)

    def combined_field(self, y_coords, z_coords):
        """u = y + z as a two-mesh field."""
        return TwoMeshField(self.coarse.basis @ y_coords + self.Z_c @ z_coords,
                            self.Z_f @ z_coords)

    def fine_field(self, c_coords):
        return TwoMeshField(np.zeros(self.coarse.space.n_velocity),
                            self.fine.basis @ c_coords)

    def pair_l2(self, fld_a, fld_b):
        Mh = self.fine.ops.M
        MH = self.coarse.ops.M
        Mx = self.cross.M_x
        return float(fld_a.coarse @ (MH @ fld_b.coarse)
                     + fld_a.fine @ (Mh @ fld_b.fine)
                     + fld_a.coarse @ (Mx @ fld_b.fine)
                     + fld_b.coarse @ (Mx @ fld_a.fine))

    def pair_h1(self, fld_a, fld_b):
        Ah = self.fine.ops.A
        AH = self.coarse.ops.A
        Ax = self.cross.A_x
        return float(fld_a.coarse @ (AH @ fld_b.coarse)
                     + fld_a.fine @ (Ah @ fld_b.fine)
                     + fld_a.coarse @ (Ax @ fld_b.fine)
                     + fld_b.coarse @ (Ax @ fld_a.fine))

    def pair_norms(self, fld):
        return (np.sqrt(max(self.pair_l2(fld, fld), 0.0)),
                np.sqrt(max(self.pair_h1(fld, fld), 0.0)))

    def stiffness_dual(self, fld):
        """Dual pair of a(fld, .): coarse-dof and fine-dof components."""
        r_c = self.coarse.ops.A @ fld.coarse + self.cross.A_x @ fld.fine
        r_f = self.cross.A_x.T @ fld.coarse + self.fine.ops.A @ fld.fine
        return r_c, r_f

    def test_coords(self, r_c, r_f):
        """Project a dual pair on the (y, z) test bases -> stacked coords."""
        ry = self.coarse.basis.T @ r_c
        rz = self.Z_c.T @ r_c + self.Z_f.T @ r_f
        return np.concatenate([ry, rz])


def apply_PH(split, v):
    """Split a field into its coarse projection and the complement remainder.

    v may be fine velocity coefficients or a TwoMeshField.  Returns
    (coarse coefficient vector of P v, TwoMeshField of (I - P) v).
    """
    if isinstance(v, TwoMeshField):
        rhs = split.coarse.ops.M @ v.coarse + split.cross.M_x @ v.fine
        beta = split.coarse.basis.T @ rhs
        y = split.coarse.basis @ beta
        return y, TwoMeshField(v.coarse - y, v.fine.copy())
    v = np.asarray(v, dtype=float)
    beta = split.coarse.basis.T @ (split.cross.M_x @ v)
    y = split.coarse.basis @ beta
    return y, TwoMeshField(-y, v.copy())


@dataclass(frozen=True)
class SubspaceConstants:
    """Diagnostics of the two-level splitting.

    c_H: best constant in |chi| <= c_H |chi|_1 over the complement (length);
    one_minus_rho: strengthened Cauchy-Schwarz bound between the levels;
    lambda_1: smallest eigenvalue of the stiffness-vs-mass pencil on the
    fine divergence-free space.
    """

    c_H: float
    one_minus_rho: float
    lambda_1: float


def _smallest_eig_spd(A):
    n = A.shape[0]
    if n <= 1500:
        return float(sla.eigh(A, eigvals_only=True, subset_by_index=[0, 0],
                              check_finite=False)[0])
    cho = sla.cho_factor(A, check_finite=False)
    opinv = spla.LinearOperator(A.shape,
                                matvec=lambda v: sla.cho_solve(cho, v, check_finite=False))
    vals = spla.eigsh(spla.aslinearoperator(A), k=1, sigma=0.0, which="LM",
                      OPinv=opinv, return_eigenvectors=False)
    return float(vals[0])


def subspace_constants(split):
    """Spectral constants of the splitting (see SubspaceConstants)."""
    try:
        L_y = sla.cholesky(split.A_yy, lower=True, check_finite=False)
        L_z = sla.cholesky(split.A_zz, lower=True, check_finite=False)
    except sla.LinAlgError as exc:
        raise linalg.SolveFailure(f"stiffness block not SPD: {exc}") from exc
    # one_minus_rho = sup |a(phi, chi)| / (|phi|_1 |chi|_1)
    T = sla.solve_triangular(L_y, split.A_yz, lower=True, check_finite=False)
    T = sla.solve_triangular(L_z, T.T, lower=True, check_finite=False).T
    one_minus_rho = float(sla.svd(T, compute_uv=False)[0]) if T.size else 0.0
    # complement basis is L2-orthonormal, so the L2-vs-H1 pencil reduces to A_zz
    lam_min_zz = _smallest_eig_spd(split.A_zz) if split.A_zz.size else np.inf
    c_H = float(1.0 / np.sqrt(lam_min_zz)) if np.isfinite(lam_min_zz) else 0.0
    lambda_1 = _smallest_eig_spd(split.A_cc)
    return SubspaceConstants(c_H=c_H, one_minus_rho=one_minus_rho, lambda_1=lambda_1)


def build_two_level_split(coarse_basis, fine_basis, cross, ancestors=None,
                          prune_tol=PRUNE_TOL):
    """Assemble the two-level split from level bases and cross operators.

    The complement is the image of the fine basis under (I - P); directions
    whose L2 norm falls below prune_tol (fine functions L2-identical to
    coarse ones) are pruned, the rest are L2-orthonormalized.
    """
    PhiH, Phih = coarse_basis.basis, fine_basis.basis
    gram_h = PhiH.T @ (coarse_basis.ops.M @ PhiH)
    cond = np.linalg.cond(gram_h)
    if cond > 1e12:
        raise ConditioningError(f"coarse Gram condition {cond:.3e} exceeds 1e12")

    MxPhih = cross.M_x @ Phih
    P = sla.solve(gram_h, PhiH.T @ MxPhih, assume_a="pos")
    del MxPhih

    # complement of column j: Phih[:, j] (fine part) - PhiH P[:, j] (coarse part);
    # L2 Gram of these pairs is exactly I - P^T P, diagonalized by the right
    # singular vectors of P.
    _, svals, vt = sla.svd(P, full_matrices=True, lapack_driver="gesdd")
    scale2 = np.ones(Phih.shape[1])
    scale2[:svals.size] = np.clip(1.0 - svals**2, 0.0, None)
    scale = np.sqrt(scale2)
    keep = scale > prune_tol
    W = (vt.T[:, keep]) / scale[keep]

    Z_f = Phih @ W
    Z_c = -PhiH @ (P @ W)

    # stiffness blocks through cross-level quadrature
    A_cc = Phih.T @ (fine_basis.ops.A @ Phih)
    A_yy = PhiH.T @ (coarse_basis.ops.A @ PhiH)
    C = PhiH.T @ (cross.A_x @ Phih)            # a(coarse basis, fine basis)
    A_yc = C
    A_yz = (C - A_yy @ P) @ W
    S = A_cc - C.T @ P
    A_zc = W.T @ S
    A_zz = W.T @ (S - P.T @ (C - A_yy @ P)) @ W
    A_zz = 0.5 * (A_zz + A_zz.T)
    A_yy = 0.5 * (A_yy + A_yy.T)
    A_cc = 0.5 * (A_cc + A_cc.T)

    G_yc = P.copy()
    G_zc = W.T - W.T @ (P.T @ P)

    if ancestors is None:
        ancestors = np.arange(fine_basis.space.mesh.num_triangles)

    return TwoLevelSplit(
        coarse=coarse_basis, fine=fine_basis, cross=cross,
        ancestors=np.asarray(ancestors),
        P=P, W=W, Z_f=Z_f, Z_c=Z_c,
        A_yy=A_yy, A_yz=A_yz, A_zz=A_zz, A_cc=A_cc, A_yc=A_yc, A_zc=A_zc,
        G_yc=G_yc, G_zc=G_zc,
    )


def build_level_pair(n_coarse, refinements, quad_degree=6):
    """Convenience: spaces, operators, bases, cross and split for one pair.

    Returns the split; its members expose everything else.  refinements = 0
    gives the degenerate equal-level split (empty complement).
    """
    hier = mesh_mod.build_hierarchy(n_coarse, refinements)
    coarse_space = fespace.FeSpace(hier.meshes[0], quad_degree=quad_degree)
    if refinements == 0:
        fine_space = coarse_space
        ancestors = None
    else:
        fine_space = fespace.FeSpace(hier.meshes[-1], quad_degree=quad_degree)
        ancestors = hier.ancestor_map(0, len(hier.meshes) - 1)
    coarse_ops = fespace.assemble_operators(coarse_space)
    fine_ops = coarse_ops if refinements == 0 else fespace.assemble_operators(fine_space)
    coarse_basis = nullspace_basis(coarse_space, coarse_ops)
    fine_basis = coarse_basis if refinements == 0 else nullspace_basis(fine_space, fine_ops)
    cross = fespace.cross_level_operators(coarse_space, fine_space, ancestors)
    return build_two_level_split(coarse_basis, fine_basis, cross, ancestors)
