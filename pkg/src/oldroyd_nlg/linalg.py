"""Numerical backend: direct solves, rank-revealing null spaces, symmetric
generalized eigenvalue extraction.

Everything is backed by LAPACK/ARPACK through numpy/scipy; dense
factorizations are acceptable at the desk scale this package targets
(up to ~1e4 unknowns).  All routines are deterministic for fixed inputs.
"""

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionAmbiguityError, DimensionMismatchError, SolveFailure

GAP_THRESHOLD = 1e-10   # relative singular-value cutoff for rank decisions
GAP_MIN_RATIO = 10.0    # straddling singular values must differ by this factor


def build_csr(rows, cols, vals, shape, symmetric=False):
    """Finalize triplet data into CSR, summing duplicate entries.

    With symmetric=True the assembled matrix is checked for symmetry to
    1e-12 relative and symmetrized to kill roundoff asymmetry.
    """
    mat = sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
    mat.sum_duplicates()
    if symmetric:
        scale = max(abs(mat).max(), 1.0) if mat.nnz else 1.0
        skew = abs(mat - mat.T).max() if mat.nnz else 0.0
        if skew > 1e-12 * scale:
            raise ValueError(f"matrix flagged symmetric has skew {skew:.3e}")
        mat = (mat + mat.T) * 0.5
    return mat


class FactorizationHandle:
    """Reusable factorization of a square matrix (dense LU/Cholesky or sparse LU)."""

    def __init__(self, matrix, assume_spd=False):
        self.shape = matrix.shape
        if sp.issparse(matrix):
            self._solve = spla.factorized(matrix.tocsc())
            self._kind = "sparse-lu"
        elif assume_spd:
            self._cho = sla.cho_factor(matrix, check_finite=False)
            self._solve = lambda b: sla.cho_solve(self._cho, b, check_finite=False)
            self._kind = "cholesky"
        else:
            lu, piv = sla.lu_factor(matrix)
            self._solve = lambda b: sla.lu_solve((lu, piv), b)
            self._kind = "lu"

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.ndim == 1:
            return self._solve(rhs)
        # sparse-lu factorized() takes one vector at a time
        if self._kind == "sparse-lu":
            return np.column_stack([self._solve(rhs[:, j]) for j in range(rhs.shape[1])])
        return self._solve(rhs)


def factorize(matrix, assume_spd=False):
    return FactorizationHandle(matrix, assume_spd=assume_spd)


def solve_direct(matrix, rhs):
    """Solve a square system directly; guarantees relative residual <= 1e-10."""
    rhs = np.asarray(rhs, dtype=float)
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=float)
    try:
        x = sla.solve(dense, rhs)
    except sla.LinAlgError as exc:
        raise SolveFailure(str(exc), condition_estimate=np.inf) from exc
    residual = np.linalg.norm(dense @ x - rhs)
    scale = np.linalg.norm(rhs)
    if not np.all(np.isfinite(x)) or residual > 1e-10 * max(scale, 1e-300):
        cond = np.linalg.cond(dense)
        raise SolveFailure(
            f"relative residual {residual / max(scale, 1e-300):.3e} too large",
            condition_estimate=cond,
        )
    return x


def nullspace(matrix, expected_dim=None):
    """Orthonormal basis of the null space of a real matrix via SVD.

    The dimension is decided by the relative singular-value threshold
    GAP_THRESHOLD; an ambiguous gap (straddling ratio < 10) raises
    DimensionAmbiguityError, and a mismatch with expected_dim raises
    DimensionMismatchError.
    """
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=float)
    m, n = dense.shape
    _, s, vt = sla.svd(dense, full_matrices=True, lapack_driver="gesdd")
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        dim = n
    else:
        cutoff = GAP_THRESHOLD * smax
        nsmall = int(np.sum(s <= cutoff))
        dim = n - min(m, n) + nsmall
        if 0 < nsmall < s.size:
            ratio = s[s.size - nsmall - 1] / max(s[s.size - nsmall], 1e-300)
            if ratio < GAP_MIN_RATIO:
                raise DimensionAmbiguityError(
                    f"singular values straddling the cut differ only by {ratio:.2f}",
                    gap_ratio=ratio,
                )
    if expected_dim is not None and dim != expected_dim:
        raise DimensionMismatchError(expected_dim, dim)
    return vt[n - dim:].T.copy() if dim > 0 else np.zeros((n, 0))


def generalized_symmetric_eigs(A, B, which="smallest", count=1):
    """Extremal eigenpairs of A x = theta B x with A symmetric, B SPD.

    Dense LAPACK for small problems; Cholesky-accelerated ARPACK for large
    SPD pencils.  Residuals are verified to 1e-8 relative scale.
    """
    if which not in ("smallest", "largest"):
        raise ValueError(f"which must be 'smallest' or 'largest', got {which!r}")
    Ad = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    Bd = B.toarray() if sp.issparse(B) else np.asarray(B, dtype=float)
    n = Ad.shape[0]
    if not np.allclose(Ad, Ad.T, atol=1e-10 * max(1.0, abs(Ad).max())):
        raise ValueError("A is not symmetric")
    try:
        sla.cholesky(Bd, lower=True, check_finite=False)
    except sla.LinAlgError as exc:
        raise ValueError("B is not positive definite") from exc

    if n <= 1500 or count > 0.1 * n:
        vals, vecs = sla.eigh(Ad, Bd, check_finite=False)
        idx = np.arange(count) if which == "smallest" else np.arange(n - count, n)[::-1]
        theta, x = vals[idx], vecs[:, idx]
    else:
        theta, x = _arpack_extremal(Ad, Bd, which, count)

    _check_pencil_residual(Ad, Bd, theta, x)
    return theta, x


def _arpack_extremal(Ad, Bd, which, count):
    if which == "smallest":
        # shift-invert around 0: A must be definite for the Cholesky route
        try:
            cho = sla.cho_factor(Ad, check_finite=False)
        except sla.LinAlgError:
            vals, vecs = sla.eigh(Ad, Bd, check_finite=False)
            return vals[:count], vecs[:, :count]
        op_inv = spla.LinearOperator(
            Ad.shape, matvec=lambda v: sla.cho_solve(cho, v, check_finite=False)
        )
        vals, vecs = spla.eigsh(Ad, k=count, M=Bd, sigma=0.0, which="LM", OPinv=op_inv)
        order = np.argsort(vals)
    else:
        cho_b = sla.cho_factor(Bd, check_finite=False)
        minv = spla.LinearOperator(
            Bd.shape, matvec=lambda v: sla.cho_solve(cho_b, v, check_finite=False)
        )
        vals, vecs = spla.eigsh(Ad, k=count, M=Bd, Minv=minv, which="LA")
        order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def _check_pencil_residual(Ad, Bd, theta, x):
    scale = max(abs(Ad).max(), abs(Bd).max(), 1e-300)
    for j in range(x.shape[1]):
        res = np.linalg.norm(Ad @ x[:, j] - theta[j] * (Bd @ x[:, j]))
        if res > 1e-8 * scale * max(1.0, abs(theta[j])) * np.linalg.norm(x[:, j]):
            raise SolveFailure(f"eigenpair residual {res:.3e} exceeds tolerance")
