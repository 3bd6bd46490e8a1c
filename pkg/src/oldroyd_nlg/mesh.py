"""Nested uniform triangulations of the unit square.

Meshes are criss-cross right-triangle grids (two triangles per cell, all
diagonals from lower-left to upper-right), refined by red (regular)
subdivision so that each level is exactly nested in the previous one.
Vertices are kept on an integer lattice internally, which makes vertex
ordering, boundary classification and parent containment exact.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Mesh:
    """Immutable triangulation of [0,1]^2.

    vertices: (nv, 2) coordinates, ordered lexicographically by (y, x)
    triangles: (nt, 3) counterclockwise vertex triples
    boundary_vertex_flags: (nv,) bool, True exactly on the boundary
    level: refinement depth (0 for a freshly built mesh)
    n: cells per side of the generating grid (nominal size 1/n)
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_vertex_flags: np.ndarray
    level: int
    n: int
    # integer lattice coords (nv, 2) with denominator _denom; refinement plumbing
    _lattice: np.ndarray = field(repr=False, default=None)
    _denom: int = field(repr=False, default=0)

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    def triangle_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True)
class MeshHierarchy:
    """Ordered meshes (coarsest first) with fine->coarse parent maps.

    parent_of[i] maps triangles of meshes[i+1] to their containing triangle
    in meshes[i]; each parent has exactly four children.
    """

    meshes: tuple
    parent_of: tuple

    def ancestor_map(self, coarse_index, fine_index):
        """Triangle map from meshes[fine_index] down to meshes[coarse_index]."""
        if not 0 <= coarse_index <= fine_index < len(self.meshes):
            raise ValueError("invalid level pair")
        amap = np.arange(self.meshes[fine_index].num_triangles)
        for lvl in range(fine_index - 1, coarse_index - 1, -1):
            amap = self.parent_of[lvl][amap]
        return amap


def build_unit_square(n):
    """Uniform right-triangle mesh of [0,1]^2 with n cells per side."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"cells per side must be an integer >= 2, got {n!r}")
    n = int(n)
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1))  # jj = y index
    lattice = np.column_stack([ii.ravel(), jj.ravel()])       # (y,x)-lex order
    vertices = lattice / float(n)

    def vid(i, j):
        return j * (n + 1) + i

    tris = []
    for j in range(n):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))  # lower-right of the diagonal
            tris.append((v00, v11, v01))  # upper-left
    triangles = np.asarray(tris, dtype=np.int64)
    flags = (
        (lattice[:, 0] == 0) | (lattice[:, 0] == n)
        | (lattice[:, 1] == 0) | (lattice[:, 1] == n)
    )
    return Mesh(vertices, triangles, flags, level=0, n=n,
                _lattice=lattice, _denom=n)


def refine_red(mesh):
    """Split every triangle into four congruent children via edge midpoints.

    Returns (fine_mesh, parent_of) with children emitted corner-corner-corner-
    center for each parent in order; fine vertices are re-sorted
    lexicographically by (y, x).
    """
    if mesh._lattice is None:
        raise ValueError("mesh lacks lattice metadata; build it with this module")
    d2 = 2 * mesh._denom
    old = 2 * mesh._lattice  # old vertices on the doubled lattice
    tris = mesh.triangles

    # midpoints per unique edge (exact integer arithmetic)
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    uniq, inverse = np.unique(edges, axis=0, return_inverse=True)
    midpts = old[uniq[:, 0]] + old[uniq[:, 1]]
    midpts //= 2

    all_lat = np.concatenate([old, midpts])
    order = np.lexsort((all_lat[:, 0], all_lat[:, 1]))  # by (y, x)
    new_index = np.empty(len(all_lat), dtype=np.int64)
    new_index[order] = np.arange(len(all_lat))
    lattice = all_lat[order]

    nt = tris.shape[0]
    m01 = new_index[mesh.num_vertices + inverse[:nt]]
    m12 = new_index[mesh.num_vertices + inverse[nt:2 * nt]]
    m20 = new_index[mesh.num_vertices + inverse[2 * nt:]]
    v0, v1, v2 = (new_index[tris[:, c]] for c in range(3))

    children = np.empty((4 * nt, 3), dtype=np.int64)
    children[0::4] = np.column_stack([v0, m01, m20])
    children[1::4] = np.column_stack([v1, m12, m01])
    children[2::4] = np.column_stack([v2, m20, m12])
    children[3::4] = np.column_stack([m01, m12, m20])
    parent_of = np.repeat(np.arange(nt, dtype=np.int64), 4)

    flags = (
        (lattice[:, 0] == 0) | (lattice[:, 0] == d2)
        | (lattice[:, 1] == 0) | (lattice[:, 1] == d2)
    )
    fine = Mesh(lattice / float(d2), children, flags,
                level=mesh.level + 1, n=2 * mesh.n,
                _lattice=lattice, _denom=d2)
    return fine, parent_of


def build_hierarchy(n_coarse, refinements):
    """Hierarchy starting from build_unit_square(n_coarse), refined red."""
    meshes = [build_unit_square(n_coarse)]
    parents = []
    for _ in range(refinements):
        fine, pmap = refine_red(meshes[-1])
        meshes.append(fine)
        parents.append(pmap)
    return MeshHierarchy(tuple(meshes), tuple(parents))


def mesh_size(mesh):
    """Longest edge over all triangles."""
    p = mesh.vertices[mesh.triangles]
    lengths = [
        np.linalg.norm(p[:, a] - p[:, b], axis=1)
        for a, b in ((0, 1), (1, 2), (2, 0))
    ]
    return float(np.max(lengths))


def write_text_dump(mesh, path):
    """Plain-text dump: one vertex per line 'x y flag', one triangle 'i j k'."""
    with open(path, "w") as fh:
        for (x, y), flag in zip(mesh.vertices, mesh.boundary_vertex_flags):
            fh.write(f"{x:.17g} {y:.17g} {int(flag)}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")


def validate_mesh(mesh, tol=1e-12):
    """Check the structural invariants; raises AssertionError on violation."""
    areas = mesh.triangle_areas()
    assert np.all(areas > 0), "non-positive triangle area"
    assert abs(areas.sum() - 1.0) <= tol, "triangle areas do not tile the square"
    on_boundary = (
        np.isclose(mesh.vertices, 0.0, atol=tol) | np.isclose(mesh.vertices, 1.0, atol=tol)
    ).any(axis=1)
    assert np.array_equal(on_boundary, mesh.boundary_vertex_flags), "boundary flags wrong"
    n = mesh.n
    assert mesh.num_vertices == (n + 1) ** 2
    assert mesh.num_triangles == 2 * n * n


def validate_nesting(coarse, fine, parent_of, tol=1e-12):
    """Each fine triangle must sit inside its recorded parent."""
    counts = np.bincount(parent_of, minlength=coarse.num_triangles)
    assert np.all(counts == 4), "every parent must have exactly four children"
    pverts = coarse.vertices[coarse.triangles[parent_of]]  # (ntf, 3, 2)
    d1 = pverts[:, 1] - pverts[:, 0]
    d2 = pverts[:, 2] - pverts[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    for c in range(3):
        rel = fine.vertices[fine.triangles[:, c]] - pverts[:, 0]
        lam1 = (rel[:, 0] * d2[:, 1] - rel[:, 1] * d2[:, 0]) / det
        lam2 = (d1[:, 0] * rel[:, 1] - d1[:, 1] * rel[:, 0]) / det
        inside = (lam1 >= -tol) & (lam2 >= -tol) & (lam1 + lam2 <= 1 + tol)
        assert np.all(inside), "fine vertex escapes its parent triangle"
