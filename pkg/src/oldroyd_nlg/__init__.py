"""Two-level (nonlinear Galerkin) finite elements for the 2D Oldroyd order-one model.

The package provides uniform nested meshes of the unit square, MINI-element
assembly, explicit discretely divergence-free bases with their two-level
L2-orthogonal splitting, exponential-kernel memory quadrature, backward-Euler
time steppers for the single-level Galerkin scheme and both two-level variants,
manufactured solutions, and a study harness that measures convergence rates
and subspace diagnostics.
"""

__version__ = "0.1.0"
