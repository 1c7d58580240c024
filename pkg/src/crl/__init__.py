"""Numerical laboratory for compactly supported conformal deformations of
scalar curvature, Dirichlet eigenvalues of -Laplacian - R/(n-1), and the
Brown-York mass of conformal metrics."""

__version__ = "0.1.0"
