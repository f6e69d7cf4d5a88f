"""Gauss quadrature on the reference tetrahedron, triangle, and segment.

All rules are conical (Stroud) products of Gauss-Jacobi rules, so the
weights are strictly positive for every exactness degree.  A rule of
degree d integrates every polynomial of total degree <= d exactly.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi


@dataclass(frozen=True)
class TetQuadrature:
    """Points/weights on the reference tetrahedron (volume 1/6)."""

    points: np.ndarray   # (Q, 3)
    weights: np.ndarray  # (Q,)
    degree: int

    @property
    def npoints(self):
        return len(self.weights)


@dataclass(frozen=True)
class TriQuadrature:
    """Points/weights on the reference triangle (area 1/2)."""

    points: np.ndarray   # (Q, 2)
    weights: np.ndarray
    degree: int


@dataclass(frozen=True)
class SegQuadrature:
    """Points/weights on the unit segment [0, 1]."""

    points: np.ndarray   # (Q,)
    weights: np.ndarray
    degree: int


def _jacobi01(n, alpha):
    # Gauss-Jacobi rule for the weight (1-t)^alpha on [0, 1].
    x, w = roots_jacobi(n, alpha, 0.0)
    return (x + 1.0) / 2.0, w / 2.0 ** (alpha + 1.0)


def _npoints_1d(degree):
    # n-point Gauss integrates degree 2n-1 exactly.
    return max(1, (degree + 2) // 2)


def tet_quadrature(degree):
    """Conical-product rule on the reference tetrahedron, exact to `degree`."""
    if degree < 1:
        raise ValueError(f"quadrature degree must be >= 1, got {degree}")
    n = _npoints_1d(degree)
    x1, w1 = _jacobi01(n, 2.0)
    x2, w2 = _jacobi01(n, 1.0)
    x3, w3 = _jacobi01(n, 0.0)
    u1, u2, u3 = np.meshgrid(x1, x2, x3, indexing="ij")
    u1, u2, u3 = u1.ravel(), u2.ravel(), u3.ravel()
    x = u1
    y = u2 * (1.0 - u1)
    z = u3 * (1.0 - u1) * (1.0 - u2)
    w = (w1[:, None, None] * w2[None, :, None] * w3[None, None, :]).ravel()
    return TetQuadrature(np.column_stack([x, y, z]), w, degree)


def tri_quadrature(degree):
    """Conical-product rule on the reference triangle, exact to `degree`."""
    if degree < 1:
        raise ValueError(f"quadrature degree must be >= 1, got {degree}")
    n = _npoints_1d(degree)
    x1, w1 = _jacobi01(n, 1.0)
    x2, w2 = _jacobi01(n, 0.0)
    u1, u2 = np.meshgrid(x1, x2, indexing="ij")
    u1, u2 = u1.ravel(), u2.ravel()
    w = (w1[:, None] * w2[None, :]).ravel()
    return TriQuadrature(np.column_stack([u1, u2 * (1.0 - u1)]), w, degree)


def seg_quadrature(degree):
    """Gauss-Legendre rule on [0, 1], exact to `degree`."""
    if degree < 1:
        raise ValueError(f"quadrature degree must be >= 1, got {degree}")
    x, w = _jacobi01(_npoints_1d(degree), 0.0)
    return SegQuadrature(x, w, degree)
