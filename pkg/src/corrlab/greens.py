"""Closed-form Dirichlet Green's functions and discrete Green's operators.

The 1D kernel of -a* d^2/dx^2 + q0 on (0, L) is available in closed form,
with one-sided partial derivatives in x, y, and the interval length L.  Two
discrete realizations of the solution operator are provided: a quadrature
(Nystrom) matrix built from the kernel, and the exact inverse of the
three-point finite-difference matrix applied through a prefactored banded
Cholesky solve.  A sine-spectral operator covers the 2D unit square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import dstn
from scipy.linalg import cho_solve_banded, cholesky_banded


@dataclass(eq=False)
class Mesh1D:
    """Uniform mesh on [0, L] with trapezoid quadrature weights."""

    n_nodes: int
    length: float = 1.0

    def __post_init__(self):
        if self.n_nodes < 3:
            raise ValueError("need at least 3 nodes")
        if not self.length > 0:
            raise ValueError("length must be positive")
        self.nodes = np.linspace(0.0, self.length, self.n_nodes)
        self.h = self.length / (self.n_nodes - 1)
        w = np.full(self.n_nodes, self.h)
        w[0] = w[-1] = 0.5 * self.h
        self.quad_weights = w

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum(self.quad_weights * u * v))

    def norm_l2(self, u: np.ndarray) -> float:
        return math.sqrt(max(self.inner(u, u), 0.0))


@dataclass(eq=False)
class Mesh2D:
    """Uniform tensor mesh on the unit square, trapezoid weights per axis."""

    n_nodes: int  # nodes per axis

    def __post_init__(self):
        if self.n_nodes < 3:
            raise ValueError("need at least 3 nodes per axis")
        self.nodes = np.linspace(0.0, 1.0, self.n_nodes)
        self.h = 1.0 / (self.n_nodes - 1)
        w = np.full(self.n_nodes, self.h)
        w[0] = w[-1] = 0.5 * self.h
        self.weights_1d = w
        self.quad_weights = np.outer(w, w)

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum(self.quad_weights * u * v))

    def norm_l2(self, u: np.ndarray) -> float:
        return math.sqrt(max(self.inner(u, u), 0.0))


@dataclass(frozen=True)
class GreenKernel1D:
    """Green's function of -a* u'' + q0 u on (0, L), Dirichlet ends."""

    a_star: float
    q0: float
    L: float = 1.0

    def __post_init__(self):
        if not self.a_star > 0:
            raise ValueError("a_star must be positive")
        if self.q0 < 0:
            raise ValueError("q0 must be nonnegative")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def kappa(self) -> float:
        return math.sqrt(self.q0 / self.a_star)


def eval_green_1d(kernel: GreenKernel1D, x, y):
    """Evaluate G(x, y); broadcasts over array arguments."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lo = np.minimum(x, y)
    hi = np.maximum(x, y)
    a, L = kernel.a_star, kernel.L
    if kernel.q0 == 0.0:
        out = lo * (L - hi) / (a * L)
    else:
        k = kernel.kappa
        out = np.sinh(k * lo) * np.sinh(k * (L - hi)) / (a * k * math.sinh(k * L))
    return out if out.ndim else float(out)


def green_partials_1d(kernel: GreenKernel1D, x: float, y: float, side: str | None = None):
    """One-sided partial derivatives (dG/dx, dG/dy, dG/dL) at (x, y).

    On the diagonal x == y the derivatives in x and y jump; `side` selects the
    branch: "below" treats the point as the limit from y > x (x below y),
    "above" as the limit from y < x.
    """
    a, L, q0 = kernel.a_star, kernel.L, kernel.q0
    x = float(x)
    y = float(y)
    if x == y:
        if side is None:
            raise ValueError("diagonal side unspecified")
        if side not in ("below", "above"):
            raise ValueError("side must be 'below' or 'above'")
        x_below = side == "below"
    else:
        x_below = x < y
    lo, hi = (x, y) if x_below else (y, x)
    if q0 == 0.0:
        d_lo = (L - hi) / (a * L)
        d_hi = -lo / (a * L)
        d_L = lo * hi / (a * L * L)
    else:
        k = kernel.kappa
        s = math.sinh(k * L)
        d_lo = math.cosh(k * lo) * math.sinh(k * (L - hi)) / (a * s)
        d_hi = -math.sinh(k * lo) * math.cosh(k * (L - hi)) / (a * s)
        d_L = math.sinh(k * lo) * math.sinh(k * hi) / (a * s * s)
    if x_below:
        return d_lo, d_hi, d_L
    return d_hi, d_lo, d_L


@dataclass(eq=False)
class GreenOperator:
    """Quadrature (Nystrom) realization of the solution operator.

    The matrix column j carries the trapezoid weight of node j, so apply(f)
    returns the quadrature approximation of int G(x_i, y) f(y) dy.
    """

    kernel: GreenKernel1D
    mesh: Mesh1D

    def __post_init__(self):
        if abs(self.mesh.length - self.kernel.L) > 1e-12 * self.kernel.L:
            raise ValueError("mesh length must match kernel interval")
        self._matrix = None

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            g = eval_green_1d(
                self.kernel, self.mesh.nodes[:, None], self.mesh.nodes[None, :]
            )
            self._matrix = g * self.mesh.quad_weights[None, :]
        return self._matrix

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(f, dtype=float)


def apply_green(op: GreenOperator, f: np.ndarray) -> np.ndarray:
    return op.apply(f)


def fd_matrix_banded(mesh: Mesh1D, a_star: float, potential) -> np.ndarray:
    """Banded (upper) form of the interior FD matrix of -a* u'' + potential u.

    `potential` is a scalar or a node array; only interior nodes enter.
    """
    n_int = mesh.n_nodes - 2
    h2 = mesh.h * mesh.h
    pot = np.broadcast_to(np.asarray(potential, dtype=float), (mesh.n_nodes,))
    ab = np.zeros((2, n_int))
    ab[0, 1:] = -a_star / h2
    ab[1, :] = 2.0 * a_star / h2 + pot[1:-1]
    return ab


@dataclass(eq=False)
class DiscreteGreenOperator:
    """Exact inverse of a symmetric tridiagonal FD operator, banded Cholesky."""

    mesh: Mesh1D
    banded_upper: np.ndarray

    def __post_init__(self):
        try:
            self._factor = cholesky_banded(self.banded_upper, lower=False)
        except np.linalg.LinAlgError as exc:
            raise ValueError("indefinite operator") from exc

    def apply(self, f: np.ndarray) -> np.ndarray:
        out = np.zeros(self.mesh.n_nodes)
        out[1:-1] = cho_solve_banded((self._factor, False), np.asarray(f)[1:-1])
        return out


def discrete_green_operator(mesh: Mesh1D, a_star: float, q0: float) -> DiscreteGreenOperator:
    """Inverse of the three-point discretization of -a* u'' + q0 u."""
    return DiscreteGreenOperator(mesh, fd_matrix_banded(mesh, a_star, q0))


def apply_green_2d(mesh2d: Mesh2D, q0: float, f: np.ndarray, modes: int | None = None) -> np.ndarray:
    """Sine-spectral solve of -Laplace u + q0 u = f on the unit square.

    f holds node values including the boundary; the result satisfies the
    homogeneous Dirichlet condition exactly.  `modes` truncates the sine
    synthesis per axis (defaults to all resolvable modes, n_nodes - 2).
    """
    if q0 < 0:
        raise ValueError("q0 must be nonnegative")
    n = mesh2d.n_nodes - 1
    if modes is None:
        modes = n - 1
    if not 1 <= modes <= n - 1:
        raise ValueError("modes must be between 1 and n_nodes - 2")
    interior = np.asarray(f, dtype=float)[1:-1, 1:-1]
    coef = dstn(interior, type=1) / (n * n)
    j = np.arange(1, n)
    lam = (j[:, None] ** 2 + j[None, :] ** 2) * math.pi**2 + q0
    coef = coef / lam
    if modes < n - 1:
        coef[modes:, :] = 0.0
        coef[:, modes:] = 0.0
    out = np.zeros((mesh2d.n_nodes, mesh2d.n_nodes))
    out[1:-1, 1:-1] = dstn(coef, type=1) / 4.0
    return out
