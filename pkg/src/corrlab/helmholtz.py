"""Random-potential Helmholtz problems and their corrector statistics.

The perturbed problem (P + q_eps) u = f with P = -a* d^2/dx^2 + q0 is solved
through the safeguarded twice-iterated integral equation; a direct banded
solve of the same discrete operator serves as the independent oracle.  The
module also evaluates the limiting corrector variance law, moment-functional
covariances (1D and 2D), and the periodic-potential cell corrector used for
contrast experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import solveh_banded

from . import randfield
from .greens import (
    GreenKernel1D,
    GreenOperator,
    Mesh1D,
    Mesh2D,
    apply_green_2d,
    discrete_green_operator,
    fd_matrix_banded,
)
from .iteration import neumann_solve
from .randfield import MAProcessSpec, sigma2


@dataclass(eq=False)
class HelmholtzProblem:
    """1D problem -a* u'' + (q0 + q_eps) u = f on (0, L), Dirichlet ends."""

    mesh: Mesh1D
    a_star: float
    q0: float
    field_spec: MAProcessSpec
    f: np.ndarray
    epsilon: float
    alpha: float = 0.0
    truncation_rho: float = 0.5

    def __post_init__(self):
        if not self.a_star > 0:
            raise ValueError("a_star must be positive")
        if self.q0 < 0:
            raise ValueError("q0 must be nonnegative")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 <= self.alpha < 0.25:
            raise ValueError("alpha must lie in [0, 1/4)")
        if not 0.0 < self.truncation_rho < 1.0:
            raise ValueError("truncation_rho must lie in (0, 1)")
        self.f = np.asarray(self.f, dtype=float)
        if self.f.shape != self.mesh.nodes.shape:
            raise ValueError("f must hold one value per mesh node")
        if not np.all(np.isfinite(self.f)):
            raise ValueError("f must be finite")
        self.dimension = 1
        self._green_fd = None
        self._green_quad = None

    @property
    def kernel(self) -> GreenKernel1D:
        return GreenKernel1D(self.a_star, self.q0, self.mesh.length)

    @property
    def green(self) -> GreenOperator:
        """Quadrature Green's operator built from the closed-form kernel."""
        if self._green_quad is None:
            self._green_quad = GreenOperator(self.kernel, self.mesh)
        return self._green_quad

    def apply_green(self, v: np.ndarray) -> np.ndarray:
        """Unperturbed solution operator, realized as the exact FD inverse."""
        if self._green_fd is None:
            self._green_fd = discrete_green_operator(self.mesh, self.a_star, self.q0)
        return self._green_fd.apply(v)

    @property
    def corrector_scale(self) -> float:
        """epsilon^{d (1/2 - alpha)}, the corrector normalization."""
        return self.epsilon ** (self.dimension * (0.5 - self.alpha))

    @property
    def amplitude_scale(self) -> float:
        """epsilon^{-alpha d}, the potential amplitude for alpha > 0."""
        return self.epsilon ** (-self.alpha * self.dimension)

    def sample_potential(self, seed: int) -> np.ndarray:
        """Scaled potential q_eps at the mesh nodes for one realization."""
        real = randfield.sample(self.field_spec, self.epsilon, self.mesh, seed)
        return self.amplitude_scale * real.values


@dataclass
class HelmholtzSolution:
    u_eps: np.ndarray
    u0: np.ndarray
    iterations: int
    residual: float
    op_norm_estimate: float
    truncated: bool
    seed: int
    q_values: np.ndarray
    residual_history: tuple = ()


def homogenized_solve(problem: HelmholtzProblem) -> np.ndarray:
    """Unperturbed solution u0 = G f."""
    return problem.apply_green(problem.f)


def perturbed_solve(problem: HelmholtzProblem, seed: int, tol: float = 1e-10) -> HelmholtzSolution:
    """Solve the perturbed problem by the safeguarded fixed-point iteration."""
    q = problem.sample_potential(seed)
    res = neumann_solve(
        problem.apply_green,
        q,
        problem.f,
        problem.mesh.quad_weights,
        tol=tol,
        truncation_rho=problem.truncation_rho,
    )
    return HelmholtzSolution(
        u_eps=res.u,
        u0=res.u0,
        iterations=res.iterations,
        residual=res.residual,
        op_norm_estimate=res.op_norm_estimate,
        truncated=res.truncated,
        seed=int(seed),
        q_values=q,
        residual_history=res.residual_history,
    )


def dirichlet_solve_fd(mesh: Mesh1D, a_star: float, potential, f: np.ndarray) -> np.ndarray:
    """Direct banded solve of -a* u'' + potential u = f (three-point stencil)."""
    ab = fd_matrix_banded(mesh, a_star, potential)
    try:
        interior = solveh_banded(ab, np.asarray(f, dtype=float)[1:-1])
    except np.linalg.LinAlgError as exc:
        raise ValueError("indefinite operator") from exc
    out = np.zeros(mesh.n_nodes)
    out[1:-1] = interior
    return out


def direct_solve_fd(problem: HelmholtzProblem, q_values: np.ndarray) -> np.ndarray:
    """Independent oracle: direct solve of (P + q_eps) u = f on the same mesh."""
    return dirichlet_solve_fd(
        problem.mesh, problem.a_star, problem.q0 + np.asarray(q_values), problem.f
    )


def corrector(problem: HelmholtzProblem, solution: HelmholtzSolution) -> np.ndarray:
    """(u_eps - u0) / epsilon^{d (1/2 - alpha)} at the mesh nodes."""
    return (solution.u_eps - solution.u0) / problem.corrector_scale


def leading_corrector(problem: HelmholtzProblem, seed: int) -> np.ndarray:
    """First-order corrector -G(q_eps u0) / epsilon^{d (1/2 - alpha)}.

    For alpha = 0 this is -epsilon^{-d/2} G(q_eps u0); the alpha scaling keeps
    the limiting variance law independent of alpha.
    """
    q = problem.sample_potential(seed)
    u0 = homogenized_solve(problem)
    return -problem.apply_green(q * u0) / problem.corrector_scale


@dataclass
class CorrectorLawHelm1D:
    """Pointwise Gaussian limit of the normalized corrector."""

    x_nodes: np.ndarray
    variance_fn: np.ndarray  # variance of the limit at each probe node
    sigma2: float

    def variance_at(self, x: float) -> float:
        pos = np.nonzero(np.abs(self.x_nodes - x) <= 1e-9)[0]
        if pos.size == 0:
            raise ValueError("x is not a probe node of this law")
        return float(self.variance_fn[pos[0]])


def corrector_law_1d(problem: HelmholtzProblem, x_nodes=None, block: int = 256) -> CorrectorLawHelm1D:
    """Limit variance x -> sigma^2 int G(x,y)^2 u0(y)^2 dy by node quadrature.

    x_nodes restricts evaluation to selected probe nodes (default: the whole
    mesh).
    """
    s2 = sigma2(problem.field_spec)
    u0 = homogenized_solve(problem)
    mesh = problem.mesh
    if x_nodes is None:
        xs = mesh.nodes
    else:
        xs = np.asarray(x_nodes, dtype=float)
    kern = problem.kernel
    w_u2 = mesh.quad_weights * u0 * u0
    var = np.empty(xs.size)
    from .greens import eval_green_1d

    for start in range(0, xs.size, block):
        stop = min(start + block, xs.size)
        g = eval_green_1d(kern, xs[start:stop, None], mesh.nodes[None, :])
        var[start:stop] = (g * g) @ w_u2
    return CorrectorLawHelm1D(x_nodes=xs, variance_fn=s2 * var, sigma2=s2)


@dataclass(eq=False)
class MomentSet:
    """Test functions M_k sampled on the mesh nodes."""

    functions: tuple  # tuple of node-value arrays

    def __post_init__(self):
        self.functions = tuple(np.asarray(m, dtype=float) for m in self.functions)


def moment_functionals(
    problem: HelmholtzProblem, moments: MomentSet, solution: HelmholtzSolution
) -> np.ndarray:
    """Quadrature pairings of the normalized corrector with each M_k."""
    c = corrector(problem, solution)
    w = problem.mesh.quad_weights
    return np.array([float(np.sum(w * c * m)) for m in moments.functions])


def moment_covariance(problem: HelmholtzProblem, moments: MomentSet) -> np.ndarray:
    """Limit covariance Sigma_jk = sigma^2 int m_j m_k, m_k = -(G M_k) u0."""
    u0 = homogenized_solve(problem)
    w = problem.mesh.quad_weights
    ms = [-problem.apply_green(m) * u0 for m in moments.functions]
    k = len(ms)
    s2 = sigma2(problem.field_spec)
    out = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            out[i, j] = s2 * float(np.sum(w * ms[i] * ms[j]))
    return out


def periodic_cell_corrector_1d(mesh: Mesh1D, q_values: np.ndarray) -> np.ndarray:
    """Zero-mean periodic cell corrector of -u2'' = <q> - q on the unit cell.

    q_values are node samples of the periodic potential on [0, 1] with equal
    first and last values; the solve is a double cumulative quadrature.
    """
    q = np.asarray(q_values, dtype=float)
    if q.shape != mesh.nodes.shape:
        raise ValueError("q must hold one value per mesh node")
    if abs(q[0] - q[-1]) > 1e-12 * (1.0 + np.max(np.abs(q))):
        raise ValueError("q must be periodic (equal end values)")
    w = mesh.quad_weights
    g = float(np.sum(w * q)) / mesh.length - q  # <q> - q, mean zero
    big_i = cumulative_trapezoid(g, mesh.nodes, initial=0.0)
    slope0 = float(np.sum(w * big_i)) / mesh.length
    du = slope0 - big_i
    u2 = cumulative_trapezoid(du, mesh.nodes, initial=0.0)
    u2 -= float(np.sum(w * u2)) / mesh.length
    return u2


# --- 2D problem (moment functionals on the unit square) ---


@dataclass(eq=False)
class Helmholtz2DProblem:
    """-Laplace u + (q0 + q_eps) u = f on the unit square, sine-spectral G."""

    mesh: Mesh2D
    q0: float
    field_spec: MAProcessSpec
    f: np.ndarray
    epsilon: float
    alpha: float = 0.0
    truncation_rho: float = 0.5
    modes: int | None = None

    def __post_init__(self):
        if self.q0 < 0:
            raise ValueError("q0 must be nonnegative")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 <= self.alpha < 0.25:
            raise ValueError("alpha must lie in [0, 1/4)")
        self.f = np.asarray(self.f, dtype=float)
        if self.f.shape != (self.mesh.n_nodes, self.mesh.n_nodes):
            raise ValueError("f must hold one value per mesh node")
        self.dimension = 2

    def apply_green(self, v: np.ndarray) -> np.ndarray:
        return apply_green_2d(self.mesh, self.q0, v, self.modes)

    @property
    def corrector_scale(self) -> float:
        return self.epsilon ** (self.dimension * (0.5 - self.alpha))

    @property
    def amplitude_scale(self) -> float:
        return self.epsilon ** (-self.alpha * self.dimension)

    def sample_potential(self, seed: int) -> np.ndarray:
        real = randfield.sample_2d(self.field_spec, self.epsilon, self.mesh, seed)
        return self.amplitude_scale * real.values


def homogenized_solve_2d(problem: Helmholtz2DProblem) -> np.ndarray:
    return problem.apply_green(problem.f)


def perturbed_solve_2d(problem: Helmholtz2DProblem, seed: int, tol: float = 1e-10) -> HelmholtzSolution:
    q = problem.sample_potential(seed)
    res = neumann_solve(
        problem.apply_green,
        q,
        problem.f,
        problem.mesh.quad_weights,
        tol=tol,
        truncation_rho=problem.truncation_rho,
    )
    return HelmholtzSolution(
        u_eps=res.u,
        u0=res.u0,
        iterations=res.iterations,
        residual=res.residual,
        op_norm_estimate=res.op_norm_estimate,
        truncated=res.truncated,
        seed=int(seed),
        q_values=q,
        residual_history=res.residual_history,
    )


def sigma2_separable_2d(spec: MAProcessSpec) -> float:
    """Integrated correlation of the separable 2D field: amp^2 Var(xi) (sum w)^4."""
    s = float(np.sum(spec.weights))
    return spec.amplitude**2 * spec.marginal.variance * s**4


def moment_functionals_2d(
    problem: Helmholtz2DProblem, moments: MomentSet, solution: HelmholtzSolution
) -> np.ndarray:
    c = (solution.u_eps - solution.u0) / problem.corrector_scale
    w = problem.mesh.quad_weights
    return np.array([float(np.sum(w * c * m)) for m in moments.functions])


def moment_covariance_2d(problem: Helmholtz2DProblem, moments: MomentSet) -> np.ndarray:
    u0 = homogenized_solve_2d(problem)
    w = problem.mesh.quad_weights
    ms = [-problem.apply_green(m) * u0 for m in moments.functions]
    s2 = sigma2_separable_2d(problem.field_spec)
    k = len(ms)
    out = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            out[i, j] = s2 * float(np.sum(w * ms[i] * ms[j]))
    return out
