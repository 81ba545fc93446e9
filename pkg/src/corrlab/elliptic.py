"""1D random elliptic problems solved through harmonic coordinates.

The problem -d/dx a_eps u' + (q0 + q_eps) u = rho_eps f is mapped by the
harmonic change of variables z_eps(x) = a* int_0^x dt/a_eps to a constant
coefficient operator plus a potential, then solved by the same safeguarded
twice-iterated fixed point as the Helmholtz path.  The module also builds
the three corrector kernels (driven by the fluctuations of 1/a, rho, and
the transformed potential) and the limiting Gaussian law with correlated
Brownian drivers.

Coefficient parametrization: 1/a(y) = (1 + b(y))/a_base with b a bounded
mean-zero moving-average component, so a* = 1/E{1/a} = a_base exactly and
b = a*/a - 1 is sampled directly as channel 0 of the driving triple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import solveh_banded

from . import randfield
from .greens import DiscreteGreenOperator, GreenKernel1D, Mesh1D, eval_green_1d
from .helmholtz import dirichlet_solve_fd
from .iteration import neumann_solve
from .randfield import CorrelatedTripleSpec

# channel layout of the driving triple
CH_B, CH_RHO, CH_Q = 0, 1, 2


@dataclass(eq=False)
class EllipticProblem1D:
    """-(a_eps u')' + (q0 + q_eps) u = rho_eps f on (0,1), Dirichlet ends."""

    mesh: Mesh1D
    triple_spec: CorrelatedTripleSpec
    q0: float
    rho_bar: float
    f: np.ndarray
    epsilon: float
    a_base: float = 1.0
    truncation_rho: float = 0.5

    def __post_init__(self):
        if self.q0 < 0:
            raise ValueError("q0 must be nonnegative")
        if not self.rho_bar > 0:
            raise ValueError("rho_bar must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.a_base > 0:
            raise ValueError("a_base must be positive")
        if not 0.0 < self.truncation_rho < 1.0:
            raise ValueError("truncation_rho must lie in (0, 1)")
        # sup|b| < 1 keeps 1/a = (1 + b)/a_base uniformly elliptic
        if not self.triple_spec.component_bound(CH_B) < 1.0:
            raise ValueError("coefficient not uniformly elliptic")
        if not self.triple_spec.component_bound(CH_RHO) < self.rho_bar:
            raise ValueError("source density not uniformly positive")
        self.f = np.asarray(self.f, dtype=float)
        if self.f.shape != self.mesh.nodes.shape:
            raise ValueError("f must hold one value per mesh node")
        if abs(self.mesh.length - 1.0) > 1e-12:
            raise ValueError("mesh must cover the unit interval")
        self.dimension = 1

    @property
    def ellipticity_floor(self) -> float:
        """Lower bound a0 with a_eps in [a0, a_base^2 / a0] pathwise."""
        return self.a_base / (1.0 + self.triple_spec.component_bound(CH_B))


@dataclass
class HarmonicCoords:
    """z_eps(x) = a* int_0^x dt / a_eps(t) sampled at the mesh nodes."""

    z_eps: np.ndarray
    a_star: float
    delta_z: np.ndarray

    @property
    def length(self) -> float:
        return float(self.z_eps[-1])


@dataclass
class EllipticSolution:
    u_eps: np.ndarray
    u0: np.ndarray
    iterations: int
    residual: float
    op_norm_estimate: float
    truncated: bool
    seed: int
    b_values: np.ndarray
    drho_values: np.ndarray
    q_values: np.ndarray
    tilde_q_values: np.ndarray
    coords: HarmonicCoords


def a_star(problem: EllipticProblem1D) -> float:
    """Effective coefficient 1/E{1/a}; exact under the chosen parametrization."""
    return problem.a_base


def sample_fields(problem: EllipticProblem1D, seed: int):
    """One realization of the (b, delta rho, q) triple at the mesh nodes."""
    return randfield.sample_triple(problem.triple_spec, problem.epsilon, problem.mesh, seed)


def coefficient_values(problem: EllipticProblem1D, b_values: np.ndarray) -> np.ndarray:
    """a_eps at the nodes from the sampled b = a*/a - 1."""
    return problem.a_base / (1.0 + np.asarray(b_values, dtype=float))


def harmonic_coords(problem: EllipticProblem1D, a_values: np.ndarray) -> HarmonicCoords:
    """Cumulative-trapezoid harmonic coordinates of one coefficient realization."""
    a = np.asarray(a_values, dtype=float)
    if a.shape != problem.mesh.nodes.shape:
        raise ValueError("a must hold one value per mesh node")
    if not np.all(a > 0.0):
        raise ValueError("coefficient not uniformly elliptic")
    astar = a_star(problem)
    z = cumulative_trapezoid(astar / a, problem.mesh.nodes, initial=0.0)
    return HarmonicCoords(z_eps=z, a_star=astar, delta_z=z - problem.mesh.nodes)


def tilde_q(problem: EllipticProblem1D, fields) -> np.ndarray:
    """Transformed potential (1 - a*/a_eps) q0 + q_eps = -b q0 + q_eps."""
    b = fields[CH_B].values
    q = fields[CH_Q].values
    return -b * problem.q0 + q


def conservative_matrix_banded(mesh: Mesh1D, a_values: np.ndarray, potential) -> np.ndarray:
    """Banded (upper) interior matrix of -(a u')' + potential u.

    Harmonic-mean coefficient at the half nodes keeps the scheme second
    order for rough a.
    """
    a = np.asarray(a_values, dtype=float)
    n_int = mesh.n_nodes - 2
    h2 = mesh.h * mesh.h
    a_half = 2.0 * a[:-1] * a[1:] / (a[:-1] + a[1:])  # a_{i+1/2}, length n-1
    pot = np.broadcast_to(np.asarray(potential, dtype=float), (mesh.n_nodes,))
    ab = np.zeros((2, n_int))
    ab[0, 1:] = -a_half[1:-1] / h2
    ab[1, :] = (a_half[:-1] + a_half[1:]) / h2 + pot[1:-1]
    return ab


def transformed_green_apply(problem: EllipticProblem1D, a_values: np.ndarray):
    """Exact discrete inverse of v -> -(a_eps v')' + q0 (a*/a_eps) v.

    This is the solution operator the transformed fixed point iterates; it
    agrees with the kernel-composed quadrature operator to O(h^2).
    """
    pot = problem.q0 * a_star(problem) / np.asarray(a_values, dtype=float)
    ab = conservative_matrix_banded(problem.mesh, a_values, pot)
    op = DiscreteGreenOperator(problem.mesh, ab)
    return op.apply


def transformed_green_matrix(problem: EllipticProblem1D, coords: HarmonicCoords) -> np.ndarray:
    """Kernel-composed quadrature operator G(z(x), z(y); z(1)) w_y.

    Built from the closed-form kernel on the image interval; no Jacobian
    enters because dz = (a*/a_eps) dx cancels against the density change.
    """
    kern = GreenKernel1D(coords.a_star, problem.q0, coords.length)
    g = eval_green_1d(kern, coords.z_eps[:, None], coords.z_eps[None, :])
    return g * problem.mesh.quad_weights[None, :]


def solve_homogenized(problem: EllipticProblem1D) -> np.ndarray:
    """u0 of -a* u0'' + q0 u0 = rho_bar f."""
    return dirichlet_solve_fd(
        problem.mesh, a_star(problem), problem.q0, problem.rho_bar * problem.f
    )


def solve_transformed(problem: EllipticProblem1D, seed: int, tol: float = 1e-10) -> EllipticSolution:
    """Fixed-point solve of u = G_eps(rho_eps f) - G_eps(tq G_eps(rho_eps f)) + ...

    G_eps is applied as the exact inverse of the conservative discretization
    of the transformed operator, so the iterate converges to the direct
    conservative solution of the original problem up to the iteration
    tolerance.
    """
    fields = sample_fields(problem, seed)
    b = fields[CH_B].values
    a_vals = coefficient_values(problem, b)
    coords = harmonic_coords(problem, a_vals)
    tq = tilde_q(problem, fields)
    rho = problem.rho_bar + fields[CH_RHO].values
    apply_g = transformed_green_apply(problem, a_vals)
    res = neumann_solve(
        apply_g,
        tq,
        rho * problem.f,
        problem.mesh.quad_weights,
        tol=tol,
        truncation_rho=problem.truncation_rho,
    )
    return EllipticSolution(
        u_eps=res.u,
        u0=solve_homogenized(problem),
        iterations=res.iterations,
        residual=res.residual,
        op_norm_estimate=res.op_norm_estimate,
        truncated=res.truncated,
        seed=int(seed),
        b_values=b,
        drho_values=fields[CH_RHO].values,
        q_values=fields[CH_Q].values,
        tilde_q_values=tq,
        coords=coords,
    )


def direct_solve_conservative(problem: EllipticProblem1D, fields) -> np.ndarray:
    """Independent oracle: conservative three-point solve of the raw problem."""
    a_vals = coefficient_values(problem, fields[CH_B].values)
    rho = problem.rho_bar + fields[CH_RHO].values
    pot = problem.q0 + fields[CH_Q].values
    ab = conservative_matrix_banded(problem.mesh, a_vals, pot)
    try:
        interior = solveh_banded(ab, (rho * problem.f)[1:-1])
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular conservative system") from exc
    out = np.zeros(problem.mesh.n_nodes)
    out[1:-1] = interior
    return out


def corrector(problem: EllipticProblem1D, solution: EllipticSolution) -> np.ndarray:
    """(u_eps - u0) / sqrt(epsilon) at the mesh nodes."""
    return (solution.u_eps - solution.u0) / math.sqrt(problem.epsilon)


# --- corrector kernels and the limit law ---


def _partial_arrays(kern: GreenKernel1D, x: float, y: np.ndarray):
    """dG/dx, dG/dy, dG/dL at fixed x over the y grid, for both branches.

    Returns (dx_lo, dy_lo, dx_hi, dy_hi, dL): the *_lo arrays hold the
    y < x branch, the *_hi arrays the y > x branch; dL is continuous.
    """
    a, L, q0 = kern.a_star, kern.L, kern.q0
    if q0 == 0.0:
        dx_lo = -y / (a * L)
        dy_lo = np.full_like(y, (L - x) / (a * L), dtype=float)
        dx_hi = (L - y) / (a * L)
        dy_hi = np.full_like(y, -x / (a * L), dtype=float)
        dL = np.minimum(x, y) * np.maximum(x, y) / (a * L * L)
        return dx_lo, dy_lo, dx_hi, dy_hi, dL
    k = kern.kappa
    s = math.sinh(k * L)
    # y < x: lo = y, hi = x
    dx_lo = -np.sinh(k * y) * math.cosh(k * (L - x)) / (a * s)
    dy_lo = np.cosh(k * y) * math.sinh(k * (L - x)) / (a * s)
    # y > x: lo = x, hi = y
    dx_hi = math.cosh(k * x) * np.sinh(k * (L - y)) / (a * s)
    dy_hi = -math.sinh(k * x) * np.cosh(k * (L - y)) / (a * s)
    lo = np.minimum(x, y)
    hi = np.maximum(x, y)
    dL = np.sinh(k * lo) * np.sinh(k * hi) / (a * s * s)
    return dx_lo, dy_lo, dx_hi, dy_hi, dL


def _split_trapezoid(values: np.ndarray, h: float, i: int):
    """Trapezoid of a two-branch integrand split at node i.

    values is a pair (branch for y <= x_i, branch for y >= x_i); both are
    full-grid arrays, only the relevant halves are read.
    """
    below, above = values
    n = below.size
    total = 0.0
    if i > 0:
        seg = below[: i + 1]
        total += h * (np.sum(seg) - 0.5 * (seg[0] + seg[-1]))
    if i < n - 1:
        seg = above[i:]
        total += h * (np.sum(seg) - 0.5 * (seg[0] + seg[-1]))
    return total


@dataclass(eq=False)
class CorrectorKernels:
    """Kernels H_b, H_rho, H_q on (x probe nodes) x (t mesh nodes).

    H_b(x, t) = chi(t < x) jump_coeff(x) + smooth(x, t); the indicator
    vanishes at t = x, matching chi_x(t) = 1 on 0 < t < x.
    """

    x_nodes: np.ndarray
    t_nodes: np.ndarray
    jump_coeff: np.ndarray  # chi_x coefficient, one entry per probe
    smooth: np.ndarray  # Lipschitz part of H_b
    H_rho: np.ndarray
    H_q: np.ndarray

    @property
    def H_b(self) -> np.ndarray:
        chi = (self.t_nodes[None, :] < self.x_nodes[:, None]).astype(float)
        return chi * self.jump_coeff[:, None] + self.smooth

    def h_b_sided(self, row: int, i: int):
        """One-sided values of H_b at t = x for the probe `row` (t -> x-, t -> x+)."""
        s = self.smooth[row, i]
        return s + self.jump_coeff[row], s


def _probe_indices(mesh: Mesh1D, x_nodes) -> np.ndarray:
    xs = np.asarray(x_nodes, dtype=float)
    idx = np.rint(xs / mesh.h).astype(int)
    if np.any(np.abs(mesh.nodes[idx] - xs) > 1e-9):
        raise ValueError("probe points must be mesh nodes")
    return idx


def corrector_kernels(problem: EllipticProblem1D, x_nodes=None) -> CorrectorKernels:
    """Materialize H_b, H_rho, H_q at probe rows (default: every mesh node).

    The y-quadratures defining H_b are split at y = x with one-sided kernel
    derivatives on each subinterval, so the assembly is second order despite
    the derivative jumps across the diagonal.
    """
    mesh = problem.mesh
    if x_nodes is None:
        x_nodes = mesh.nodes
    idx = _probe_indices(mesh, x_nodes)
    xs = mesh.nodes[idx]
    t = mesh.nodes
    h = mesh.h
    kern = GreenKernel1D(a_star(problem), problem.q0, mesh.length)
    rf = problem.rho_bar * problem.f
    n = mesh.n_nodes
    m = idx.size
    jump = np.empty(m)
    smooth = np.empty((m, n))
    H_rho = np.empty((m, n))
    H_q = np.empty((m, n))
    # u0(t) = int G(t,z) rho_bar f(z) dz enters H_q
    u0 = solve_homogenized(problem)
    for r, (i, x) in enumerate(zip(idx, xs)):
        dx_lo, dy_lo, dx_hi, dy_hi, dL = _partial_arrays(kern, float(x), t)
        jump[r] = _split_trapezoid((dx_lo * rf, dx_hi * rf), h, i)
        # B(x, t) = int_t^1 dG/dy(x,y) rho_bar f(y) dy, split at y = x
        g_lo = dy_lo * rf
        g_hi = dy_hi * rf
        cum_lo = cumulative_trapezoid(g_lo, t, initial=0.0)
        cum_hi = cumulative_trapezoid(g_hi, t, initial=0.0)
        tail_hi = cum_hi[-1] - cum_hi  # int_t^1 of the upper branch
        b_vals = np.where(
            np.arange(n) >= i,
            tail_hi,
            (cum_lo[i] - cum_lo) + tail_hi[i],
        )
        c_val = _split_trapezoid((dL * rf, dL * rf), h, i)
        smooth[r] = b_vals + c_val
        g_row = eval_green_1d(kern, float(x), t)
        H_rho[r] = g_row * problem.f
        H_q[r] = g_row * u0
    return CorrectorKernels(
        x_nodes=xs, t_nodes=t, jump_coeff=jump, smooth=smooth, H_rho=H_rho, H_q=H_q
    )


@dataclass(eq=False)
class EllipticLimitLaw:
    """Gaussian limit of (u_eps - u0)/sqrt(eps): correlated-BM decomposition."""

    x_nodes: np.ndarray
    sigma_b: np.ndarray
    sigma_rho: np.ndarray
    sigma_q: np.ndarray
    rho_jk: np.ndarray
    variance_fn: np.ndarray

    def variance_at(self, x: float) -> float:
        pos = np.nonzero(np.abs(self.x_nodes - x) <= 1e-9)[0]
        if pos.size == 0:
            raise ValueError("x is not a probe node of this law")
        return float(self.variance_fn[pos[0]])


def driver_covariance(problem: EllipticProblem1D) -> np.ndarray:
    """Integrated covariance matrix of the drivers (b, delta rho, -tilde q).

    -tilde q = q0 b - q, so the matrix is T S T^t with S the integrated
    cross-covariances of the sampled triple.
    """
    s = randfield.sigma_matrix(problem.triple_spec)
    t = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [problem.q0, 0.0, -1.0]])
    return t @ s @ t.T


def _correlation(cov: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.diag(cov))
    out = np.eye(cov.shape[0])
    for i in range(cov.shape[0]):
        for j in range(cov.shape[0]):
            if i != j:
                # zero-variance drivers get correlation 0 by convention
                out[i, j] = cov[i, j] / (d[i] * d[j]) if d[i] > 0 and d[j] > 0 else 0.0
    return out


def limit_law(problem: EllipticProblem1D, x_nodes=None) -> EllipticLimitLaw:
    """Assemble the limiting variance function and its BM decomposition.

    variance_fn(x) = int_0^1 v(x,t)^t S v(x,t) dt with v = (H_b, H_rho, H_q)
    and S the driver covariance above; the t-quadrature is split at t = x
    where H_b jumps.
    """
    kernels = corrector_kernels(problem, x_nodes)
    cov = driver_covariance(problem)
    corr = _correlation(cov)
    sd = np.sqrt(np.diag(cov))
    mesh = problem.mesh
    idx = _probe_indices(mesh, kernels.x_nodes)
    m = idx.size
    var = np.empty(m)
    hb = kernels.H_b
    for r in range(m):
        i = int(idx[r])
        rows = np.vstack([hb[r], kernels.H_rho[r], kernels.H_q[r]])
        vals = np.einsum("jt,jk,kt->t", rows, cov, rows)
        left_hb, right_hb = kernels.h_b_sided(r, i)
        v_left = np.array([left_hb, kernels.H_rho[r, i], kernels.H_q[r, i]])
        v_right = np.array([right_hb, kernels.H_rho[r, i], kernels.H_q[r, i]])
        below = vals.copy()
        below[i] = v_left @ cov @ v_left
        above = vals.copy()
        above[i] = v_right @ cov @ v_right
        var[r] = _split_trapezoid((below, above), mesh.h, i)
    return EllipticLimitLaw(
        x_nodes=kernels.x_nodes,
        sigma_b=sd[0] * hb,
        sigma_rho=sd[1] * kernels.H_rho,
        sigma_q=sd[2] * kernels.H_q,
        rho_jk=corr,
        variance_fn=var,
    )
