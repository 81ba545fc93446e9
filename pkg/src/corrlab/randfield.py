"""Stationary moving-average random fields with exact second-order statistics.

A field value at position y is a finite weighted sum of iid bounded lattice
noise variables, with the lattice shifted by a uniform random phase drawn once
per realization.  The construction is strictly stationary, has a closed-form
piecewise-linear correlation function, a closed-form integrated correlation,
and exactly vanishing correlations beyond a finite range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

_MAX_LATTICE_SITES = 1 << 26
_FLOAT_INDEX_LIMIT = 2.0**52


class LatticeRangeError(ValueError):
    """Raised when a requested mesh needs an unrepresentable lattice block."""


@dataclass(frozen=True)
class MarginalDist:
    """Marginal law of the lattice noise: bounded, mean zero, known variance."""

    kind: str
    bound: float = 1.0

    _KINDS = ("rademacher", "uniform_pm1", "truncated_gaussian")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown marginal kind {self.kind!r}")
        if self.kind == "truncated_gaussian" and not self.bound > 0:
            raise ValueError("truncation bound must be positive")

    @classmethod
    def rademacher(cls) -> "MarginalDist":
        return cls("rademacher")

    @classmethod
    def uniform_pm1(cls) -> "MarginalDist":
        return cls("uniform_pm1")

    @classmethod
    def truncated_gaussian(cls, bound: float) -> "MarginalDist":
        return cls("truncated_gaussian", bound=float(bound))

    @property
    def variance(self) -> float:
        if self.kind == "rademacher":
            return 1.0
        if self.kind == "uniform_pm1":
            return 1.0 / 3.0
        b = self.bound
        # standard normal restricted to [-b, b]
        phi = math.exp(-0.5 * b * b) / math.sqrt(2.0 * math.pi)
        mass = 2.0 * ndtr(b) - 1.0
        return 1.0 - 2.0 * b * phi / mass

    @property
    def abs_bound(self) -> float:
        return 1.0 if self.kind in ("rademacher", "uniform_pm1") else self.bound

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind == "rademacher":
            return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
        if self.kind == "uniform_pm1":
            return rng.uniform(-1.0, 1.0, size=shape)
        b = self.bound
        lo = ndtr(-b)
        hi = ndtr(b)
        u = rng.random(size=shape)
        return ndtri(lo + u * (hi - lo))

    def to_json(self):
        if self.kind == "truncated_gaussian":
            return {"kind": self.kind, "bound": self.bound}
        return self.kind

    @classmethod
    def from_json(cls, obj) -> "MarginalDist":
        if isinstance(obj, str):
            return cls(obj)
        return cls(obj["kind"], bound=float(obj.get("bound", 1.0)))


@dataclass(frozen=True)
class MAProcessSpec:
    """Scalar moving-average field: amplitude * sum_k w_k xi_{k + floor(y + U)}."""

    weights: tuple
    marginal: MarginalDist = field(default_factory=MarginalDist.rademacher)
    amplitude: float = 1.0

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if len(w) == 0:
            raise ValueError("weights must be nonempty")
        if not all(math.isfinite(v) for v in w):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "weights", w)

    @property
    def window(self) -> int:
        return len(self.weights)

    @property
    def abs_bound(self) -> float:
        """Deterministic bound on |field|: amplitude * bound(xi) * sum|w|."""
        return abs(self.amplitude) * self.marginal.abs_bound * float(
            np.sum(np.abs(self.weights))
        )

    def to_json(self):
        return {
            "weights": list(self.weights),
            "marginal": self.marginal.to_json(),
            "amplitude": self.amplitude,
        }

    @classmethod
    def from_json(cls, obj) -> "MAProcessSpec":
        return cls(
            weights=tuple(obj["weights"]),
            marginal=MarginalDist.from_json(obj.get("marginal", "rademacher")),
            amplitude=float(obj.get("amplitude", 1.0)),
        )


@dataclass(frozen=True)
class CorrelatedTripleSpec:
    """Three jointly stationary fields driven by one multichannel lattice noise.

    Each component j has a weight matrix of shape (n_channels, window_j); the
    channels are iid noise sequences shared by all components, so integrated
    cross-correlations are inner products of the per-channel weight sums.
    """

    weights: tuple  # three 2D arrays (channels x lags), same channel count
    marginal: MarginalDist = field(default_factory=MarginalDist.rademacher)
    amplitudes: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if len(self.weights) != 3:
            raise ValueError("need exactly three weight matrices")
        mats = tuple(np.atleast_2d(np.asarray(w, dtype=float)) for w in self.weights)
        channels = {m.shape[0] for m in mats}
        if len(channels) != 1:
            raise ValueError("components must share the channel count")
        for m in mats:
            if m.shape[1] == 0 or not np.all(np.isfinite(m)):
                raise ValueError("weight matrices must be nonempty and finite")
        object.__setattr__(self, "weights", mats)
        object.__setattr__(
            self, "amplitudes", tuple(float(a) for a in self.amplitudes)
        )

    @property
    def n_channels(self) -> int:
        return self.weights[0].shape[0]

    def window(self, j: int) -> int:
        return self.weights[j].shape[1]

    def component_bound(self, j: int) -> float:
        return abs(self.amplitudes[j]) * self.marginal.abs_bound * float(
            np.sum(np.abs(self.weights[j]))
        )

    def to_json(self):
        return {
            "weights": [np.asarray(w).tolist() for w in self.weights],
            "marginal": self.marginal.to_json(),
            "amplitudes": list(self.amplitudes),
        }

    @classmethod
    def from_json(cls, obj) -> "CorrelatedTripleSpec":
        return cls(
            weights=tuple(obj["weights"]),
            marginal=MarginalDist.from_json(obj.get("marginal", "rademacher")),
            amplitudes=tuple(obj.get("amplitudes", (1.0, 1.0, 1.0))),
        )


@dataclass(frozen=True)
class FieldRealization:
    """One sampled field: node values plus the randomness that produced them."""

    epsilon: float
    values: np.ndarray
    seed: int
    phase: np.ndarray


def autocovariance_lattice(spec: MAProcessSpec, n: int) -> float:
    """Lattice autocovariance C(n) = amp^2 Var(xi) sum_k w_k w_{k+n}."""
    w = np.asarray(spec.weights)
    n = abs(int(n))
    if n >= len(w):
        return 0.0
    overlap = float(np.dot(w[: len(w) - n], w[n:]))
    return spec.amplitude**2 * spec.marginal.variance * overlap


def correlation(spec: MAProcessSpec, tau: float) -> float:
    """Continuum correlation R(tau): linear interpolation of the lattice values."""
    t = abs(float(tau))
    n = int(math.floor(t))
    f = t - n
    return (1.0 - f) * autocovariance_lattice(spec, n) + f * autocovariance_lattice(
        spec, n + 1
    )


def sigma2(spec: MAProcessSpec) -> float:
    """Integrated correlation int R = amp^2 Var(xi) (sum_k w_k)^2."""
    s = float(np.sum(spec.weights))
    return spec.amplitude**2 * spec.marginal.variance * s * s


def mixing_range(spec) -> float:
    """Separation beyond which field values are exactly decorrelated.

    The dependence window of floor(y + U) spans at most window + 1 lattice
    cells, so r0 = window + 1 for a scalar spec and the largest component
    window + 1 for a triple.
    """
    if isinstance(spec, CorrelatedTripleSpec):
        return float(max(spec.window(j) for j in range(3)) + 1)
    return float(spec.window + 1)


def cross_autocovariance_lattice(
    spec: CorrelatedTripleSpec, j: int, k: int, n: int
) -> float:
    """Lattice cross-covariance C_jk(n) = E p_j(y) p_k(y + n) on integer lags."""
    wj = spec.weights[j]
    wk = spec.weights[k]
    n = int(n)
    if n < 0:
        return cross_autocovariance_lattice(spec, k, j, -n)
    if n >= wk.shape[1]:
        total = 0.0
    else:
        m = min(wj.shape[1], wk.shape[1] - n)
        total = float(np.sum(wj[:, :m] * wk[:, n : n + m]))
    return spec.amplitudes[j] * spec.amplitudes[k] * spec.marginal.variance * total


def cross_correlation(spec: CorrelatedTripleSpec, j: int, k: int, tau: float) -> float:
    """Continuum cross-correlation R_jk(tau) = E p_j(y) p_k(y + tau)."""
    t = float(tau)
    if t < 0:
        return cross_correlation(spec, k, j, -t)
    n = int(math.floor(t))
    f = t - n
    return (1.0 - f) * cross_autocovariance_lattice(spec, j, k, n) + (
        f
    ) * cross_autocovariance_lattice(spec, j, k, n + 1)


def cross_sigma(spec: CorrelatedTripleSpec, j: int, k: int) -> float:
    """Integrated cross-correlation int R_jk = Var(xi) <channel sums_j, channel sums_k>."""
    vj = np.sum(spec.weights[j], axis=1)
    vk = np.sum(spec.weights[k], axis=1)
    return (
        spec.amplitudes[j]
        * spec.amplitudes[k]
        * spec.marginal.variance
        * float(np.dot(vj, vk))
    )


def sigma_matrix(spec: CorrelatedTripleSpec) -> np.ndarray:
    """3x3 matrix of integrated cross-correlations."""
    return np.array(
        [[cross_sigma(spec, j, k) for k in range(3)] for j in range(3)]
    )


def rho_matrix(spec: CorrelatedTripleSpec) -> np.ndarray:
    """Correlation matrix of the limiting driving noises.

    A component with zero integrated correlation gets zero off-diagonal
    entries (its limit contribution vanishes) and a unit diagonal.
    """
    s = sigma_matrix(spec)
    d = np.sqrt(np.diag(s))
    rho = np.eye(3)
    for j in range(3):
        for k in range(3):
            if j != k and d[j] > 0 and d[k] > 0:
                rho[j, k] = s[j, k] / (d[j] * d[k])
    return rho


def _lattice_block(points_over_eps: np.ndarray, window: int):
    """Integer window indices plus block size; guards index overflow."""
    if points_over_eps.size and np.max(np.abs(points_over_eps)) >= _FLOAT_INDEX_LIMIT:
        raise LatticeRangeError("lattice range overflow")
    m = np.floor(points_over_eps).astype(np.int64)
    m_min = int(m.min())
    m_max = int(m.max())
    count = m_max - m_min + window
    if count > _MAX_LATTICE_SITES:
        raise LatticeRangeError("lattice range overflow")
    return m - m_min, count


def sample_at(
    spec: MAProcessSpec, epsilon: float, points: np.ndarray, seed: int
) -> FieldRealization:
    """Sample the field q(x/epsilon) at arbitrary points, reproducibly.

    The generator draws the phase first, then one contiguous lattice noise
    block, so a given (spec, seed, points, epsilon) always reproduces the
    same values bit for bit.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    pts = np.asarray(points, dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    phase = rng.random()
    idx, count = _lattice_block(pts / epsilon + phase, spec.window)
    noise = spec.marginal.draw(rng, count)
    values = np.zeros(pts.shape, dtype=float)
    for k, w in enumerate(spec.weights):
        values += w * noise[idx + k]
    values *= spec.amplitude
    return FieldRealization(
        epsilon=float(epsilon), values=values, seed=int(seed), phase=np.array([phase])
    )


def sample(spec: MAProcessSpec, epsilon: float, mesh, seed: int) -> FieldRealization:
    """Sample the field on a 1D mesh (see sample_at)."""
    return sample_at(spec, epsilon, mesh.nodes, seed)


def sample_2d(spec: MAProcessSpec, epsilon: float, mesh2d, seed: int) -> FieldRealization:
    """Sample a separable 2D field on a tensor mesh.

    Uses the same lattice construction on the 2D integer lattice with a 2D
    phase; the filter is the outer product of the 1D weight sequence.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    phase = rng.random(2)
    xs = np.asarray(mesh2d.nodes, dtype=float)
    idx_r, count_r = _lattice_block(xs / epsilon + phase[0], spec.window)
    idx_c, count_c = _lattice_block(xs / epsilon + phase[1], spec.window)
    noise = spec.marginal.draw(rng, (count_r, count_c))
    w = np.asarray(spec.weights)
    values = np.zeros((xs.size, xs.size), dtype=float)
    for j, wj in enumerate(w):
        rows = noise[idx_r + j]
        for k, wk in enumerate(w):
            values += (wj * wk) * rows[:, idx_c + k]
    values *= spec.amplitude
    return FieldRealization(
        epsilon=float(epsilon), values=values, seed=int(seed), phase=phase
    )


def sample_triple(
    spec: CorrelatedTripleSpec, epsilon: float, points: np.ndarray, seed: int
):
    """Sample the three correlated fields at shared points.

    Returns a tuple of three FieldRealization objects sharing one phase and
    one underlying multichannel noise block.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    pts = np.asarray(getattr(points, "nodes", points), dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    phase = rng.random()
    w_max = max(spec.window(j) for j in range(3))
    idx, count = _lattice_block(pts / epsilon + phase, w_max)
    noise = spec.marginal.draw(rng, (spec.n_channels, count))
    out = []
    for j in range(3):
        wj = spec.weights[j]
        values = np.zeros(pts.shape, dtype=float)
        for c in range(wj.shape[0]):
            row = noise[c]
            for k in range(wj.shape[1]):
                if wj[c, k] != 0.0:
                    values += wj[c, k] * row[idx + k]
        values *= spec.amplitudes[j]
        out.append(
            FieldRealization(
                epsilon=float(epsilon),
                values=values,
                seed=int(seed),
                phase=np.array([phase]),
            )
        )
    return tuple(out)
