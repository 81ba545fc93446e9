"""Experiment catalog: validated configs, realization tasks, report grading.

Each experiment kind maps one JSON config to ensemble runs and deterministic
side computations, then grades the outcome against thresholds carried in the
config itself. Threshold defaults equal the package acceptance values, so CI
can drive the acceptance suite through `run_experiment` directly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import asymptotics, elliptic, ensemble, helmholtz, randfield, spectral
from .greens import Mesh1D, Mesh2D

VERSION = "corrlab-0.1.0"


class ConfigError(ValueError):
    """Invalid experiment config; `field` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field {field_name!r}: {message}")
        self.field = field_name


# --- config validation helpers ---


def _merge(defaults: dict, user: dict, prefix: str = "") -> dict:
    out = {}
    for key, dval in defaults.items():
        if key in user:
            uval = user[key]
            if isinstance(dval, dict) and isinstance(uval, dict):
                out[key] = _merge(dval, uval, prefix + key + ".")
            else:
                out[key] = uval
        else:
            out[key] = dval
    for key in user:
        if key not in defaults:
            raise ConfigError(prefix + key, "unknown field")
    return out


def _number(cfg, key, lo=None, hi=None, lo_open=False, hi_open=False):
    val = cfg
    for part in key.split("."):
        val = val[part]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(key, "must be a number")
    val = float(val)
    if not math.isfinite(val):
        raise ConfigError(key, "must be finite")
    if lo is not None and (val < lo or (lo_open and val == lo)):
        raise ConfigError(key, f"must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and (val > hi or (hi_open and val == hi)):
        raise ConfigError(key, f"must be {'<' if hi_open else '<='} {hi}")
    return val


def _integer(cfg, key, lo=None, hi=None):
    val = cfg
    for part in key.split("."):
        val = val[part]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(key, "must be an integer")
    if lo is not None and val < lo:
        raise ConfigError(key, f"must be >= {lo}")
    if hi is not None and val > hi:
        raise ConfigError(key, f"must be <= {hi}")
    return val


def _eps_list(cfg, key):
    val = cfg
    for part in key.split("."):
        val = val[part]
    if not isinstance(val, list) or len(val) == 0:
        raise ConfigError(key, "must be a nonempty list")
    eps = []
    for e in val:
        if isinstance(e, bool) or not isinstance(e, (int, float)):
            raise ConfigError(key, "entries must be numbers")
        e = float(e)
        if not (math.isfinite(e) and e > 0):
            raise ConfigError(key, "epsilon values must be positive")
        eps.append(e)
    if any(b >= a for a, b in zip(eps[:-1], eps[1:])):
        raise ConfigError(key, "must be strictly decreasing")
    return eps


def _choice(cfg, key, options):
    val = cfg
    for part in key.split("."):
        val = val[part]
    if val not in options:
        raise ConfigError(key, f"must be one of {sorted(options)}")
    return val


def _field_spec(cfg, key):
    val = cfg
    for part in key.split("."):
        val = val[part]
    try:
        return randfield.MAProcessSpec.from_json(val)
    except Exception as exc:
        raise ConfigError(key, str(exc)) from exc


def _triple_spec(cfg, key):
    val = cfg
    for part in key.split("."):
        val = val[part]
    try:
        return randfield.CorrelatedTripleSpec.from_json(val)
    except Exception as exc:
        raise ConfigError(key, str(exc)) from exc


def _probe_list(cfg, key):
    val = cfg
    for part in key.split("."):
        val = val[part]
    if not isinstance(val, list):
        raise ConfigError(key, "must be a list")
    out = []
    for x in val:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError(key, "entries must be numbers")
        x = float(x)
        if not 0.0 < x < 1.0:
            raise ConfigError(key, "probe points must lie inside (0, 1)")
        out.append(x)
    return out


_PROFILES = ("one", "sine", "parabola")


def source_profile(kind: str, x: np.ndarray) -> np.ndarray:
    """Named 1D node profile used for sources, moments, and initial data."""
    if kind == "one":
        return np.ones_like(x)
    if kind == "sine":
        return np.sin(np.pi * x)
    if kind == "parabola":
        return x * (1.0 - x)
    raise ValueError(f"unknown profile {kind!r}")


def source_profile_2d(kind: str, mesh2d: Mesh2D) -> np.ndarray:
    if kind == "one":
        return np.ones((mesh2d.n_nodes, mesh2d.n_nodes))
    if kind == "sine":
        s = np.sin(np.pi * mesh2d.nodes)
        return np.outer(s, s)
    raise ValueError(f"unknown profile {kind!r}")


def aligned_mesh(epsilon: float, nodes_per_eps: int) -> Mesh1D:
    """Mesh with h = epsilon / nodes_per_eps (rounded up if not integral)."""
    cells = nodes_per_eps / epsilon
    n = int(round(cells))
    if abs(cells - n) > 1e-9 * max(1.0, cells):
        n = int(math.ceil(cells))
    return Mesh1D(n + 1)


def _node_index(mesh: Mesh1D, x: float) -> int:
    i = int(round(x / mesh.h))
    if abs(mesh.nodes[i] - x) > 1e-9:
        raise ValueError(f"probe {x!r} is not a mesh node")
    return i


def _probe_name(x: float) -> str:
    return "corr_" + repr(float(x))


# --- realization tasks (module level so worker processes can pickle them) ---


def field_stats_task(params: dict, epsilon: float, seed: int) -> dict:
    """Point statistics plus an exact-in-expectation integrated-covariance probe."""
    spec = randfield.MAProcessSpec.from_json(params["field"])
    n_sub = 8  # lag subdivisions per lattice unit
    reach = int(math.ceil(randfield.mixing_range(spec)))
    lags = np.arange(-n_sub * reach, n_sub * reach + 1) / n_sub
    pts = params["probe"] + epsilon * lags
    vals = randfield.sample_at(spec, epsilon, pts, seed).values
    center = float(vals[n_sub * reach])
    # sum R(k/8)/8 telescopes to int R exactly: R is piecewise linear with
    # integer knots and vanishes beyond the mixing range
    sig = center * float(np.sum(vals)) / n_sub
    bound = spec.abs_bound + 1e-12
    return {
        "point_value": center,
        "point_square": center * center,
        "sigma2_sample": sig,
        "count_bound_violation": float(np.any(np.abs(vals) > bound)),
    }


def _helm_problem(params: dict, epsilon: float) -> helmholtz.HelmholtzProblem:
    spec = randfield.MAProcessSpec.from_json(params["field"])
    mesh = aligned_mesh(epsilon, params["nodes_per_eps"])
    f = source_profile(params["f"], mesh.nodes)
    return helmholtz.HelmholtzProblem(
        mesh,
        params["a_star"],
        params["q0"],
        spec,
        f,
        epsilon,
        alpha=params["alpha"],
        truncation_rho=params["truncation_rho"],
    )


def helmholtz_corrector_task(params: dict, epsilon: float, seed: int) -> dict:
    prob = _helm_problem(params, epsilon)
    sol = helmholtz.perturbed_solve(prob, seed, tol=params["tol"])
    c = helmholtz.corrector(prob, sol)
    mesh = prob.mesh
    diff = sol.u_eps - sol.u0
    out = {
        "norm_sq": float(np.sum(mesh.quad_weights * diff * diff)),
        "iterations": float(sol.iterations),
        "count_truncated": float(sol.truncated),
    }
    for x in params["probes"]:
        out[_probe_name(x)] = float(c[_node_index(mesh, x)])
    if params["moments"]:
        mset = helmholtz.MomentSet(
            tuple(source_profile(mk, mesh.nodes) for mk in params["moments"])
        )
        for i, v in enumerate(helmholtz.moment_functionals(prob, mset, sol)):
            out[f"moment_{i}"] = float(v)
    return out


def helmholtz_moments_2d_task(params: dict, epsilon: float, seed: int) -> dict:
    spec = randfield.MAProcessSpec.from_json(params["field"])
    cells = aligned_mesh(epsilon, params["nodes_per_eps"]).n_nodes - 1
    mesh2 = Mesh2D(cells + 1)
    f = source_profile_2d(params["f"], mesh2)
    prob = helmholtz.Helmholtz2DProblem(
        mesh2,
        params["q0"],
        spec,
        f,
        epsilon,
        alpha=params["alpha"],
        truncation_rho=params["truncation_rho"],
    )
    sol = helmholtz.perturbed_solve_2d(prob, seed, tol=params["tol"])
    diff = sol.u_eps - sol.u0
    out = {
        "norm_sq": mesh2.inner(diff, diff),
        "iterations": float(sol.iterations),
        "count_truncated": float(sol.truncated),
    }
    mset = helmholtz.MomentSet(
        tuple(source_profile_2d(mk, mesh2) for mk in params["moments"])
    )
    for i, v in enumerate(helmholtz.moment_functionals_2d(prob, mset, sol)):
        out[f"moment_{i}"] = float(v)
    return out


def _elliptic_problem(params: dict, epsilon: float) -> elliptic.EllipticProblem1D:
    spec = randfield.CorrelatedTripleSpec.from_json(params["triple"])
    mesh = aligned_mesh(epsilon, params["nodes_per_eps"])
    f = source_profile(params["f"], mesh.nodes)
    return elliptic.EllipticProblem1D(
        mesh,
        spec,
        params["q0"],
        params["rho_bar"],
        f,
        epsilon,
        a_base=params["a_base"],
        truncation_rho=params["truncation_rho"],
    )


def elliptic_corrector_task(params: dict, epsilon: float, seed: int) -> dict:
    prob = _elliptic_problem(params, epsilon)
    sol = elliptic.solve_transformed(prob, seed, tol=params["tol"])
    c = elliptic.corrector(prob, sol)
    mesh = prob.mesh
    diff = sol.u_eps - sol.u0
    out = {
        "norm_sq": float(np.sum(mesh.quad_weights * diff * diff)),
        "iterations": float(sol.iterations),
        "count_truncated": float(sol.truncated),
    }
    for x in params["probes"]:
        out[_probe_name(x)] = float(c[_node_index(mesh, x)])
    return out


def spectral_corrector_task(params: dict, epsilon: float, seed: int) -> dict:
    prob = _helm_problem(params, epsilon)
    sr = spectral.spectral_realization(prob, seed, params["n_pairs"])
    out = {"count_flagged": float(sr.match.any_violation)}
    for n in params["modes"]:
        out[f"inv_eig_{n}"] = sr.inverse_eigenvalue_corrector(n)
        out[f"eig_{n}"] = sr.eigenvalue_corrector(n)
        out[f"defect_{n}"] = sr.diagonal_defect(n)
    n, m = params["fourier_pair"]
    out[f"fourier_{n}_{m}"] = sr.fourier_corrector(n, m)
    return out


def heat_corrector_task(params: dict, epsilon: float, seed: int) -> dict:
    prob = _helm_problem(params, epsilon)
    sr = spectral.spectral_realization(prob, seed, params["n_pairs"])
    v0 = source_profile(params["v0"], prob.mesh.nodes)
    direct, surrogate = sr.heat_corrector(
        params["mode"], params["time"], v0, params["epsilon_const"]
    )
    return {
        "heat_direct": direct,
        "heat_surrogate": surrogate,
        "heat_gap": abs(direct - surrogate),
    }


ensemble.register_task("field-stats", field_stats_task)
ensemble.register_task("helmholtz-corrector", helmholtz_corrector_task)
ensemble.register_task("helmholtz-moments-2d", helmholtz_moments_2d_task)
ensemble.register_task("elliptic-corrector", elliptic_corrector_task)
ensemble.register_task("spectral-corrector", spectral_corrector_task)
ensemble.register_task("heat-corrector", heat_corrector_task)


# --- result container ---


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        # numpy bools are not JSON serializable
        self.passed = bool(self.passed)


@dataclass
class ExperimentResult:
    kind: str
    config: dict
    ensembles: dict  # section name -> EnsembleReport, insertion-ordered
    tables: dict  # deterministic scalar/fit payload for the JSON report
    rows: list  # extra CSV rows: (label, functional, statistic, value)
    checks: list

    @property
    def status(self) -> str:
        if any(rep.status != "ok" for rep in self.ensembles.values()):
            return "error"
        if any(not c.passed for c in self.checks):
            return "fail"
        return "ok"

    def first_failure(self):
        """(seed, message) of the first failed realization, or None."""
        for rep in self.ensembles.values():
            if rep.failures:
                _, _, seed, message = rep.failures[0]
                return seed, message
        return None

    def config_sha256(self) -> str:
        canon = json.dumps(self.config, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def _provenance(self) -> list:
        lines = [
            f"# kind={self.kind}",
            f"# version={VERSION}",
            f"# config_sha256={self.config_sha256()}",
        ]
        for key in ("seed", "n_real", "epsilon_list", "nodes_per_eps", "dimensions"):
            if key in self.config:
                lines.append(f"# {key}={self.config[key]}")
        return lines

    def to_csv(self) -> str:
        lines = self._provenance()
        lines.append(f"# status={self.status}")
        lines.append("epsilon,functional,statistic,value")
        multi = len(self.ensembles) > 1
        for section, rep in self.ensembles.items():
            prefix = f"{section}." if multi else ""
            for k, eps in enumerate(rep.spec.epsilon_list):
                for name, st in sorted(rep.stats[k].items()):
                    for stat_name, value in st.to_dict().items():
                        lines.append(f"{eps!r},{prefix}{name},{stat_name},{value!r}")
                for cname, cval in sorted(rep.counts[k].items()):
                    lines.append(f"{eps!r},{prefix}{cname},count,{cval}")
            for fit_name, fit in sorted(rep.scaling_fits.items()):
                for stat_name, value in sorted(fit.items()):
                    lines.append(f"fit,{prefix}{fit_name},{stat_name},{value!r}")
        for label, name, stat_name, value in self.rows:
            val = repr(float(value)) if isinstance(value, float) else value
            lines.append(f"{label},{name},{stat_name},{val}")
        for c in self.checks:
            lines.append(f"check,{c.name},passed,{int(c.passed)}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "version": VERSION,
            "config": self.config,
            "config_sha256": self.config_sha256(),
            "status": self.status,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
            "ensembles": {
                name: rep.to_json_dict() for name, rep in self.ensembles.items()
            },
            "tables": self.tables,
        }

    def summary_text(self) -> str:
        lines = [
            f"experiment: {self.kind}",
            f"version: {VERSION}",
            f"config sha256: {self.config_sha256()}",
        ]
        for key in ("seed", "n_real", "epsilon_list"):
            if key in self.config:
                lines.append(f"{key}: {self.config[key]}")
        lines.append("")
        for c in self.checks:
            word = "PASS" if c.passed else "FAIL"
            lines.append(f"[{word}] {c.name}: {c.detail}")
        for section, rep in self.ensembles.items():
            if rep.failures:
                k, j, seed, message = rep.failures[0]
                lines.append(
                    f"[ERROR] {section}: {len(rep.failures)} failed realizations, "
                    f"first seed {seed}: {message}"
                )
        lines.append("")
        lines.append(f"overall: {self.status.upper()}")
        return "\n".join(lines) + "\n"


# --- grading helpers ---


def _mean_check(name: str, st, target: float, factor: float) -> Check:
    tol = factor * st.stderr_mean
    err = abs(st.mean - target)
    return Check(
        name,
        err <= tol,
        f"mean={st.mean:.6g} target={target:.6g} |err|={err:.3g} tol={tol:.3g}",
    )


def _var_check(name: str, st, target: float, factor: float) -> Check:
    tol = factor * st.stderr_variance
    err = abs(st.variance - target)
    return Check(
        name,
        err <= tol,
        f"var={st.variance:.6g} target={target:.6g} |err|={err:.3g} tol={tol:.3g}",
    )


def _cov_check(name, xs, ys, target: float, factor: float) -> Check:
    x = np.asarray(xs)
    y = np.asarray(ys)
    n = x.size
    mx, my = float(np.mean(x)), float(np.mean(y))
    cov = float(np.sum((x - mx) * (y - my)) / (n - 1))
    vx = float(np.sum((x - mx) ** 2) / (n - 1))
    vy = float(np.sum((y - my) ** 2) / (n - 1))
    se = math.sqrt(max(vx * vy + cov * cov, 0.0) / max(n - 1, 1))
    err = abs(cov - target)
    tol = factor * se
    return Check(
        name,
        err <= tol,
        f"cov={cov:.6g} target={target:.6g} |err|={err:.3g} tol={tol:.3g}",
    )


def _normality_checks(prefix: str, st, n: int, th: dict) -> list:
    if st.variance <= 0:
        return [Check(f"{prefix}_normality", True, "degenerate sample, skipped")]
    crit = ensemble.ks_critical(n, th["ks_level"])
    return [
        Check(
            f"{prefix}_skew",
            abs(st.skewness) < th["skew_max"],
            f"skew={st.skewness:.4f} bound={th['skew_max']}",
        ),
        Check(
            f"{prefix}_kurtosis",
            abs(st.excess_kurtosis) < th["kurt_max"],
            f"excess kurtosis={st.excess_kurtosis:.4f} bound={th['kurt_max']}",
        ),
        Check(
            f"{prefix}_ks",
            st.ks_statistic < crit,
            f"ks={st.ks_statistic:.4f} critical={crit:.4f}",
        ),
    ]


def _count_fraction_check(name, rep, counter: str, frac_max: float) -> list:
    checks = []
    for k, eps in enumerate(rep.spec.epsilon_list):
        count = rep.counts[k].get(counter, 0)
        frac = count / rep.spec.n_real
        checks.append(
            Check(
                f"{name}[{eps!r}]",
                frac <= frac_max,
                f"{count}/{rep.spec.n_real} flagged, bound {frac_max}",
            )
        )
    return checks


def _norm_slope(rep, functional: str = "norm_sq"):
    """Log-log fit of the ensemble mean of one functional across epsilon."""
    eps = rep.spec.epsilon_list
    means = [
        rep.stats[k][functional].mean if functional in rep.stats[k] else 0.0
        for k in range(len(eps))
    ]
    if len(eps) < 3 or any(m <= 0 for m in means):
        return None
    fit = ensemble.loglog_slope(list(zip(eps, means)))
    rep.scaling_fits[f"{functional}_mean"] = fit.to_dict()
    return fit


# --- experiment kinds ---


def _subset(config: dict, keys) -> dict:
    return {k: config[k] for k in keys}


_DEF_FIELD = {"weights": [0.5, 0.5], "marginal": "rademacher", "amplitude": 1.0}

FIELD_STATS_DEFAULTS = {
    "seed": 20260817,
    "n_real": 400,
    "epsilon_list": [0.1],
    "field": dict(_DEF_FIELD),
    "probe": 0.3,
    "thresholds": {"stderr_factor": 4.0},
}


def _validate_field_stats(cfg):
    _integer(cfg, "seed", lo=0)
    _integer(cfg, "n_real", lo=2)
    _eps_list(cfg, "epsilon_list")
    _field_spec(cfg, "field")
    _number(cfg, "probe")
    _number(cfg, "thresholds.stderr_factor", lo=0, lo_open=True)


def _run_field_stats(config, workers):
    spec = randfield.MAProcessSpec.from_json(config["field"])
    es = ensemble.EnsembleSpec(
        config["seed"],
        config["n_real"],
        config["epsilon_list"],
        "field-stats",
        _subset(config, ("field", "probe")),
    )
    rep = ensemble.run(es, workers=workers, version=VERSION)
    sf = config["thresholds"]["stderr_factor"]
    s2 = randfield.sigma2(spec)
    r0 = randfield.correlation(spec, 0.0)
    rows, checks = [], []
    for k, eps in enumerate(es.epsilon_list):
        st = rep.stats[k]
        rows.append((repr(eps), "sigma2_sample", "analytic", float(s2)))
        rows.append((repr(eps), "point_square", "analytic", float(r0)))
        rows.append((repr(eps), "point_value", "analytic", 0.0))
        checks.append(_mean_check(f"sigma2[{eps!r}]", st["sigma2_sample"], s2, sf))
        checks.append(_mean_check(f"point_var[{eps!r}]", st["point_square"], r0, sf))
        checks.append(_mean_check(f"mean_zero[{eps!r}]", st["point_value"], 0.0, sf))
    checks.extend(_count_fraction_check("bound", rep, "count_bound_violation", 0.0))
    tables = {"sigma2_analytic": s2, "lag0_covariance_analytic": r0}
    return ExperimentResult("field-stats", config, {"main": rep}, tables, rows, checks)


HELM_DEFAULTS = {
    "seed": 20260817,
    "n_real": 200,
    "epsilon_list": [0.02, 0.01],
    "field": dict(_DEF_FIELD),
    "a_star": 1.0,
    "q0": 0.0,
    "f": "one",
    "alpha": 0.0,
    "truncation_rho": 0.5,
    "nodes_per_eps": 8,
    "tol": 1e-10,
    "probes": [0.25, 0.5, 0.75],
    "moments": ["one"],
    "normality_checks": False,
    "thresholds": {
        "stderr_factor": 4.0,
        "slope_lo": 0.85,
        "slope_hi": 1.15,
        "exponent_tol": 0.1,
        "skew_max": 0.15,
        "kurt_max": 0.3,
        "ks_level": 0.01,
        "trunc_frac_max": 0.01,
    },
}


def _validate_helm_common(cfg):
    _integer(cfg, "seed", lo=0)
    _integer(cfg, "n_real", lo=2)
    _eps_list(cfg, "epsilon_list")
    _field_spec(cfg, "field")
    _number(cfg, "q0", lo=0)
    _choice(cfg, "f", _PROFILES)
    _number(cfg, "alpha", lo=0, hi=0.25, hi_open=True)
    _number(cfg, "truncation_rho", lo=0, hi=1, lo_open=True, hi_open=True)
    _integer(cfg, "nodes_per_eps", lo=2)
    _number(cfg, "tol", lo=0, lo_open=True)
    _number(cfg, "thresholds.stderr_factor", lo=0, lo_open=True)


def _validate_helmholtz_corrector(cfg):
    _validate_helm_common(cfg)
    _number(cfg, "a_star", lo=0, lo_open=True)
    _probe_list(cfg, "probes")
    for mk in cfg["moments"]:
        if mk not in _PROFILES:
            raise ConfigError("moments", f"must use profiles from {sorted(_PROFILES)}")
    if not isinstance(cfg["normality_checks"], bool):
        raise ConfigError("normality_checks", "must be a boolean")


def _run_helmholtz_corrector(config, workers):
    params = _subset(
        config,
        (
            "field",
            "a_star",
            "q0",
            "f",
            "alpha",
            "truncation_rho",
            "nodes_per_eps",
            "tol",
            "probes",
            "moments",
        ),
    )
    es = ensemble.EnsembleSpec(
        config["seed"], config["n_real"], config["epsilon_list"],
        "helmholtz-corrector", params,
    )
    rep = ensemble.run(es, workers=workers, version=VERSION)
    th = config["thresholds"]
    sf = th["stderr_factor"]
    rows, checks, tables = [], [], {}
    for k, eps in enumerate(es.epsilon_list):
        prob = _helm_problem(params, eps)
        st = rep.stats[k]
        if config["probes"]:
            law = helmholtz.corrector_law_1d(prob, x_nodes=config["probes"])
            for x in config["probes"]:
                name = _probe_name(x)
                target = law.variance_at(x)
                rows.append((repr(eps), name, "analytic_variance", float(target)))
                if name in st:
                    checks.append(
                        _var_check(f"corr_var[{x!r},{eps!r}]", st[name], target, sf)
                    )
                    checks.append(
                        _mean_check(f"corr_mean[{x!r},{eps!r}]", st[name], 0.0, sf)
                    )
        if config["moments"]:
            mset = helmholtz.MomentSet(
                tuple(source_profile(mk, prob.mesh.nodes) for mk in config["moments"])
            )
            cov = helmholtz.moment_covariance(prob, mset)
            n_m = len(config["moments"])
            for i in range(n_m):
                name = f"moment_{i}"
                rows.append((repr(eps), name, "analytic_variance", float(cov[i, i])))
                if name in st:
                    checks.append(
                        _var_check(f"moment_var[{i},{eps!r}]", st[name], cov[i, i], sf)
                    )
                    checks.append(
                        _mean_check(f"moment_mean[{i},{eps!r}]", st[name], 0.0, sf)
                    )
            for i in range(n_m):
                for j in range(i + 1, n_m):
                    xi = rep.samples[k].get(f"moment_{i}", [])
                    xj = rep.samples[k].get(f"moment_{j}", [])
                    if len(xi) > 3:
                        checks.append(
                            _cov_check(
                                f"moment_cov[{i}{j},{eps!r}]", xi, xj, cov[i, j], sf
                            )
                        )
            if config["normality_checks"] and "moment_0" in st:
                checks.extend(
                    _normality_checks(
                        f"moment_0[{eps!r}]", st["moment_0"], st["moment_0"].n, th
                    )
                )
    fit = _norm_slope(rep)
    if fit is not None:
        tables["norm_sq_fit"] = fit.to_dict()
        checks.append(
            Check(
                "norm_sq_slope",
                th["slope_lo"] <= fit.slope <= th["slope_hi"],
                f"slope={fit.slope:.4f} bounds=[{th['slope_lo']},{th['slope_hi']}]",
            )
        )
        # E||u_eps - u0||^2 ~ eps^{d(1-2a)}; the corrector exponent is half that
        target = prob.dimension * (0.5 - config["alpha"])
        checks.append(
            Check(
                "corrector_exponent",
                abs(0.5 * fit.slope - target) <= th["exponent_tol"],
                f"exponent={0.5 * fit.slope:.4f} target={target:.4f} "
                f"tol={th['exponent_tol']}",
            )
        )
    checks.extend(
        _count_fraction_check("truncation", rep, "count_truncated", th["trunc_frac_max"])
    )
    return ExperimentResult(
        "helmholtz-corrector", config, {"main": rep}, tables, rows, checks
    )


HELM2D_DEFAULTS = {
    "seed": 20260817,
    "n_real": 128,
    "epsilon_list": [0.0625],
    "field": dict(_DEF_FIELD),
    "q0": 0.0,
    "f": "one",
    "alpha": 0.0,
    "truncation_rho": 0.5,
    "nodes_per_eps": 8,
    "tol": 1e-10,
    "moments": ["one", "sine"],
    "normality_checks": False,
    "thresholds": {
        "stderr_factor": 4.0,
        "skew_max": 0.15,
        "kurt_max": 0.3,
        "ks_level": 0.01,
        "trunc_frac_max": 0.01,
    },
}


def _validate_helmholtz_moments_2d(cfg):
    _validate_helm_common(cfg)
    if not cfg["moments"]:
        raise ConfigError("moments", "need at least one moment profile")
    for mk in cfg["moments"]:
        if mk not in ("one", "sine"):
            raise ConfigError("moments", "must use profiles from ['one', 'sine']")
    if not isinstance(cfg["normality_checks"], bool):
        raise ConfigError("normality_checks", "must be a boolean")


def _run_helmholtz_moments_2d(config, workers):
    params = _subset(
        config,
        ("field", "q0", "f", "alpha", "truncation_rho", "nodes_per_eps", "tol", "moments"),
    )
    es = ensemble.EnsembleSpec(
        config["seed"], config["n_real"], config["epsilon_list"],
        "helmholtz-moments-2d", params,
    )
    rep = ensemble.run(es, workers=workers, version=VERSION)
    th = config["thresholds"]
    sf = th["stderr_factor"]
    rows, checks, tables = [], [], {}
    spec = randfield.MAProcessSpec.from_json(config["field"])
    tables["sigma2_separable"] = helmholtz.sigma2_separable_2d(spec)
    for k, eps in enumerate(es.epsilon_list):
        cells = aligned_mesh(eps, config["nodes_per_eps"]).n_nodes - 1
        mesh2 = Mesh2D(cells + 1)
        prob = helmholtz.Helmholtz2DProblem(
            mesh2,
            config["q0"],
            spec,
            source_profile_2d(config["f"], mesh2),
            eps,
            alpha=config["alpha"],
            truncation_rho=config["truncation_rho"],
        )
        mset = helmholtz.MomentSet(
            tuple(source_profile_2d(mk, mesh2) for mk in config["moments"])
        )
        cov = helmholtz.moment_covariance_2d(prob, mset)
        st = rep.stats[k]
        n_m = len(config["moments"])
        for i in range(n_m):
            name = f"moment_{i}"
            rows.append((repr(eps), name, "analytic_variance", float(cov[i, i])))
            if name in st:
                checks.append(
                    _var_check(f"moment_var[{i},{eps!r}]", st[name], cov[i, i], sf)
                )
                checks.append(
                    _mean_check(f"moment_mean[{i},{eps!r}]", st[name], 0.0, sf)
                )
        for i in range(n_m):
            for j in range(i + 1, n_m):
                xi = rep.samples[k].get(f"moment_{i}", [])
                xj = rep.samples[k].get(f"moment_{j}", [])
                if len(xi) > 3:
                    checks.append(
                        _cov_check(f"moment_cov[{i}{j},{eps!r}]", xi, xj, cov[i, j], sf)
                    )
        if config["normality_checks"] and "moment_0" in st:
            checks.extend(
                _normality_checks(
                    f"moment_0[{eps!r}]", st["moment_0"], st["moment_0"].n, th
                )
            )
    checks.extend(
        _count_fraction_check("truncation", rep, "count_truncated", th["trunc_frac_max"])
    )
    return ExperimentResult(
        "helmholtz-moments-2d", config, {"main": rep}, tables, rows, checks
    )


_DEF_TRIPLE = {
    # channel 1 drives b and part of drho; channel 2 drives drho and q,
    # so all three pairwise correlations are nontrivial
    "weights": [
        [[0.25, 0.25], [0.0, 0.0]],
        [[0.2, 0.2], [0.2, 0.2]],
        [[0.0, 0.0], [0.5, 0.5]],
    ],
    "marginal": "rademacher",
    "amplitudes": [1.0, 1.0, 1.0],
}

ELLIPTIC_DEFAULTS = {
    "seed": 20260817,
    "n_real": 200,
    "epsilon_list": [0.02],
    "triple": json.loads(json.dumps(_DEF_TRIPLE)),
    "a_base": 1.0,
    "q0": 1.0,
    "rho_bar": 1.0,
    "f": "one",
    "truncation_rho": 0.5,
    "nodes_per_eps": 8,
    "tol": 1e-10,
    "probes": [0.25, 0.5, 0.75],
    "thresholds": {
        "stderr_factor": 4.0,
        "slope_lo": 0.85,
        "slope_hi": 1.15,
        "trunc_frac_max": 0.01,
    },
}


def _validate_elliptic_corrector(cfg):
    _integer(cfg, "seed", lo=0)
    _integer(cfg, "n_real", lo=2)
    _eps_list(cfg, "epsilon_list")
    spec = _triple_spec(cfg, "triple")
    _number(cfg, "a_base", lo=0, lo_open=True)
    _number(cfg, "q0", lo=0)
    _number(cfg, "rho_bar", lo=0, lo_open=True)
    _choice(cfg, "f", _PROFILES)
    _number(cfg, "truncation_rho", lo=0, hi=1, lo_open=True, hi_open=True)
    _integer(cfg, "nodes_per_eps", lo=2)
    _number(cfg, "tol", lo=0, lo_open=True)
    _probe_list(cfg, "probes")
    _number(cfg, "thresholds.stderr_factor", lo=0, lo_open=True)
    if spec.component_bound(elliptic.CH_B) >= 1.0:
        raise ConfigError("triple", "b-component bound must stay below 1")
    if spec.component_bound(elliptic.CH_RHO) >= cfg["rho_bar"]:
        raise ConfigError("triple", "drho-component bound must stay below rho_bar")


def _run_elliptic_corrector(config, workers):
    params = _subset(
        config,
        (
            "triple",
            "a_base",
            "q0",
            "rho_bar",
            "f",
            "truncation_rho",
            "nodes_per_eps",
            "tol",
            "probes",
        ),
    )
    es = ensemble.EnsembleSpec(
        config["seed"], config["n_real"], config["epsilon_list"],
        "elliptic-corrector", params,
    )
    rep = ensemble.run(es, workers=workers, version=VERSION)
    th = config["thresholds"]
    sf = th["stderr_factor"]
    rows, checks, tables = [], [], {}
    for k, eps in enumerate(es.epsilon_list):
        prob = _elliptic_problem(params, eps)
        st = rep.stats[k]
        if config["probes"]:
            law = elliptic.limit_law(prob, x_nodes=config["probes"])
            if k == 0:
                tables["rho_jk"] = law.rho_jk.tolist()
                tables["sigma_b"] = law.sigma_b.tolist()
                tables["sigma_rho"] = law.sigma_rho.tolist()
                tables["sigma_q"] = law.sigma_q.tolist()
            for x in config["probes"]:
                name = _probe_name(x)
                target = law.variance_at(x)
                rows.append((repr(eps), name, "analytic_variance", float(target)))
                if name in st:
                    checks.append(
                        _var_check(f"corr_var[{x!r},{eps!r}]", st[name], target, sf)
                    )
                    checks.append(
                        _mean_check(f"corr_mean[{x!r},{eps!r}]", st[name], 0.0, sf)
                    )
    fit = _norm_slope(rep)
    if fit is not None:
        tables["norm_sq_fit"] = fit.to_dict()
        checks.append(
            Check(
                "norm_sq_slope",
                th["slope_lo"] <= fit.slope <= th["slope_hi"],
                f"slope={fit.slope:.4f} bounds=[{th['slope_lo']},{th['slope_hi']}]",
            )
        )
    checks.extend(
        _count_fraction_check("truncation", rep, "count_truncated", th["trunc_frac_max"])
    )
    return ExperimentResult(
        "elliptic-corrector", config, {"main": rep}, tables, rows, checks
    )


SPECTRAL_DEFAULTS = {
    "seed": 20260817,
    "n_real": 200,
    "epsilon_list": [0.02, 0.01],
    "field": dict(_DEF_FIELD),
    "a_star": 1.0,
    "q0": 0.0,
    "f": "one",
    "alpha": 0.0,
    "truncation_rho": 0.5,
    "nodes_per_eps": 8,
    "tol": 1e-10,
    "n_pairs": 8,
    "modes": [1, 2],
    "fourier_pair": [1, 2],
    "normality_checks": False,
    "thresholds": {
        "stderr_factor": 4.0,
        "skew_max": 0.15,
        "kurt_max": 0.3,
        "ks_level": 0.01,
        "defect_slope_min": 0.8,
        "flag_frac_max": 0.01,
    },
}


def _validate_spectral_corrector(cfg):
    _validate_helm_common(cfg)
    _number(cfg, "a_star", lo=0, lo_open=True)
    _integer(cfg, "n_pairs", lo=1)
    if not isinstance(cfg["modes"], list) or not cfg["modes"]:
        raise ConfigError("modes", "must be a nonempty list of mode indices")
    for n in cfg["modes"]:
        if isinstance(n, bool) or not isinstance(n, int) or not 1 <= n <= cfg["n_pairs"]:
            raise ConfigError("modes", f"mode indices must lie in 1..{cfg['n_pairs']}")
    fp = cfg["fourier_pair"]
    if (
        not isinstance(fp, list)
        or len(fp) != 2
        or any(isinstance(v, bool) or not isinstance(v, int) for v in fp)
        or fp[0] == fp[1]
        or any(not 1 <= v <= cfg["n_pairs"] for v in fp)
    ):
        raise ConfigError("fourier_pair", "must be two distinct modes in 1..n_pairs")
    if not isinstance(cfg["normality_checks"], bool):
        raise ConfigError("normality_checks", "must be a boolean")


def _run_spectral_corrector(config, workers):
    params = _subset(
        config,
        (
            "field",
            "a_star",
            "q0",
            "f",
            "alpha",
            "truncation_rho",
            "nodes_per_eps",
            "tol",
            "n_pairs",
            "modes",
            "fourier_pair",
        ),
    )
    es = ensemble.EnsembleSpec(
        config["seed"], config["n_real"], config["epsilon_list"],
        "spectral-corrector", params,
    )
    rep = ensemble.run(es, workers=workers, version=VERSION)
    th = config["thresholds"]
    sf = th["stderr_factor"]
    spec = randfield.MAProcessSpec.from_json(config["field"])
    s2 = randfield.sigma2(spec)
    mesh = aligned_mesh(es.epsilon_list[-1], config["nodes_per_eps"])
    k_last = len(es.epsilon_list) - 1
    eps_last = es.epsilon_list[-1]
    st = rep.stats[k_last]
    rows, checks, tables = [], [], {}
    for n in config["modes"]:
        target = spectral.inverse_corrector_covariance(mesh, s2, n, n)
        rows.append((repr(eps_last), f"inv_eig_{n}", "analytic_variance", float(target)))
        if f"inv_eig_{n}" in st:
            checks.append(
                _var_check(f"inv_eig_var[{n}]", st[f"inv_eig_{n}"], target, sf)
            )
        target = spectral.eigenvalue_corrector_covariance(
            mesh, config["a_star"], config["q0"], s2, n, n
        )
        rows.append((repr(eps_last), f"eig_{n}", "analytic_variance", float(target)))
        if f"eig_{n}" in st:
            checks.append(_var_check(f"eig_var[{n}]", st[f"eig_{n}"], target, sf))
    if len(config["modes"]) >= 2:
        n, m = config["modes"][0], config["modes"][1]
        target = spectral.eigenvalue_corrector_covariance(
            mesh, config["a_star"], config["q0"], s2, n, m
        )
        xi = rep.samples[k_last].get(f"eig_{n}", [])
        xj = rep.samples[k_last].get(f"eig_{m}", [])
        if len(xi) > 3:
            checks.append(_cov_check(f"eig_cov[{n}{m}]", xi, xj, target, sf))
        rows.append((repr(eps_last), f"eig_{n}_{m}", "analytic_covariance", float(target)))
    n, m = config["fourier_pair"]
    target = spectral.fourier_corrector_variance(
        mesh, config["a_star"], config["q0"], s2, n, m
    )
    name = f"fourier_{n}_{m}"
    rows.append((repr(eps_last), name, "analytic_variance", float(target)))
    if name in st:
        checks.append(_var_check(f"fourier_var[{n}{m}]", st[name], target, sf))
    if config["normality_checks"]:
        key = f"inv_eig_{config['modes'][0]}"
        if key in st:
            checks.extend(_normality_checks(key, st[key], st[key].n, th))
    for n in config["modes"]:
        fit = _norm_slope(rep, functional=f"defect_{n}")
        if fit is not None:
            tables[f"defect_{n}_fit"] = fit.to_dict()
            checks.append(
                Check(
                    f"defect_slope[{n}]",
                    fit.slope >= th["defect_slope_min"],
                    f"slope={fit.slope:.4f} min={th['defect_slope_min']}",
                )
            )
    checks.extend(
        _count_fraction_check("match_flags", rep, "count_flagged", th["flag_frac_max"])
    )
    return ExperimentResult(
        "spectral-corrector", config, {"main": rep}, tables, rows, checks
    )


HEAT_DEFAULTS = {
    "seed": 20260817,
    "n_real": 200,
    "epsilon_list": [0.02, 0.01, 0.005],
    "field": dict(_DEF_FIELD),
    "a_star": 1.0,
    "q0": 0.0,
    "f": "one",
    "alpha": 0.0,
    "truncation_rho": 0.5,
    "nodes_per_eps": 8,
    "tol": 1e-10,
    "n_pairs": 8,
    "mode": 1,
    "time": 1.0,
    "epsilon_const": 1.0,
    "v0": "parabola",
    "thresholds": {"stderr_factor": 4.0, "gap_slope_min": 0.3},
}


def _validate_heat_corrector(cfg):
    _validate_helm_common(cfg)
    _number(cfg, "a_star", lo=0, lo_open=True)
    _integer(cfg, "n_pairs", lo=1)
    mode = _integer(cfg, "mode", lo=1)
    if mode > cfg["n_pairs"]:
        raise ConfigError("mode", "must not exceed n_pairs")
    _number(cfg, "time", lo=0)
    _number(cfg, "epsilon_const", lo=0, lo_open=True)
    _choice(cfg, "v0", _PROFILES)


def _run_heat_corrector(config, workers):
    params = _subset(
        config,
        (
            "field",
            "a_star",
            "q0",
            "f",
            "alpha",
            "truncation_rho",
            "nodes_per_eps",
            "tol",
            "n_pairs",
            "mode",
            "time",
            "epsilon_const",
            "v0",
        ),
    )
    es = ensemble.EnsembleSpec(
        config["seed"], config["n_real"], config["epsilon_list"],
        "heat-corrector", params,
    )
    rep = ensemble.run(es, workers=workers, version=VERSION)
    th = config["thresholds"]
    rows, checks, tables = [], [], {}
    fit = _norm_slope(rep, functional="heat_gap")
    if fit is not None:
        tables["heat_gap_fit"] = fit.to_dict()
        checks.append(
            Check(
                "gap_slope",
                fit.slope >= th["gap_slope_min"],
                f"slope={fit.slope:.4f} min={th['gap_slope_min']}",
            )
        )
    else:
        checks.append(
            Check("gap_slope", True, "skipped: needs 3 epsilon values and positive gaps")
        )
    # context scale: gap means are read against the direct corrector spread
    for k, eps in enumerate(es.epsilon_list):
        st = rep.stats[k]
        if "heat_direct" in st:
            scale = math.sqrt(max(st["heat_direct"].variance, 0.0))
            rows.append((repr(eps), "heat_gap", "rms_direct", float(scale)))
    return ExperimentResult(
        "heat-corrector", config, {"main": rep}, tables, rows, checks
    )


SCALING_DEFAULTS = {
    "dimensions": [1, 2, 3, 4, 5],
    "alpha": 1.0,
    "s_max": 13.0,
    "epsilon_list": [0.2, 0.12, 0.072, 0.043, 0.026, 0.0156, 0.0094, 0.0056],
    "epsilon_list_d4": [],
    "thresholds": {
        "exponent_tol": 0.1,
        "d4_slope_lo": 3.5,
        "d4_slope_hi": 4.0,
        "d4_residual_factor": 10.0,
        "quartic_constant": 32.986,
        "quartic_rel_tol": 0.01,
    },
}


def _validate_scaling_study(cfg):
    dims = cfg["dimensions"]
    if not isinstance(dims, list) or not dims:
        raise ConfigError("dimensions", "must be a nonempty list")
    for d in dims:
        if isinstance(d, bool) or not isinstance(d, int) or not 1 <= d <= 6:
            raise ConfigError("dimensions", "dimensions must be integers in 1..6")
    _number(cfg, "alpha", lo=0, lo_open=True)
    _number(cfg, "s_max", lo=0, lo_open=True)
    _eps_list(cfg, "epsilon_list")
    if cfg["epsilon_list_d4"]:
        _eps_list(cfg, "epsilon_list_d4")


def _run_scaling_study(config, workers):
    th = config["thresholds"]
    rows, checks, tables = [], [], {}
    for d in config["dimensions"]:
        setup = asymptotics.RadialSetup(
            dimension=d, alpha=config["alpha"], s_max=config["s_max"]
        )
        eps = config["epsilon_list"]
        if d == 4 and config["epsilon_list_d4"]:
            eps = config["epsilon_list_d4"]
        curve = asymptotics.scaling_study(setup, eps)
        for e, v in curve.pairs:
            rows.append((repr(e), f"variance_d{d}", "value", float(v)))
        tables[f"fit_d{d}"] = curve.fit_plain.to_dict()
        tables[f"fit_log_d{d}"] = curve.fit_log.to_dict()
        if d == 4:
            ratio = curve.fit_plain.max_residual / max(
                curve.fit_log.max_residual, 1e-300
            )
            checks.append(
                Check(
                    "d4_log_refinement",
                    ratio >= th["d4_residual_factor"],
                    f"residual ratio {ratio:.2f}, min {th['d4_residual_factor']}",
                )
            )
            checks.append(
                Check(
                    "d4_plain_slope",
                    th["d4_slope_lo"] <= curve.fit_plain.slope <= th["d4_slope_hi"],
                    f"slope={curve.fit_plain.slope:.4f} "
                    f"bounds=[{th['d4_slope_lo']},{th['d4_slope_hi']}]",
                )
            )
        else:
            target = float(min(d, 4))
            checks.append(
                Check(
                    f"slope_d{d}",
                    abs(curve.fit_plain.slope - target) <= th["exponent_tol"],
                    f"slope={curve.fit_plain.slope:.4f} target={target} "
                    f"tol={th['exponent_tol']}",
                )
            )
        if d >= 5:
            quartic = asymptotics.quartic_tail_integral(setup)
            tables[f"quartic_tail_d{d}"] = quartic
            if d == 5:
                rel = abs(quartic - th["quartic_constant"]) / th["quartic_constant"]
                checks.append(
                    Check(
                        "d5_quartic_constant",
                        rel <= th["quartic_rel_tol"],
                        f"value={quartic:.5g} target={th['quartic_constant']} "
                        f"rel_err={rel:.4g}",
                    )
                )
    return ExperimentResult("scaling-study", config, {}, tables, rows, checks)


PERIODIC_DEFAULTS = {
    "seed": 20260817,
    "a_star": 1.0,
    "q0": 0.0,
    "f": "one",
    "periodic_epsilon_list": [0.0625, 0.03125, 0.015625, 0.0078125],
    "nodes_per_eps_periodic": 64,
    "cell_nodes": 2049,
    "random": {
        "field": dict(_DEF_FIELD),
        "epsilon_list": [0.02, 0.01, 0.005, 0.0025],
        "n_real": 200,
        "nodes_per_eps": 8,
        "tol": 1e-10,
        "truncation_rho": 0.5,
    },
    "thresholds": {
        "periodic_slope": 2.0,
        "periodic_slope_tol": 0.05,
        "amplitude_rel_tol": 0.005,
        "random_slope_lo": 0.35,
        "random_slope_hi": 0.65,
    },
}


def _validate_periodic_compare(cfg):
    _integer(cfg, "seed", lo=0)
    _number(cfg, "a_star", lo=0, lo_open=True)
    _number(cfg, "q0", lo=0)
    _choice(cfg, "f", _PROFILES)
    _eps_list(cfg, "periodic_epsilon_list")
    _integer(cfg, "nodes_per_eps_periodic", lo=8)
    _integer(cfg, "cell_nodes", lo=16)
    _field_spec(cfg, "random.field")
    _eps_list(cfg, "random.epsilon_list")
    _integer(cfg, "random.n_real", lo=2)
    _integer(cfg, "random.nodes_per_eps", lo=2)
    _number(cfg, "random.tol", lo=0, lo_open=True)
    _number(
        cfg, "random.truncation_rho", lo=0, hi=1, lo_open=True, hi_open=True
    )


def _run_periodic_compare(config, workers):
    th = config["thresholds"]
    rows, checks, tables = [], [], {}
    # single-mode cell corrector amplitude
    cell = Mesh1D(config["cell_nodes"])
    u2 = helmholtz.periodic_cell_corrector_1d(cell, np.cos(2.0 * np.pi * cell.nodes))
    amp = float(np.max(np.abs(u2)))
    target_amp = 1.0 / (4.0 * np.pi**2)
    rel = abs(amp - target_amp) / target_amp
    rows.append(("cell", "cell_corrector", "max_abs", amp))
    rows.append(("cell", "cell_corrector", "analytic", float(target_amp)))
    checks.append(
        Check(
            "cell_amplitude",
            rel <= th["amplitude_rel_tol"],
            f"max|u2|={amp:.8g} target={target_amp:.8g} rel_err={rel:.3g}",
        )
    )
    # periodic potential sweep: sup-norm of u_eps - u0 against epsilon
    sup_pairs = []
    for eps in config["periodic_epsilon_list"]:
        mesh = aligned_mesh(eps, config["nodes_per_eps_periodic"])
        f = source_profile(config["f"], mesh.nodes)
        qv = np.cos(2.0 * np.pi * mesh.nodes / eps)
        u_eps = helmholtz.dirichlet_solve_fd(
            mesh, config["a_star"], config["q0"] + qv, f
        )
        u0 = helmholtz.dirichlet_solve_fd(mesh, config["a_star"], config["q0"], f)
        sup = float(np.max(np.abs(u_eps - u0)))
        sup_pairs.append((eps, sup))
        rows.append((repr(eps), "periodic_sup", "value", sup))
    fit = ensemble.loglog_slope(sup_pairs)
    tables["periodic_fit"] = fit.to_dict()
    checks.append(
        Check(
            "periodic_slope",
            abs(fit.slope - th["periodic_slope"]) <= th["periodic_slope_tol"],
            f"slope={fit.slope:.4f} target={th['periodic_slope']} "
            f"tol={th['periodic_slope_tol']}",
        )
    )
    # random-potential contrast through the standard corrector ensemble
    rc = config["random"]
    params = {
        "field": rc["field"],
        "a_star": config["a_star"],
        "q0": config["q0"],
        "f": config["f"],
        "alpha": 0.0,
        "truncation_rho": rc["truncation_rho"],
        "nodes_per_eps": rc["nodes_per_eps"],
        "tol": rc["tol"],
        "probes": [],
        "moments": [],
    }
    es = ensemble.EnsembleSpec(
        config["seed"], rc["n_real"], rc["epsilon_list"],
        "helmholtz-corrector", params,
    )
    rep = ensemble.run(es, workers=workers, version=VERSION)
    fit2 = _norm_slope(rep)
    if fit2 is not None:
        tables["random_norm_sq_fit"] = fit2.to_dict()
        # ||u_eps - u0|| slope is half the slope of the squared-norm mean
        half = 0.5 * fit2.slope
        checks.append(
            Check(
                "random_slope",
                th["random_slope_lo"] <= half <= th["random_slope_hi"],
                f"slope={half:.4f} bounds=[{th['random_slope_lo']},"
                f"{th['random_slope_hi']}]",
            )
        )
    return ExperimentResult(
        "periodic-compare", config, {"random": rep}, tables, rows, checks
    )


# --- registry ---


@dataclass(frozen=True)
class ExperimentKind:
    name: str
    description: str
    defaults: dict
    validator: object
    runner: object


KINDS = {
    k.name: k
    for k in (
        ExperimentKind(
            "field-stats",
            "Moving-average field statistics against closed-form covariances.",
            FIELD_STATS_DEFAULTS,
            _validate_field_stats,
            _run_field_stats,
        ),
        ExperimentKind(
            "helmholtz-corrector",
            "1D Helmholtz corrector ensemble: scaling, pointwise law, moments.",
            HELM_DEFAULTS,
            _validate_helmholtz_corrector,
            _run_helmholtz_corrector,
        ),
        ExperimentKind(
            "helmholtz-moments-2d",
            "2D Helmholtz moment functionals against the limit covariance.",
            HELM2D_DEFAULTS,
            _validate_helmholtz_moments_2d,
            _run_helmholtz_moments_2d,
        ),
        ExperimentKind(
            "elliptic-corrector",
            "1D divergence-form corrector ensemble against the three-driver law.",
            ELLIPTIC_DEFAULTS,
            _validate_elliptic_corrector,
            _run_elliptic_corrector,
        ),
        ExperimentKind(
            "spectral-corrector",
            "Eigenvalue and eigenvector corrector ensembles for the 1D operator.",
            SPECTRAL_DEFAULTS,
            _validate_spectral_corrector,
            _run_spectral_corrector,
        ),
        ExperimentKind(
            "heat-corrector",
            "Heat semigroup corrector: direct difference vs two-term surrogate.",
            HEAT_DEFAULTS,
            _validate_heat_corrector,
            _run_heat_corrector,
        ),
        ExperimentKind(
            "scaling-study",
            "Deterministic variance-vs-epsilon exponents across dimensions 1..6.",
            SCALING_DEFAULTS,
            _validate_scaling_study,
            _run_scaling_study,
        ),
        ExperimentKind(
            "periodic-compare",
            "Periodic single-mode corrector vs the random-field scaling contrast.",
            PERIODIC_DEFAULTS,
            _validate_periodic_compare,
            _run_periodic_compare,
        ),
    )
}


def validate_config(raw: dict) -> dict:
    """Merge defaults into a raw config and validate; returns the full record."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    kind = raw.get("kind")
    if kind is None:
        raise ConfigError("kind", "missing required field")
    if kind not in KINDS:
        raise ConfigError(
            "kind", f"unknown experiment kind {kind!r}; see the list command"
        )
    body = {k: v for k, v in raw.items() if k != "kind"}
    merged = _merge(KINDS[kind].defaults, body)
    full = {"kind": kind}
    full.update(merged)
    KINDS[kind].validator(full)
    return full


def run_experiment(config: dict, workers: int = 1) -> ExperimentResult:
    """Validate and execute one experiment config."""
    full = validate_config(config)
    return KINDS[full["kind"]].runner(full, workers)


def describe_kinds() -> str:
    """One line per experiment kind, stable order, with key defaults."""
    lines = []
    for name, kind in KINDS.items():
        lines.append(f"{name}: {kind.description}")
        keys = [k for k in ("n_real", "epsilon_list", "dimensions") if k in kind.defaults]
        deco = ", ".join(f"{k}={kind.defaults[k]}" for k in keys)
        if deco:
            lines.append(f"    defaults: {deco}")
    return "\n".join(lines) + "\n"
