"""Registry of reproducible experiments and the code that runs them."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import _io
from . import discrete_ops as dops
from . import kernels, plotting, potentials, radial_solver, vanishing
from .config import ScenarioConfig
from .errors import ConfigError
from .grid import RadialFunction, RadialGrid


@dataclass
class Check:
    value: float
    threshold: float
    relation: str
    passed: bool

    @classmethod
    def at_most(cls, value, threshold):
        return cls(float(value), float(threshold), "<=", bool(value <= threshold))

    @classmethod
    def at_least(cls, value, threshold):
        return cls(float(value), float(threshold), ">=", bool(value >= threshold))

    def to_dict(self) -> dict:
        return {"value": self.value, "threshold": self.threshold, "relation": self.relation,
                "passed": self.passed}


@dataclass
class ScenarioResult:
    report_type: str
    results: dict
    checks: dict
    tables: dict = field(default_factory=dict)
    figures: dict = field(default_factory=dict)


@dataclass
class Context:
    params: dict
    tol: dict
    seed: int
    grid: RadialGrid
    potential: potentials.Potential | None


@dataclass
class Scenario:
    name: str
    anchor: str
    func: object
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    potential: dict | None = None
    grid: RadialGrid | None = None


REGISTRY: dict[str, Scenario] = {}


def scenario(name, anchor, params=None, tolerances=None, potential=None, grid=None):
    def wrap(func):
        REGISTRY[name] = Scenario(name, anchor, func, dict(params or {}),
                                  dict(tolerances or {}), potential, grid)
        return func
    return wrap


def list_scenarios() -> list[str]:
    return sorted(REGISTRY)


def _relative(a, b):
    return abs(a - b) / abs(b)


def _hardy_delta(ctx: Context) -> float:
    V = ctx.potential
    if V is None or not V.is_pure_hardy:
        raise ConfigError("this scenario needs the unregularized 'hardy' potential")
    return V.hardy_delta


def _vanishing_tables(profile: vanishing.ShellProfile, prefix="shells"):
    rows = list(zip(profile.k.tolist(), profile.r_lo.tolist(), profile.r_hi.tolist(),
                    profile.mass.tolist()))
    return {f"{prefix}.csv": (["k", "r_lo", "r_hi", "mass"], rows)}


# ---------------------------------------------------------------------------
# kernels


def _sawyer(ctx: Context, estimate):
    P = ctx.params
    rep, diag = kernels.sawyer_ratio_scan(estimate, int(P["N_max"]), int(P["samples"]),
                                          ctx.seed, with_diagnostics=True)
    ratios = np.array([v for _, v in rep.ratio_by_N])
    spread = float(ratios.max() / ratios.min())
    checks = {
        "finite": Check.at_most(0.0 if np.all(np.isfinite(ratios)) else 1.0, 0.0),
        "n_independence": Check.at_most(spread, ctx.tol["n_spread"]),
    }
    results = {**rep.to_dict(), "diagnostics": diag.to_dict(), "spread_over_N": spread}
    table = {"ratio_by_N.csv": (["N", "max_ratio", "inner_max", "outer_max"],
                                [(n, v, a, b) for (n, v), a, b in
                                 zip(rep.ratio_by_N, diag.inner_by_N, diag.outer_by_N)])}
    figs = {"ratio_by_N.png": lambda path: plotting.sawyer_figure(rep, diag, path)}
    return ScenarioResult("SawyerReport", results, checks, table, figs)


@scenario("sawyer-s1", "truncated Newtonian kernel: |[K]_N| <= C1 (|x|/|y|)^N K",
          params={"N_max": 12, "samples": 100_000}, tolerances={"n_spread": 2.0})
def run_sawyer_s1(ctx):
    return _sawyer(ctx, "S1")


@scenario("sawyer-s2",
          "truncated gradient kernel: |[grad K]_N| <= C2 N (|x|/|y|)^N (-Delta)^(-1/2) kernel",
          params={"N_max": 12, "samples": 100_000}, tolerances={"n_spread": 2.0})
def run_sawyer_s2(ctx):
    return _sawyer(ctx, "S2")


@scenario("complex-tail", "Taylor remainder of d_z |1-z|^-1 bounded by C N |z|^N |1-z|^-2",
          params={"N_max": 10, "grid_res": 200, "margin": 0.05},
          tolerances={"closed_form": 1e-10})
def run_complex_tail(ctx):
    P = ctx.params
    rep, by_N = kernels.complex_tail_check(int(P["N_max"]), int(P["grid_res"]),
                                           float(P["margin"]), with_by_N=True)
    z = np.linspace(0.0, 1.0 - float(P["margin"]), 401)
    series = kernels.taylor_remainder(z, 1, method="series")[0]
    closed = 0.5 * (1.0 - z) ** -2 - 0.5
    err = float(np.max(np.abs(series - closed)))
    checks = {
        "finite": Check.at_most(0.0 if math.isfinite(rep.max_normalized_tail) else 1.0, 0.0),
        "closed_form_N1": Check.at_most(err, ctx.tol["closed_form"]),
    }
    results = {**rep.to_dict(), "normalized_tail_by_N": by_N, "closed_form_error": err}
    table = {"tail_by_N.csv": (["N", "max_normalized_tail"],
                               list(zip(range(1, len(by_N) + 1), by_N)))}
    figs = {"tail_by_N.png": lambda path: plotting.series_figure(
        range(1, len(by_N) + 1), by_N, "N", "max normalized tail", path)}
    return ScenarioResult("ComplexTailReport", results, checks, table, figs)


# ---------------------------------------------------------------------------
# vanishing orders


def _order_result(ctx, u, beta, tol_key, label):
    P = ctx.params
    window = tuple(P["fit_window"]) if P.get("fit_window") else None
    rep = vanishing.vanishing_report(u, float(P["p"]), fit_window=window, beta=beta,
                                     solver=label)
    profile = vanishing.local_mass_profile(u, float(P["p"]))
    err = _relative(rep.ord_hat, beta) if beta > 0 else abs(rep.ord_hat)
    checks = {
        "ord_vs_beta": Check.at_most(err, ctx.tol[tol_key]),
        "Ord_le_ord": Check.at_most(rep.Ord_hat - rep.ord_hat, ctx.tol["ord_gap"]),
    }
    figs = {"shell_masses.png": lambda path: plotting.vanishing_figure(profile, rep, path)}
    return ScenarioResult("VanishingReport", rep.to_dict(), checks,
                          _vanishing_tables(profile), figs)


@scenario("hardy-order", "vanishing order beta = (sqrt(1+delta)-1)/2 of (mu+H)^-1 f",
          params={"mu": 1.0, "p": 2.0, "fit_window": []},
          tolerances={"ord_rel": 0.05, "ord_gap": 0.01},
          potential={"name": "hardy", "delta": 0.75})
def run_hardy_order(ctx):
    delta = _hardy_delta(ctx)
    u = radial_solver.resolvent_apply(float(ctx.params["mu"]), ctx.potential,
                                      vanishing.unit_shell_source, ctx.grid,
                                      theorem_hypothesis=True)
    return _order_result(ctx, u, radial_solver.hardy_beta(delta), "ord_rel", "finite-difference")


@scenario("hardy-order-oracle", "vanishing order of the exact Bessel resolvent",
          params={"mu": 1.0, "p": 2.0, "fit_window": []},
          tolerances={"ord_rel": 0.02, "ord_gap": 0.01},
          potential={"name": "hardy", "delta": 0.75})
def run_hardy_order_oracle(ctx):
    delta = _hardy_delta(ctx)
    vals = radial_solver.oracle_resolvent(delta, float(ctx.params["mu"]),
                                          vanishing.unit_shell_source, (1.0, 2.0), ctx.grid.r)
    u = RadialFunction(ctx.grid, vals, 0, {"oracle": "bessel"})
    return _order_result(ctx, u, radial_solver.hardy_beta(delta), "ord_rel", "bessel-oracle")


@scenario("drift-order", "regular solution of the Hardy-type drift resolvent ~ r^(sqrt(delta)/2)",
          params={"mu": 1.0, "delta": 0.64, "slope_range": [1e-3, 1e-2]},
          tolerances={"slope_rel": 0.05})
def run_drift_order(ctx):
    P = ctx.params
    u = radial_solver.drift_mode_solve(float(P["mu"]), float(P["delta"]),
                                       vanishing.unit_shell_source, ctx.grid)
    lo, hi = P["slope_range"]
    r = ctx.grid.r
    m = (r >= lo) & (r <= hi)
    slope = float(np.polyfit(np.log(r[m]), np.log(u.values[m]), 1)[0])
    gamma = 0.5 * math.sqrt(float(P["delta"]))
    checks = {"slope_vs_gamma": Check.at_most(_relative(slope, gamma), ctx.tol["slope_rel"])}
    results = {"delta": float(P["delta"]), "gamma": gamma, "log_slope": slope,
               "slope_range": [lo, hi]}
    idx = np.unique(np.linspace(0, ctx.grid.n_points - 1, 400).astype(int))
    table = {"solution.csv": (["r", "u"], list(zip(r[idx].tolist(), u.values[idx].tolist())))}
    figs = {"solution.png": lambda path: plotting.loglog_figure(
        r[idx], u.values[idx], "r", "u(r)", path, ref_slope=gamma)}
    return ScenarioResult("DriftReport", results, checks, table, figs)


# ---------------------------------------------------------------------------
# Green function


@scenario("green-bound", "two-sided Green bound with vanishing factor [1 ^ |x||y|/|x-y|^2]^beta",
          params={"mu": 1.0, "rho": 2.0, "l_max": 32, "samples": 400,
                  "r_range": [1e-3, 1.0], "slope_range": [1e-3, 0.1], "free_samples": 10},
          tolerances={"condition_number": 10.0, "slope_rel": 0.03, "free_rel": 1e-3},
          potential={"name": "hardy", "delta": 0.75})
def run_green_bound(ctx):
    P = ctx.params
    delta = _hardy_delta(ctx)
    mu = float(P["mu"])
    beta = radial_solver.hardy_beta(delta)
    slice_ = radial_solver.green_radial(mu, ctx.potential, float(P["rho"]), int(P["l_max"]),
                                        ctx.grid)
    fit = vanishing.green_bound_fit(slice_, mu, beta, int(P["samples"]), ctx.seed,
                                    tuple(P["r_range"]))
    slope = vanishing.green_log_slope(slice_, tuple(P["slope_range"]))
    free = radial_solver.green_radial(mu, potentials.make_hardy(3, 0.0), float(P["rho"]),
                                      int(P["l_max"]), ctx.grid)
    rng = np.random.default_rng(ctx.seed + 1)
    n = int(P["free_samples"])
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    lo, hi = P["r_range"]
    x = d * np.exp(rng.uniform(np.log(lo), np.log(hi), n))[:, None]
    y = np.tile([0.0, 0.0, free.source_radius], (n, 1))
    free_err = float(np.max(np.abs(free(x, y) / radial_solver.free_green(mu, x, y) - 1.0)))
    checks = {
        "condition_number": Check.at_most(fit.condition_number, ctx.tol["condition_number"]),
        "near_origin_slope": Check.at_most(_relative(slope, beta), ctx.tol["slope_rel"]),
        "free_reconstruction": Check.at_most(free_err, ctx.tol["free_rel"]),
    }
    results = {**fit.to_dict(), "near_origin_slope": slope, "free_max_rel_error": free_err,
               "l_max": int(P["l_max"])}
    table = {"green_samples.csv": (["abs_x", "G", "comparator_low", "comparator_high"],
                                   list(zip(fit.abs_x, fit.G, fit.comparator_low,
                                            fit.comparator_high)))}
    figs = {"green_envelope.png": lambda path: plotting.green_figure(fit, path)}
    return ScenarioResult("GreenBoundFit", results, checks, table, figs)


# ---------------------------------------------------------------------------
# operator inequalities


@scenario("prop22", "||V^(1/p) (-Delta)^-1 V^(1/p')||_(p->p) <= kappa_p nu, kappa_p = p p'/4",
          params={"p": [2.0, 3.0, 4.0], "probes": 200, "truncation": [1e-3, 3.0]},
          tolerances={"margin": 1e-3, "power_rel": 0.05},
          potential={"name": "hardy", "delta": 0.5})
def run_prop22(ctx):
    P = ctx.params
    ps = P["p"] if isinstance(P["p"], list) else [P["p"]]
    V = ctx.potential
    trunc = tuple(P["truncation"])
    nu = potentials.local_form_bound(V.truncated(*trunc), trunc[1], ctx.grid)
    reports, checks = [], {}
    for p in ps:
        rep = dops.prop22_check(V, float(p), ctx.grid, int(P["probes"]), ctx.seed, nu=nu,
                                truncation=trunc)
        reports.append(rep.to_dict())
        checks[f"margin_p{p:g}"] = Check.at_least(rep.margin, -ctx.tol["margin"])
        if float(p) == 2.0:
            T = dops.prop_operator(V.truncated(*trunc), 2.0, ctx.grid)
            power = dops.power_iteration(T, ctx.seed)
            checks["p2_vs_power_iteration"] = Check.at_most(
                _relative(rep.norm_lower_bound, power), ctx.tol["power_rel"])
    results = {"nu_hat": nu, "truncation": list(trunc), "reports": reports}
    table = {"probe_norms.csv": (["p", "kappa_p", "norm_lower_bound", "bound_rhs", "margin"],
                                 [(r["p"], r["kappa_p"], r["norm_lower_bound"], r["bound_rhs"],
                                   r["margin"]) for r in reports])}
    figs = {"probe_norms.png": lambda path: plotting.prop_figure(reports, path)}
    return ScenarioResult("OperatorProbeReport", results, checks, table, figs)


@scenario("hardy-inequality", "<grad w, grad w> >= (1/4) <|x|^-2 w, w> in d = 3",
          params={"probes": 200}, tolerances={"ratio_excess": 1e-3},
          grid=RadialGrid(1e-30, 1e2, 3201))
def run_hardy_inequality(ctx):
    ratio = dops.hardy_check(ctx.grid, int(ctx.params["probes"]), ctx.seed)
    checks = {"hardy_ratio": Check.at_most(ratio, 1.0 + ctx.tol["ratio_excess"])}
    return ScenarioResult("HardyCheck", {"max_ratio": ratio, "grid": ctx.grid.describe()},
                          checks)


@scenario("form-bound", "form-bound delta of delta/4 |x|^-2 via the generalized eigenproblem",
          params={"lambda": 0.0, "levels": [4, 7, 10], "per_decade": 20},
          tolerances={"final_rel": 0.03}, potential={"name": "hardy", "delta": 0.5})
def run_form_bound(ctx):
    P = ctx.params
    V = ctx.potential
    values, grids = [], []
    for a in P["levels"]:
        g = RadialGrid.decades(-a, a, int(P["per_decade"]))
        values.append(potentials.form_bound_ratio(V, float(P["lambda"]), g)[0])
        grids.append(g.describe())
    target = V.hardy_delta
    monotone = all(b >= a for a, b in zip(values, values[1:]))
    checks = {
        "monotone": Check.at_least(1.0 if monotone else 0.0, 1.0),
        "from_below": Check.at_most(max(values) - target, 0.0),
        "final_error": Check.at_most(_relative(values[-1], target), ctx.tol["final_rel"]),
    }
    results = {"delta": target, "lambda": float(P["lambda"]), "delta_hat_by_level": values,
               "grids": grids}
    table = {"refinement.csv": (["level", "delta_hat"], list(zip(P["levels"], values)))}
    figs = {"refinement.png": lambda path: plotting.series_figure(
        P["levels"], values, "log10 range", "delta_hat", path, hline=target)}
    return ScenarioResult("FormBoundReport", results, checks, table, figs)


@scenario("subclasses", "L^{3/2}, weak L^{3/2}, Morrey and Chang-Wilson-Wolff memberships",
          params={"s": 1.25, "dyadic_depth": 8, "box_corner": [-1.0, -1.0, -1.0],
                  "box_side": 2.0},
          tolerances={"finite_cap": 1e6}, potential={"name": "hardy", "delta": 1.0})
def run_subclasses(ctx):
    P = ctx.params
    rep = potentials.subclass_report(ctx.potential, float(P["s"]),
                                     (tuple(P["box_corner"]), float(P["box_side"])),
                                     int(P["dyadic_depth"]))
    cap = ctx.tol["finite_cap"]
    checks = {
        "inclusion_ld2_weak": Check.at_most(
            0.0 if (math.isinf(rep.ld2_norm) or math.isfinite(rep.weak_ld2)) else 1.0, 0.0),
        "weak_finite": Check.at_most(rep.weak_ld2, cap),
        "morrey_finite": Check.at_most(rep.morrey_cs, cap),
    }
    return ScenarioResult("SubclassReport", rep.to_dict(), checks)


# ---------------------------------------------------------------------------
# Carleman norms and order bounds


@scenario("carleman-norm", "||1_B(0,1) |x|^-N u||_p finite iff p(N - beta) < 3",
          params={"mu": 1.0, "p": 2.0, "N": [0, 1, 2], "radii": [0.25, 0.5, 1.0]},
          tolerances={"monotone_slack": 1e-12}, potential={"name": "hardy", "delta": 0.75})
def run_carleman_norm(ctx):
    P = ctx.params
    delta = _hardy_delta(ctx)
    beta = radial_solver.hardy_beta(delta)
    p = float(P["p"])
    u = radial_solver.resolvent_apply(float(P["mu"]), ctx.potential,
                                      vanishing.unit_shell_source, ctx.grid)
    rows, checks = [], {}
    table = np.array([[vanishing.carleman_norm(u, p, int(N), float(rad)) for rad in P["radii"]]
                      for N in P["N"]])
    for i, N in enumerate(P["N"]):
        for j, rad in enumerate(P["radii"]):
            rows.append((int(N), float(rad), float(table[i, j])))
        expected_finite = p * (N - beta) < 3.0
        checks[f"finite_matches_N{N}"] = Check.at_least(
            1.0 if math.isfinite(table[i, -1]) == expected_finite else 0.0, 1.0)
    slack = ctx.tol["monotone_slack"]
    def monotone(a, b):
        # norms are nonnegative; inf >= inf counts as monotone
        return bool(np.all(b >= a * (1.0 - slack)))

    mono_N = monotone(table[:-1], table[1:])
    mono_r = monotone(table[:, :-1], table[:, 1:])
    checks["monotone_in_N"] = Check.at_least(1.0 if mono_N else 0.0, 1.0)
    checks["monotone_in_radius"] = Check.at_least(1.0 if mono_r else 0.0, 1.0)
    results = {"beta": beta, "p": p, "N": list(P["N"]), "radii": list(P["radii"]),
               "norms": table.tolist()}
    return ScenarioResult("CarlemanCheck", results, checks,
                          {"carleman.csv": (["N", "radius", "norm"], rows)})


@scenario("corollary-bound", "ord <= log_{1/a}(K / ||1_B(0,a) u||_p) + 1",
          params={"mu": 1.0, "p": 2.0, "a": [0.5, 0.25, 0.125]},
          tolerances={"form_agreement": 1e-12}, potential={"name": "hardy", "delta": 3.0})
def run_corollary_bound(ctx):
    P = ctx.params
    p = float(P["p"])
    u = radial_solver.resolvent_apply(float(P["mu"]), ctx.potential,
                                      vanishing.unit_shell_source, ctx.grid)
    rep = vanishing.vanishing_report(u, p)
    N = int(math.floor(rep.ord_hat)) + 1
    rows, checks = [], {}
    for a in P["a"]:
        # the Carleman norm on B(0,a) is dominated by the one on B(0,1)
        K = vanishing.carleman_norm(u, p, N, 1.0)
        norm = vanishing.ball_norm(u, p, float(a))
        bound = vanishing.order_upper_bound(K, float(a), norm)
        alt = vanishing.order_upper_bound_alt(K, float(a), norm)
        rows.append((float(a), K, norm, bound, alt))
        checks[f"ord_le_bound_a{a:g}"] = Check.at_most(rep.ord_hat, bound)
        checks[f"forms_agree_a{a:g}"] = Check.at_most(abs(bound - alt), ctx.tol["form_agreement"])
    results = {"ord_hat": rep.ord_hat, "N": N, "rows": [list(r) for r in rows]}
    return ScenarioResult("OrderBoundReport", results, checks,
                          {"bounds.csv": (["a", "K", "ball_norm", "bound", "bound_alt"], rows)})


@scenario("lower-bound", "Ord^6 u >= (1/2)(sqrt(1+delta-delta0) - 1)",
          params={"mu": 1.0, "delta": 0.75, "delta0": [0.0, 0.1], "p": 6.0},
          tolerances={"slack": 0.01, "equality_rel": 0.03})
def run_lower_bound(ctx):
    P = ctx.params
    out, checks = [], {}
    for d0 in P["delta0"]:
        rep = vanishing.lower_bound_check(float(P["delta"]), float(d0), float(P["mu"]),
                                          grid=ctx.grid, p=float(P["p"]),
                                          tolerance=ctx.tol["slack"])
        out.append(rep)
        checks[f"lower_bound_delta0_{d0:g}"] = Check.at_least(
            rep["Ord_hat"], rep["threshold"] - ctx.tol["slack"])
        if d0 == 0:
            checks["equality_delta0_0"] = Check.at_most(abs(rep["relative_gap"]),
                                                        ctx.tol["equality_rel"])
    return ScenarioResult("LowerBoundReport", {"cases": out}, checks)


@scenario("desingularize", "H |x|^beta = 0 for beta(beta+1) = delta/4",
          params={"samples": 100, "delta_max": 10.0, "discrete_delta": 0.75},
          tolerances={"residual": 1e-12, "order_low": 1.8})
def run_desingularize(ctx):
    P = ctx.params
    rng = np.random.default_rng(ctx.seed)
    deltas = rng.uniform(0.0, float(P["delta_max"]), int(P["samples"]))
    worst = max(vanishing.desingular_residual(float(d)) for d in deltas)
    # coarsen rather than refine: below h ~ 1e-3 the residual meets round-off
    g = ctx.grid
    grids = [RadialGrid(g.r_min, g.r_max, (g.n_points - 1) // k + 1) for k in (4, 2, 1)]
    disc = [vanishing.discrete_desingular_residual(float(P["discrete_delta"]), g) for g in grids]
    orders = [math.log2(a / b) for a, b in zip(disc, disc[1:])]
    checks = {"algebraic_residual": Check.at_most(worst, ctx.tol["residual"]),
              "discrete_order": Check.at_least(min(orders), ctx.tol["order_low"])}
    results = {"max_residual": worst, "discrete_residuals": disc, "observed_orders": orders,
               "h": [g.h for g in grids]}
    return ScenarioResult("DesingularizationReport", results, checks)


@scenario("appendix-coercivity", "Re<H_psi w, w> >= c<grad w, grad w> - delta0 lambda0 <w, w>",
          params={"epsilon": 1e-4, "s": 0.5954, "delta": 0.75, "delta0": 0.0,
                  "lambda0": 0.0, "probes": 1000},
          tolerances={"margin": 1e-8, "identity": 1e-6})
def run_coercivity(ctx):
    P = ctx.params
    rep = vanishing.coercivity_check(float(P["epsilon"]), float(P["s"]), float(P["delta"]),
                                     float(P["delta0"]), float(P["lambda0"]), ctx.grid,
                                     int(P["probes"]), ctx.seed)
    checks = {"margin": Check.at_least(rep.margin, -ctx.tol["margin"]),
              "integration_by_parts": Check.at_most(rep.identity_error, ctx.tol["identity"])}
    return ScenarioResult("CoercivityReport", rep.to_dict(), checks)


@scenario("theorem-implication",
          "finite ||1_B |x|^-[beta]-1 u||_p with p([beta]+1-beta) < 1 gives [beta]+1-3/p <= Ord",
          params={"mu": 1.0, "p": 2.0, "cases": [[3.0, 0.501], [5.0, 0.0]]},
          tolerances={"ord_slack": 0.02, "refinement_rel": 0.01})
def run_theorem_implication(ctx):
    """Each case is ``[delta, beta]``; ``beta = 0`` means the exact exponent."""
    P = ctx.params
    p = float(P["p"])
    coarse, fine = ctx.grid, ctx.grid.refined(2)
    out, checks = [], {}
    for delta, beta in P["cases"]:
        beta = float(beta) or radial_solver.hardy_beta(float(delta))
        us = [RadialFunction(g, radial_solver.oracle_resolvent(
            float(delta), float(P["mu"]), vanishing.unit_shell_source, (1.0, 2.0), g.r))
            for g in (coarse, fine)]
        rep = vanishing.implication_check(us[0], us[1], beta, p, ctx.tol["ord_slack"])
        rep["delta"] = float(delta)
        out.append(rep)
        tag = f"delta{float(delta):g}"
        checks[f"hypothesis_{tag}"] = Check.at_least(1.0 if rep["hypothesis"] else 0.0, 1.0)
        checks[f"implication_{tag}"] = Check.at_least(1.0 if rep["implication_holds"] else 0.0,
                                                      1.0)
        checks[f"refinement_{tag}"] = Check.at_most(rep["refinement_delta"],
                                                    ctx.tol["refinement_rel"])
    return ScenarioResult("ImplicationReport", {"cases": out}, checks)


# ---------------------------------------------------------------------------
# running


def _merge(kind, declared, given):
    unknown = set(given) - set(declared)
    if unknown:
        raise ConfigError(f"unknown {kind} keys: {sorted(unknown)}")
    return {**declared, **given}


def build_context(cfg: ScenarioConfig) -> tuple[Scenario, Context]:
    if cfg.scenario not in REGISTRY:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}; see 'lab list'")
    sc = REGISTRY[cfg.scenario]
    params = _merge("params", sc.params, cfg.params)
    tol = _merge("tolerances", sc.tolerances, cfg.tolerances)
    pot_cfg = dict(cfg.potential or sc.potential or {})
    V = None
    if pot_cfg:
        name = pot_cfg.pop("name", None)
        if name is None:
            raise ConfigError("potential table needs a 'name'")
        try:
            V = potentials.catalog(name, **pot_cfg)
        except Exception as exc:
            raise ConfigError(str(exc)) from exc
    grid = cfg.grid_object(sc.grid)
    return sc, Context(params, tol, cfg.seed, grid, V)


def run_scenario(cfg: ScenarioConfig) -> dict:
    """Run one scenario and write its report, tables, figures and manifest.

    Returns the manifest.  The report file depends only on the configuration
    and package version; timing goes to the manifest.
    """
    start = time.perf_counter()
    sc, ctx = build_context(cfg)
    result = sc.func(ctx)
    out = cfg.resolved_output_dir() / sc.name
    out.mkdir(parents=True, exist_ok=True)
    checks = {k: v.to_dict() for k, v in result.checks.items()}
    passed = all(c["passed"] for c in checks.values())
    report = {
        "scenario": sc.name, "anchor": sc.anchor, "report_type": result.report_type,
        "version": __version__, "config": cfg.echo(),
        "grid": ctx.grid.describe(),
        "potential": None if ctx.potential is None else ctx.potential.describe(),
        "params": ctx.params, "tolerances": ctx.tol, "seed": ctx.seed,
        "checks": checks, "passed": passed, "results": result.results,
    }
    files = [_io.write_json(out / "report.json", report)]
    for name, (header, rows) in sorted(result.tables.items()):
        files.append(_io.write_csv(out / name, header, rows))
    for name, draw in sorted(result.figures.items()):
        draw(out / name)
        files.append(out / name)
    manifest = {
        "scenario": sc.name, "config": cfg.echo(), "config_file": cfg.source,
        "version": __version__, "wall_time_s": time.perf_counter() - start,
        "checks": {k: c["passed"] for k, c in checks.items()}, "passed": passed,
        "files": [str(Path(f).name) for f in files],
    }
    _io.write_json(out / "manifest.json", manifest)
    return manifest


# ---------------------------------------------------------------------------
# plot data


def plotdata_rows(report: dict) -> list[tuple]:
    """Long-format ``(series, x, y)`` rows for a saved report."""
    try:
        kind = report["report_type"]
        res = report["results"]
        if kind == "SawyerReport":
            return [("max_ratio", n, v) for n, v in res["ratio_by_N"]]
        if kind == "GreenBoundFit":
            rows = []
            for key in ("G", "comparator_low", "comparator_high"):
                rows += [(key, x, y) for x, y in zip(res["abs_x"], res[key])]
            return rows
        if kind == "VanishingReport":
            return [("log2_mass", math.log2(r), math.log2(m))
                    for r, m in zip(res["radii"], res["shell_masses"]) if m > 0]
        if kind == "ComplexTailReport":
            return [("max_normalized_tail", n + 1, v)
                    for n, v in enumerate(res["normalized_tail_by_N"])]
        if kind == "FormBoundReport":
            return [("delta_hat", i, v) for i, v in enumerate(res["delta_hat_by_level"])]
        if not isinstance(res, dict):
            raise TypeError("results is not a table")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed report: missing or invalid field {exc}") from exc
    return _generic_rows(res)


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _generic_rows(res: dict) -> list[tuple]:
    # scalars become single points, flat numeric lists become indexed series
    rows = []
    for key in sorted(res):
        val = res[key]
        if _is_number(val):
            rows.append((key, 0, val))
        elif isinstance(val, list) and val and all(_is_number(v) for v in val):
            rows += [(key, i, v) for i, v in enumerate(val)]
    return rows
