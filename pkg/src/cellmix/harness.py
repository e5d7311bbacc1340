"""Experiment orchestration: configs, decay fits, and the runner surface.

Each runner takes an ExperimentConfig, produces a result dictionary with a
uniform shape ({"kind", "rows", "header", "summary", "assertions", ...}),
and stays silent about files; emit_outputs turns a result into CSV, JSON,
and SVG artifacts.  The command line tool is a thin shell over these
runners: exit 0 when every recorded assertion passed, 2 when one failed.

Pinned constants below are regression anchors frozen from the derivation
runs of the corresponding experiments; they are floors and envelopes, not
targets, so honest numerical drift has headroom before they trip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .assembly import StagedField, evolve
from .blocks import (
    reference_field_block,
    reference_map_block,
    validate_block,
)
from .diagnostics import (
    characteristic_length_scale,
    functional_mixing_scale,
    geometric_mixing_scale,
    h_minus1_duality_lower_bound,
    h_minus1_torus,
)
from .domain import BlockParams, Grid, checkerboard, half_split, time_steps
from .errors import (
    BudgetUnbounded,
    CellmixError,
    ConfigError,
    TauBelowFloor,
)
from .io import svg_loglog, write_csv, write_json
from .lagrangian import (
    flow_map_from_staged,
    mincost_experiment,
    restricted_lipschitz,
    trapping_radius,
    universality_counterexample,
)
from .sobolev import scaling_identity_check, tau_floor

# Regression floor for the minimal stirring cost of the reference family at
# the compliant depth (5 stages of the tuned twist measured 81.0803).
MINCOST_FLOOR = 81.0

# Empirical constant for the stretch/cost inequality
# log(Lip) * eta^(1/p) <= C * cost, fitted once over the reference family
# depth sweep and the eta sweep {0.01, 0.05, 0.1} (largest ratio observed
# 0.0160 at depth 1); asserted thereafter with 20% slack.
CD_EMPIRICAL_CONSTANT = 0.0165

# Duality lower bound on the H^-1 norm of the trapped monochrome ball
# (measured 0.002560 at N = 1024, radius 1/8).
DUALITY_FLOOR = 0.0025

KINDS = ("decay", "upper_bound", "scaling", "mincost", "universality", "diagnostics")

_PARAM_KEYS = {
    "lambda": "lam",
    "lam": "lam",
    "a": "a",
    "p": "p",
    "theta": "theta",
    "s": "s",
    "kappa": "kappa",
    "s_bar": "s_bar",
}
_CONFIG_KEYS = {
    "tau": "tau",
    "stages": "n_stages",
    "n_stages": "n_stages",
    "grid": "grid_n",
    "grid_n": "grid_n",
    "out": "out_dir",
    "out_dir": "out_dir",
    "seed": "seed",
    "budget_cap": "budget_cap",
    "kind": "kind",
}


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    return Fraction(v) if isinstance(v, int) else Fraction(float(v))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs; with the seed it fixes the outputs."""

    kind: str
    params: BlockParams = field(default_factory=BlockParams)
    tau: Fraction = Fraction(2)
    n_stages: int = 5
    grid_n: int = 512
    out_dir: str | None = None
    seed: int = 0
    budget_cap: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; one of {KINDS}")
        if self.n_stages < 1:
            raise ConfigError(f"need at least one stage, got {self.n_stages}")
        if self.grid_n < 32:
            raise ConfigError(f"grid too coarse for the diagnostics, got {self.grid_n}")
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")

    @classmethod
    def build(cls, kind: str, mapping: dict | None = None, **overrides):
        """Config from a JSON-style mapping plus keyword overrides.

        Overrides win over the mapping; unknown keys are configuration
        errors, as are out-of-range values (BlockParams validates itself).
        Kind-specific defaults: the universality run needs nine stages on a
        1024 grid so that stage 8 tiles still hold whole cells.
        """
        merged: dict = {}
        for src in (mapping or {}), overrides:
            for k, v in src.items():
                if v is None:
                    continue
                if k in _PARAM_KEYS:
                    merged[_PARAM_KEYS[k]] = v
                elif k in _CONFIG_KEYS:
                    merged[_CONFIG_KEYS[k]] = v
                else:
                    raise ConfigError(f"unknown configuration key {k!r}")
        if "kind" in merged and merged["kind"] != kind:
            raise ConfigError(
                f"config file kind {merged['kind']!r} conflicts with requested {kind!r}"
            )
        merged.pop("kind", None)
        if kind == "universality":
            merged.setdefault("grid_n", 1024)
            merged.setdefault("n_stages", 9)
        try:
            pkw = {}
            for name in ("lam", "theta"):
                if name in merged:
                    pkw[name] = _as_fraction(merged.pop(name))
            for name in ("a", "p", "s", "kappa", "s_bar"):
                if name in merged:
                    pkw[name] = float(merged.pop(name))
            params = BlockParams(**pkw)
            cap = merged.pop("budget_cap", None)
            return cls(
                kind=kind,
                params=params,
                tau=_as_fraction(merged.pop("tau", Fraction(2))),
                n_stages=int(merged.pop("n_stages", 5)),
                grid_n=int(merged.pop("grid_n", 512)),
                out_dir=merged.pop("out_dir", None),
                seed=int(merged.pop("seed", 0)),
                budget_cap=float(cap) if cap is not None else None,
            )
        except ConfigError:
            raise
        except (CellmixError, ValueError, TypeError, ZeroDivisionError) as e:
            raise ConfigError(str(e)) from e


@dataclass(frozen=True)
class DecayFit:
    """Least-squares power law through a decay series.

    The abscissa is T_n + 1/(tau - 1) = tau^n/(tau - 1): on a geometric
    schedule this is exactly log-linear in the stage index, so the fitted
    exponent is free of the early-time offset that bends log T_n plots.
    half_width is twice the standard error of the slope (a rough 95%
    interval); finite-stage extrapolation is left to the reader.
    """

    series: tuple[tuple[float, float], ...]
    exponent: float
    half_width: float
    quantity: str
    offset: float

    def as_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "exponent": self.exponent,
            "half_width": self.half_width,
            "offset": self.offset,
            "series": [list(pt) for pt in self.series],
        }


def fit_decay(times, values, tau, quantity: str) -> DecayFit:
    """Fit value = C * (T + offset)^exponent by least squares on logs."""
    times = [float(t) for t in times]
    values = [float(v) for v in values]
    if len(times) < 3 or len(times) != len(values):
        raise ConfigError(f"decay fit needs at least 3 aligned points, got {len(times)}")
    if min(values) <= 0.0:
        raise ConfigError(f"decay fit needs positive values, got min {min(values)}")
    tau_f = float(tau)
    offset = 1.0 / (tau_f - 1.0) if tau_f != 1.0 else 0.0
    lx = np.log([t + offset for t in times])
    ly = np.log(values)
    coef, cov = np.polyfit(lx, ly, 1, cov=True)
    exponent = float(coef[0])
    half_width = 2.0 * float(np.sqrt(max(cov[0][0], 0.0)))
    if not math.isfinite(exponent):
        raise ConfigError("decay fit produced a non-finite exponent")
    return DecayFit(
        tuple(zip(times, values)), exponent, half_width, quantity, offset
    )


def _check(assertions: list, name: str, passed: bool, detail: str) -> None:
    assertions.append({"name": name, "passed": bool(passed), "detail": detail})


# ---------------------------------------------------------------------------
# decay and upper bound


def _decay_table(config: ExperimentConfig, tau: Fraction) -> dict:
    params = config.params
    if params.lam != Fraction(1, 2):
        raise ConfigError(
            "the tuned block family ships lambda = 1/2; other tilings have no "
            "exactly mixing field block to charge budgets against"
        )
    schedule = time_steps(tau, config.n_stages)
    block = reference_field_block()
    staged = StagedField(block, params.lam, schedule)
    budgets = [
        staged.stage_budget(n, s=params.s, p=params.p) for n in range(config.n_stages)
    ]
    cap = config.budget_cap if config.budget_cap is not None else 2.0 * budgets[0]
    worst = max(budgets)
    if worst > cap:
        raise BudgetUnbounded(
            f"stage budget {worst:.6g} exceeds the certified cap {cap:.6g}; "
            f"tau = {float(tau):.6g} is too slow for s = {params.s}"
        )
    evolution = evolve(
        half_split(Grid(config.grid_n)), config.n_stages, params, schedule
    )
    rows = []
    times, gs, hs, floors = [], [], [], []
    for n in range(config.n_stages + 1):
        state = evolution.state_at(n)
        g = geometric_mixing_scale(state, kappa=params.kappa).value
        h = functional_mixing_scale(state)
        # the functional decay clause is certified by duality at the
        # unmixedness witness ball: that series scales like radius^2
        ls = characteristic_length_scale(state, fill_threshold=params.fill_threshold)
        floor = h_minus1_duality_lower_bound(
            state, ls.witness, ls.value, kappa=params.kappa
        )
        t = evolution.time_of(n)
        rows.append((n, float(t), g, h, budgets[min(n, config.n_stages - 1)]))
        times.append(float(t))
        gs.append(g)
        hs.append(h)
        floors.append(floor)
    # stage 0 is the transient; asymptotic claims start at stage 1
    fit_g = fit_decay(times[1:], gs[1:], tau, "G")
    fit_h = fit_decay(times[1:], hs[1:], tau, "Hm1")
    fit_floor = fit_decay(times[1:], floors[1:], tau, "Hm1_floor")
    return {
        "kind": config.kind,
        "header": ["n", "T_n", "G", "Hm1", "budget"],
        "rows": rows,
        "budgets": budgets,
        "budget_cap": cap,
        "fit_g": fit_g,
        "fit_hm1": fit_h,
        "fit_floor": fit_floor,
        "floors": floors,
        "tau": tau,
        "summary": {
            "lam": params.lam,
            "tau": tau,
            "s": params.s,
            "p": params.p,
            "grid_n": config.grid_n,
            "n_stages": config.n_stages,
            "fit_g": fit_g.as_dict(),
            "fit_hm1": fit_h.as_dict(),
            "fit_floor": fit_floor.as_dict(),
            "budgets": budgets,
            "hm1_floors": floors,
        },
    }


def run_decay_experiment(config: ExperimentConfig) -> tuple[DecayFit, DecayFit]:
    """Evolve the reference cascade and fit decay exponents of both scales.

    Pre: tau at least lambda^(1-s), the slowest schedule with bounded
    budgets.  The fitted exponents must not beat the polynomial floor
    -1/(s-1) for the geometric scale and -2/(s-1) for the functional one.
    The geometric scale saturates its floor; the functional norm decays
    like the tile side (one power), so the -2/(s-1) clause is certified by
    its duality lower bound at the unmixedness witness ball, whose series
    scales like the ball radius squared and is also fitted and recorded.
    """
    result = decay_report(config)
    return result["fit_g"], result["fit_hm1"]


def decay_report(config: ExperimentConfig) -> dict:
    params = config.params
    floor = tau_floor(float(params.lam), params.s)
    if float(config.tau) < floor - 1e-9:
        raise TauBelowFloor(
            f"tau = {float(config.tau):.6g} is below lambda^(1-s) = {floor:.6g}; "
            "budgets would grow geometrically"
        )
    result = _decay_table(config, config.tau)
    a: list = []
    g_floor = -1.0 / (params.s - 1.0) - 0.1
    h_floor = -2.0 / (params.s - 1.0) - 0.1
    fg, fh, ff = result["fit_g"], result["fit_hm1"], result["fit_floor"]
    _check(
        a,
        "geometric exponent above polynomial floor",
        fg.exponent >= g_floor,
        f"fitted {fg.exponent:.4f} >= {g_floor:.4f}",
    )
    _check(
        a,
        "functional exponent above polynomial floor",
        fh.exponent >= h_floor,
        f"fitted {fh.exponent:.4f} >= {h_floor:.4f}",
    )
    _check(
        a,
        "measured functional norm above its certificate",
        all(
            row[3] >= floor
            for row, floor in zip(result["rows"], result["floors"])
        ),
        "duality floor dominated at every stage",
    )
    _check(
        a,
        "certified floor tracks the squared rate",
        abs(ff.exponent - (-2.0 / (params.s - 1.0))) <= 0.2,
        f"floor exponent {ff.exponent:.4f} vs {-2.0 / (params.s - 1.0):.4f}",
    )
    _check(
        a,
        "stage budgets certified under cap",
        True,
        f"sup {max(result['budgets']):.6g} <= cap {result['budget_cap']:.6g}",
    )
    result["assertions"] = a
    return result


def run_upper_bound_experiment(config: ExperimentConfig) -> DecayFit:
    """Critical schedule tau = lambda^(1-s): flat budgets, envelope decay."""
    return upper_bound_report(config)["fit_g"]


def upper_bound_report(config: ExperimentConfig) -> dict:
    params = config.params
    tau_c = Fraction(tau_floor(float(params.lam), params.s))
    result = _decay_table(config, tau_c)
    budgets = result["budgets"]
    drift = max(budgets) / min(budgets) - 1.0
    if drift > 0.10:
        raise BudgetUnbounded(
            f"budgets drift {drift:.2%} at the critical schedule; "
            "the block family is not uniform"
        )
    a: list = []
    rate = -1.0 / (params.s - 1.0)
    fg, fh = result["fit_g"], result["fit_hm1"]
    envelopes = {}
    for fit in (fg, fh):
        c_env = max(v * (t + fit.offset) ** (1.0 / (params.s - 1.0)) for t, v in fit.series)
        envelopes[fit.quantity] = c_env
        residual = max(
            v / (c_env * (t + fit.offset) ** rate) for t, v in fit.series
        )
        _check(
            a,
            f"{fit.quantity} under envelope C t^(1/(1-s))",
            residual <= 1.0 + 1e-9,
            f"C = {c_env:.4g}, max residual {residual:.4f}",
        )
    _check(
        a,
        "geometric decay at least the envelope rate",
        fg.exponent <= rate + 0.1,
        f"fitted {fg.exponent:.4f} <= {rate + 0.1:.4f}",
    )
    _check(
        a,
        "stage budgets flat at the critical schedule",
        drift <= 0.10,
        f"max/min - 1 = {drift:.2e}",
    )
    result["assertions"] = a
    result["summary"]["envelopes"] = envelopes
    result["summary"]["budget_drift"] = drift
    return result


# ---------------------------------------------------------------------------
# scaling, mincost, universality, diagnostics


def run_scaling_experiment(config: ExperimentConfig) -> dict:
    """Change-of-variables budget ratios against the exact scaling law.

    Sweeps derivative orders s in {1, 2, 1.5} and p in {2, 4} over stages
    1..3 of the rescaled vortex and scores each measured ratio against
    tau^(j(1-p)) * lambda^(j((1-s)p+2)) at 2%.
    """
    lam, tau = float(config.params.lam), float(config.tau)
    cells = []
    a: list = []
    for s_v in (1.0, 2.0, 1.5):
        for p_v in (2.0, 4.0):
            records = scaling_identity_check(
                lam, tau, s_v, p_v, stages=(1, 2, 3), n=config.grid_n
            )
            worst = max(r["rel_err"] for r in records)
            ok = worst <= 0.02
            cells.append(
                {"s": s_v, "p": p_v, "records": records, "worst_rel_err": worst, "pass": ok}
            )
            _check(
                a,
                f"scaling identity s={s_v} p={p_v}",
                ok,
                f"worst relative error {worst:.4%}",
            )
    rows = [
        (c["s"], c["p"], r["stage"], r["measured"], r["predicted"], r["rel_err"])
        for c in cells
        for r in c["records"]
    ]
    return {
        "kind": "scaling",
        "header": ["s", "p", "stage", "measured", "predicted", "rel_err"],
        "rows": rows,
        "cells": cells,
        "assertions": a,
        "summary": {
            "lam": config.params.lam,
            "tau": config.tau,
            "grid_n": config.grid_n,
            "all_pass": all(c["pass"] for c in cells),
        },
    }


def run_mincost_experiment(config: ExperimentConfig) -> dict:
    """Minimal-cost witness run for the reference family plus an eta sweep.

    On top of the depth sweep (cost floor, witness stretch, occupancy) the
    final flow map is re-scored at eta in {0.01, 0.05, 0.1} to pin the
    stretch/cost inequality log(Lip) * eta^(1/p) <= C * cost with the
    frozen empirical constant, and to confirm Lip is nonincreasing in eta.
    """
    params = config.params
    report = mincost_experiment(
        [reference_field_block()],
        params=params,
        grid_n=config.grid_n,
        seed=config.seed,
        names=["central_twist"],
    )
    member = report["members"][0]
    a: list = []
    _check(
        a,
        "tiling depth reaches the witness gate",
        report["gate_met"],
        f"lam^n = {report['lam_eff']:.4g} <= {report['gate']:.4g}",
    )
    _check(
        a,
        "measured cost above the regression floor",
        report["min_total_cost"] >= MINCOST_FLOOR,
        f"{report['min_total_cost']:.4f} >= {MINCOST_FLOOR}",
    )
    _check(
        a,
        "witness stretch certifies Lip >= 2 at the gate",
        member["witness_stretch_half_ball"] >= 2.0,
        f"half-ball stretch {member['witness_stretch_half_ball']:.2f}",
    )
    _check(
        a,
        "cost nondecreasing under tiling refinement",
        member["costs_nondecreasing"],
        "depth sweep " + ", ".join(f"{s['total_cost']:.1f}" for s in member["depth_sweep"]),
    )
    occ_worst = max(s["occupancy"] for s in member["depth_sweep"])
    _check(
        a,
        "occupancy within 1% at every depth",
        occ_worst <= 0.01,
        f"worst occupancy deviation {occ_worst:.4f}",
    )

    schedule = time_steps(Fraction(2), report["n_stages"])
    staged = StagedField(reference_field_block(), params.lam, schedule)
    fmap = flow_map_from_staged(staged, grid_n=config.grid_n)
    eta_rows = []
    lips = []
    total_cost = member["total_cost"]
    for eta in (0.01, 0.05, 0.1):
        stats = restricted_lipschitz(
            fmap,
            eta,
            pair_budget=400_000,
            seed=config.seed,
            tile_side=report["lam_eff"],
        )
        product = math.log(stats.lip) * eta ** (1.0 / params.p) if stats.lip > 1 else 0.0
        eta_rows.append((eta, stats.lip, product, product / total_cost))
        lips.append(stats.lip)
    _check(
        a,
        "restricted Lip nonincreasing in eta",
        lips[0] >= lips[1] >= lips[2],
        "lips " + ", ".join(f"{v:.2f}" for v in lips),
    )
    worst_ratio = max(r[3] for r in eta_rows)
    _check(
        a,
        "stretch/cost inequality with frozen constant",
        worst_ratio <= CD_EMPIRICAL_CONSTANT * 1.2,
        f"worst ratio {worst_ratio:.5f} <= 1.2 * {CD_EMPIRICAL_CONSTANT}",
    )
    rows = [
        (
            s["depth"],
            s["lam_eff"],
            s["total_cost"],
            s["lip"],
            s["witness_stretch"],
            s["witness_stretch_half_ball"],
            s["witness_floor"],
            s["occupancy"],
            s["cd_ratio"],
        )
        for s in member["depth_sweep"]
    ]
    report["eta_sweep"] = [
        {"eta": e, "lip": l, "cd_product": pr, "cd_ratio": ra} for e, l, pr, ra in eta_rows
    ]
    return {
        "kind": "mincost",
        "header": [
            "depth",
            "lam_eff",
            "total_cost",
            "lip",
            "witness",
            "witness_half_ball",
            "witness_floor",
            "occupancy",
            "cd_ratio",
        ],
        "rows": rows,
        "report": report,
        "assertions": a,
        "summary": {
            "min_total_cost": report["min_total_cost"],
            "floor": MINCOST_FLOOR,
            "c_emp_frozen": CD_EMPIRICAL_CONSTANT,
            "eta_sweep": report["eta_sweep"],
            "ball_radius": report["ball_radius"],
            "gate": report["gate"],
        },
    }


def run_universality_experiment(config: ExperimentConfig) -> dict:
    """Trapped-ball counterexample plus trapping-radius certification."""
    params = config.params
    inv = int(round(1.0 / float(params.lam)))
    tiles = inv ** (config.n_stages - 1)
    if config.grid_n % tiles or config.grid_n // tiles < 4:
        raise ConfigError(
            f"stage {config.n_stages - 1} tiles need at least 4 cells per side: "
            f"grid {config.grid_n} gives {config.grid_n / tiles:.2g} per tile "
            f"(use --grid {4 * tiles} or more)"
        )
    schedule = time_steps(config.tau, config.n_stages)
    evolution = evolve(
        half_split(Grid(config.grid_n)), config.n_stages, params, schedule
    )
    t_star = evolution.time_of(config.n_stages - 1)
    rho0, report = universality_counterexample(evolution, t_star)
    staged = StagedField(reference_field_block(), params.lam, schedule)
    lam = float(params.lam)
    trap_rows = []
    a: list = []
    for n in range(config.n_stages):
        radius = trapping_radius(staged, float(evolution.time_of(n)))
        bound = math.sqrt(2.0) * lam**n
        trap_rows.append((n, float(evolution.time_of(n)), radius, bound))
    _check(
        a,
        "trapping radius under sqrt(2) lam^n on every stage",
        all(r <= b + 1e-12 for _, _, r, b in trap_rows),
        "worst slack "
        + f"{max(r / b for _, _, r, b in trap_rows):.3f} of the bound",
    )
    _check(
        a,
        "counterexample ball monochrome at all sampled times",
        report["all_monochrome"],
        f"{len(report['samples'])} samples from stage {report['stage']}",
    )
    _check(
        a,
        "geometric scale pinned at the ball radius",
        report["g_floor"] >= 0.125,
        f"G floor {report['g_floor']}",
    )
    duality_min = min(s["duality_lower_bound"] for s in report["samples"])
    _check(
        a,
        "functional norm above the frozen duality floor",
        duality_min >= DUALITY_FLOOR,
        f"min duality bound {duality_min:.6f} >= {DUALITY_FLOOR}",
    )
    rows = [
        (s["stage"], s["time"], s["monochrome"], s["duality_lower_bound"])
        for s in report["samples"]
    ]
    return {
        "kind": "universality",
        "header": ["stage", "time", "monochrome", "duality_lower_bound"],
        "rows": rows,
        "trap_header": ["stage", "time", "radius", "bound"],
        "trap_rows": trap_rows,
        "report": report,
        "assertions": a,
        "summary": {
            "t_star": report["t_star"],
            "trap_bound": report["trap_bound"],
            "g_floor": report["g_floor"],
            "duality_floor": DUALITY_FLOOR,
            "grid_n": config.grid_n,
        },
    }


def run_diagnostics(config: ExperimentConfig) -> dict:
    """Fast health check of the block family and the spectral machinery."""
    a: list = []
    checks_map = validate_block(reference_map_block())
    _check(
        a,
        "map block is a cell permutation",
        checks_map["is_permutation"],
        f"resolution {checks_map['resolution']}",
    )
    checks_field = validate_block(reference_field_block())
    _check(
        a,
        "field block mixes the half split exactly",
        checks_field["mixes_half_split"] and checks_field["paths_agree"],
        f"worst tile mean {checks_field['max_tile_mean']:.2e}",
    )
    n = config.grid_n
    ax = -0.5 + (np.arange(n) + 0.5) / n
    xx = ax[:, None] * np.ones((1, n))
    worst = 0.0
    for m in (1, 2, 4):
        vals = np.sin(2.0 * math.pi * m * xx)
        measured = h_minus1_torus(vals, 1.0)
        expected = (1.0 / math.sqrt(2.0)) / (2.0 * math.pi * m)
        worst = max(worst, abs(measured / expected - 1.0))
    _check(a, "spectral oracle within 1%", worst <= 0.01, f"worst error {worst:.4%}")
    lam_cb = Fraction(1, 8)
    board = checkerboard(Grid(n), lam_cb)
    g = geometric_mixing_scale(board, kappa=config.params.kappa).value
    bound = 4.0 * math.sqrt(2.0) / config.params.kappa * float(lam_cb)
    _check(
        a,
        "checkerboard under the tiling bound",
        g <= bound,
        f"G = {g:.4f} <= (4 sqrt2 / kappa) lambda = {bound:.4f}",
    )
    rows = [(c["name"], c["passed"], c["detail"]) for c in a]
    return {
        "kind": "diagnostics",
        "header": ["check", "passed", "detail"],
        "rows": rows,
        "assertions": a,
        "summary": {"grid_n": n, "all_pass": all(c["passed"] for c in a)},
    }


# ---------------------------------------------------------------------------
# emission


def emit_outputs(results: dict, out_dir) -> list[Path]:
    """Write the CSV/JSON/SVG artifacts for one result dictionary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kind = results["kind"]
    written = [write_csv(out / f"{kind}.csv", results["header"], results["rows"])]
    payload = {
        "kind": kind,
        "summary": results.get("summary", {}),
        "assertions": results.get("assertions", []),
    }
    written.append(write_json(out / f"{kind}.json", payload))
    if "trap_rows" in results:
        written.append(
            write_csv(
                out / f"{kind}_trapping.csv",
                results["trap_header"],
                results["trap_rows"],
            )
        )
    if "fit_g" in results:
        fg, fh, ff = results["fit_g"], results["fit_hm1"], results["fit_floor"]
        xs = [t + fg.offset for t, _ in fg.series]
        s_exp = results["summary"]["s"]
        written.append(
            svg_loglog(
                out / f"{kind}.svg",
                [
                    {"label": "geometric scale", "x": xs, "y": [v for _, v in fg.series]},
                    {"label": "functional scale", "x": xs, "y": [v for _, v in fh.series]},
                    {"label": "duality floor", "x": xs, "y": [v for _, v in ff.series]},
                ],
                ref_lines=[
                    {
                        "slope": -1.0 / (s_exp - 1.0),
                        "x0": xs[0],
                        "y0": fg.series[0][1],
                        "label": "slope -1/(s-1)",
                    },
                    {
                        "slope": -2.0 / (s_exp - 1.0),
                        "x0": xs[0],
                        "y0": ff.series[0][1],
                        "label": "slope -2/(s-1)",
                    },
                ],
                title=f"{kind}: mixing scales on the offset schedule",
                xlabel="T_n + 1/(tau-1)",
                ylabel="scale",
            )
        )
    return written
