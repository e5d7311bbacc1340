"""Harness layer: config validation, decay fits, the experiment runners at a
reduced grid, and artifact emission.  Frozen numbers here were derived once
at grid 256 and guard against silent regressions."""

import json
import math
from fractions import Fraction

import pytest

from cellmix.errors import BudgetUnbounded, ConfigError, TauBelowFloor
from cellmix.harness import (
    CD_EMPIRICAL_CONSTANT,
    MINCOST_FLOOR,
    DecayFit,
    ExperimentConfig,
    decay_report,
    emit_outputs,
    fit_decay,
    run_decay_experiment,
    run_diagnostics,
    run_mincost_experiment,
    run_scaling_experiment,
    run_universality_experiment,
    run_upper_bound_experiment,
    upper_bound_report,
)

C0 = 16.216066258652525  # action cost of one tuned twist stage


@pytest.fixture(scope="module")
def decay256():
    return decay_report(ExperimentConfig.build("decay", {"grid": 256}))


@pytest.fixture(scope="module")
def upper256():
    # the requested tau is irrelevant: the critical schedule is forced
    return upper_bound_report(ExperimentConfig.build("upper_bound", {"grid": 256, "tau": "3"}))


@pytest.fixture(scope="module")
def mincost256():
    return run_mincost_experiment(ExperimentConfig.build("mincost", {"grid": 256}))


class TestExperimentConfig:
    def test_defaults(self):
        c = ExperimentConfig.build("decay")
        assert c.kind == "decay"
        assert c.params.lam == Fraction(1, 2)
        assert c.tau == Fraction(2)
        assert (c.n_stages, c.grid_n, c.seed) == (5, 512, 0)
        assert c.out_dir is None and c.budget_cap is None

    def test_universality_defaults(self):
        c = ExperimentConfig.build("universality")
        assert (c.grid_n, c.n_stages) == (1024, 9)

    def test_overrides_beat_mapping(self):
        c = ExperimentConfig.build("decay", {"grid": 128, "tau": "3/2"}, grid=256)
        assert c.grid_n == 256
        assert c.tau == Fraction(3, 2)

    def test_none_overrides_skipped(self):
        # the command line passes None for every flag the user omitted
        c = ExperimentConfig.build("decay", {"grid": 64}, grid=None, tau=None)
        assert c.grid_n == 64

    def test_string_coercions(self):
        c = ExperimentConfig.build("decay", {"lambda": "1/2", "tau": "2", "s": 1.5})
        assert c.params.lam == Fraction(1, 2)
        assert c.tau == Fraction(2)
        assert c.params.s == 1.5

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown configuration key"):
            ExperimentConfig.build("decay", {"grids": 128})

    def test_kind_conflict(self):
        with pytest.raises(ConfigError, match="conflicts"):
            ExperimentConfig.build("decay", {"kind": "scaling"})
        c = ExperimentConfig.build("decay", {"kind": "decay"})
        assert c.kind == "decay"

    def test_bad_parameter_values_become_config_errors(self):
        for mapping in (
            {"lambda": "2/3"},
            {"lambda": "0"},
            {"s": 1.0},
            {"p": 0.5},
            {"tau": "0"},
            {"stages": 0},
            {"grid": 16},
            {"seed": -1},
            {"tau": "nope"},
        ):
            with pytest.raises(ConfigError):
                ExperimentConfig.build("decay", mapping)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="unknown experiment kind"):
            ExperimentConfig(kind="frobnicate")


class TestFitDecay:
    def test_exact_power_law_on_offset_schedule(self):
        # T_n + 1/(tau-1) = tau^n/(tau-1): values lam^n give slope -1 exactly
        times = [2.0**n - 1.0 for n in range(1, 6)]
        values = [0.5**n for n in range(1, 6)]
        fit = fit_decay(times, values, Fraction(2), "G")
        assert fit.offset == 1.0
        assert fit.exponent == pytest.approx(-1.0, abs=1e-12)
        assert fit.half_width < 1e-12

    def test_tau_one_uses_raw_times(self):
        times = [float(n) for n in range(1, 7)]
        values = [t**-2.0 for t in times]
        fit = fit_decay(times, values, Fraction(1), "Hm1")
        assert fit.offset == 0.0
        assert fit.exponent == pytest.approx(-2.0, abs=1e-12)

    def test_as_dict_round_trip(self):
        fit = fit_decay([1.0, 3.0, 7.0], [0.5, 0.25, 0.125], Fraction(2), "G")
        d = fit.as_dict()
        assert d["quantity"] == "G"
        assert d["exponent"] == fit.exponent
        assert d["series"] == [[1.0, 0.5], [3.0, 0.25], [7.0, 0.125]]

    def test_guards(self):
        with pytest.raises(ConfigError, match="at least 3"):
            fit_decay([1.0, 2.0], [1.0, 0.5], Fraction(2), "G")
        with pytest.raises(ConfigError, match="at least 3"):
            fit_decay([1.0, 2.0, 3.0], [1.0, 0.5], Fraction(2), "G")
        with pytest.raises(ConfigError, match="positive"):
            fit_decay([1.0, 2.0, 3.0], [1.0, 0.0, 0.5], Fraction(2), "G")


class TestDecayReport:
    def test_all_assertions_pass(self, decay256):
        assert [a["name"] for a in decay256["assertions"]] == [
            "geometric exponent above polynomial floor",
            "functional exponent above polynomial floor",
            "measured functional norm above its certificate",
            "certified floor tracks the squared rate",
            "stage budgets certified under cap",
        ]
        assert all(a["passed"] for a in decay256["assertions"])

    def test_geometric_exponent_is_minus_one(self, decay256):
        fit = decay256["fit_g"]
        assert fit.exponent == pytest.approx(-1.0, abs=1e-9)
        assert fit.half_width < 1e-9

    def test_functional_exponent_tracks_tile_side(self, decay256):
        # the raw norm decays one power, like the tile side
        fit = decay256["fit_hm1"]
        assert -1.1 <= fit.exponent <= -0.9
        assert fit.exponent == pytest.approx(-0.98585381, abs=1e-4)

    def test_certified_floor_tracks_squared_rate(self, decay256):
        fit = decay256["fit_floor"]
        assert abs(fit.exponent - (-2.0)) <= 0.05
        assert fit.exponent == pytest.approx(-1.99491525, abs=1e-4)

    def test_certificate_scales_like_radius_squared(self, decay256):
        # stage 0 is the transient; from stage 1 on the ratio is flat
        ratios = [f / 0.25**n for n, f in enumerate(decay256["floors"])][1:]
        assert max(ratios) / min(ratios) <= 1.03

    def test_measured_norm_dominates_certificate(self, decay256):
        for row, floor in zip(decay256["rows"], decay256["floors"]):
            assert row[3] >= floor

    def test_rows_schema(self, decay256):
        assert decay256["header"] == ["n", "T_n", "G", "Hm1", "budget"]
        assert len(decay256["rows"]) == 6
        for n, row in enumerate(decay256["rows"]):
            assert row[0] == n
            assert row[1] == pytest.approx(2.0**n - 1.0, abs=1e-12)

    def test_geometric_scale_halves_per_stage(self, decay256):
        rows = decay256["rows"]
        assert rows[1][2] == pytest.approx(math.sqrt(2.0) / 4.0, rel=1e-12)
        for n in range(1, 5):
            assert rows[n][2] / rows[n + 1][2] == pytest.approx(2.0, rel=1e-9)

    def test_budgets_exactly_flat_at_critical_tau(self, decay256):
        budgets = decay256["budgets"]
        assert max(budgets) == min(budgets)
        assert budgets[0] == pytest.approx(6050828.295724203, rel=1e-12)

    def test_run_decay_experiment_returns_both_fits(self, decay256):
        fg, fh = run_decay_experiment(ExperimentConfig.build("decay", {"grid": 256}))
        assert isinstance(fg, DecayFit) and isinstance(fh, DecayFit)
        assert (fg.quantity, fh.quantity) == ("G", "Hm1")
        assert fg.exponent == pytest.approx(decay256["fit_g"].exponent, rel=1e-12)

    def test_exponent_shallower_for_slower_schedules(self, decay256):
        # doubling tau past critical halves the decay per unit log-time
        slower = decay_report(ExperimentConfig.build("decay", {"grid": 256, "tau": "4"}))
        assert slower["fit_g"].exponent == pytest.approx(-0.5, abs=0.01)
        assert slower["fit_g"].exponent > decay256["fit_g"].exponent + 0.3

    def test_tau_below_floor_refused(self):
        with pytest.raises(TauBelowFloor):
            decay_report(ExperimentConfig.build("decay", {"tau": "1", "grid": 64}))
        with pytest.raises(TauBelowFloor):
            decay_report(
                ExperimentConfig.build("decay", {"tau": "3/2", "s": 2.0, "grid": 64})
            )

    def test_budget_cap_enforced(self):
        with pytest.raises(BudgetUnbounded):
            decay_report(
                ExperimentConfig.build("decay", {"grid": 64, "budget_cap": 1.0})
            )

    def test_only_the_tuned_tiling_ships(self):
        # lambda != 1/2 has no exactly mixing field block to charge against
        config = ExperimentConfig.build("decay", {"lambda": "1/4", "tau": "4"})
        with pytest.raises(ConfigError, match="lambda = 1/2"):
            decay_report(config)


class TestUpperBoundReport:
    def test_all_assertions_pass(self, upper256):
        assert all(a["passed"] for a in upper256["assertions"])
        assert [a["name"] for a in upper256["assertions"]] == [
            "G under envelope C t^(1/(1-s))",
            "Hm1 under envelope C t^(1/(1-s))",
            "geometric decay at least the envelope rate",
            "stage budgets flat at the critical schedule",
        ]

    def test_critical_schedule_forced(self, upper256):
        # tau = lambda^(1-s) = 2 regardless of the requested tau = 3
        assert upper256["tau"] == Fraction(2)
        assert upper256["summary"]["budget_drift"] == 0.0

    def test_envelope_constants(self, upper256):
        env = upper256["summary"]["envelopes"]
        assert env["G"] == pytest.approx(math.sqrt(2.0) / 2.0, rel=1e-9)
        assert 0.15 < env["Hm1"] < 0.35

    def test_runner_returns_geometric_fit(self):
        fit = run_upper_bound_experiment(
            ExperimentConfig.build("upper_bound", {"grid": 256})
        )
        assert fit.quantity == "G"
        assert fit.exponent <= -0.9


class TestScalingRunner:
    def test_all_identities_within_tolerance(self):
        result = run_scaling_experiment(ExperimentConfig.build("scaling", {"grid": 256}))
        assert result["summary"]["all_pass"]
        assert len(result["rows"]) == 18
        assert {(c["s"], c["p"]) for c in result["cells"]} == {
            (1.0, 2.0),
            (1.0, 4.0),
            (2.0, 2.0),
            (2.0, 4.0),
            (1.5, 2.0),
            (1.5, 4.0),
        }
        worst = max(c["worst_rel_err"] for c in result["cells"])
        assert worst <= 0.02

    def test_coarse_grid_honestly_fails(self):
        # at 64 cells the discrete ratios miss the exact law by far more
        # than 2%; the runner must report that, not hide it
        result = run_scaling_experiment(ExperimentConfig.build("scaling", {"grid": 64}))
        assert not result["summary"]["all_pass"]


class TestMincostRunner:
    def test_all_assertions_pass(self, mincost256):
        failed = [a["name"] for a in mincost256["assertions"] if not a["passed"]]
        assert failed == []

    def test_cost_floor(self, mincost256):
        total = mincost256["summary"]["min_total_cost"]
        assert total == pytest.approx(5.0 * C0, rel=1e-12)
        assert total >= MINCOST_FLOOR

    def test_depth_sweep_shape(self, mincost256):
        rows = mincost256["rows"]
        assert len(rows) == 5
        for k, row in enumerate(rows, start=1):
            assert row[0] == k
            assert row[1] == pytest.approx(0.5**k, rel=1e-12)
            assert row[2] == pytest.approx(k * C0, rel=1e-12)

    def test_eta_sweep_monotone_and_bounded(self, mincost256):
        sweep = mincost256["summary"]["eta_sweep"]
        assert [e["eta"] for e in sweep] == [0.01, 0.05, 0.1]
        lips = [e["lip"] for e in sweep]
        assert lips[0] >= lips[1] >= lips[2] > 1.0
        assert max(e["cd_ratio"] for e in sweep) <= 1.2 * CD_EMPIRICAL_CONSTANT

    def test_witness_geometry(self, mincost256):
        assert mincost256["summary"]["ball_radius"] == pytest.approx(0.2973, abs=5e-4)
        assert mincost256["summary"]["gate"] == pytest.approx(
            3.0 * 0.25 / (16.0 * math.sqrt(2.0)), rel=1e-12
        )


class TestUniversalityGuard:
    def test_grid_too_coarse_is_a_config_error(self):
        config = ExperimentConfig.build("universality", {"grid": 512})
        with pytest.raises(ConfigError, match="4 cells per side"):
            run_universality_experiment(config)


class TestDiagnosticsRunner:
    def test_all_checks_pass(self):
        result = run_diagnostics(ExperimentConfig.build("diagnostics", {"grid": 128}))
        assert result["summary"]["all_pass"]
        assert [a["name"] for a in result["assertions"]] == [
            "map block is a cell permutation",
            "field block mixes the half split exactly",
            "spectral oracle within 1%",
            "checkerboard under the tiling bound",
        ]
        assert result["header"] == ["check", "passed", "detail"]


class TestEmission:
    def test_decay_artifacts(self, decay256, tmp_path):
        written = emit_outputs(decay256, tmp_path)
        assert [p.name for p in written] == ["decay.csv", "decay.json", "decay.svg"]
        csv_lines = (tmp_path / "decay.csv").read_text().splitlines()
        assert csv_lines[0] == "n,T_n,G,Hm1,budget"
        assert len(csv_lines) == 7
        payload = json.loads((tmp_path / "decay.json").read_text())
        assert set(payload) == {"kind", "summary", "assertions"}
        assert payload["kind"] == "decay"
        assert payload["summary"]["fit_g"]["exponent"] == pytest.approx(-1.0, abs=1e-9)
        svg = (tmp_path / "decay.svg").read_text()
        assert svg.count("<polyline") == 3
        assert svg.count("stroke-dasharray") == 2

    def test_byte_identical_across_runs(self, decay256, tmp_path):
        first = emit_outputs(decay256, tmp_path / "a")
        second = emit_outputs(decay256, tmp_path / "b")
        for p, q in zip(first, second):
            assert p.read_bytes() == q.read_bytes()

    def test_trapping_table_written(self, tmp_path):
        stub = {
            "kind": "universality",
            "header": ["stage", "time", "monochrome", "duality_lower_bound"],
            "rows": [(8, 255.0, True, 0.00256)],
            "trap_header": ["stage", "time", "radius", "bound"],
            "trap_rows": [(0, 0.0, 0.9437, 1.4142)],
            "summary": {},
            "assertions": [],
        }
        written = emit_outputs(stub, tmp_path)
        assert (tmp_path / "universality_trapping.csv").exists()
        assert [p.name for p in written] == [
            "universality.csv",
            "universality.json",
            "universality_trapping.csv",
        ]
