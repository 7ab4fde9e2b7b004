"""Tests for the command-line interface.

Each subcommand is exercised through :func:`prevopt.cli.dispatch`, the same
path the console script takes, against small synthetic inputs.
"""

import json

import numpy as np
import pytest

from prevopt import (
    MixturePopulation,
    ProbabilityModel,
    minimize,
    model_to_spec,
    sample,
)
from prevopt.cli import dispatch
from prevopt.mle import FitResult


def write_json(path, obj):
    path.write_text(json.dumps(obj) + "\n")


def write_values_csv(path, values):
    path.write_text("value\n" + "\n".join(repr(float(v)) for v in values) + "\n")


@pytest.fixture()
def toy_models(tmp_path):
    pos = tmp_path / "pos_model.json"
    neg = tmp_path / "neg_model.json"
    write_json(pos, model_to_spec(ProbabilityModel("triangular-up", {}, (0, 1))))
    write_json(neg, model_to_spec(ProbabilityModel("triangular-down", {}, (0, 1))))
    return str(pos), str(neg)


class TestDispatchBasics:
    def test_no_arguments_prints_usage_and_exits_one(self, capsys):
        assert dispatch([]) == 1
        err = capsys.readouterr().err
        assert "usage" in err.lower()

    def test_unknown_subcommand_exits_one(self, capsys):
        assert dispatch(["frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_help_exits_zero(self, capsys):
        assert dispatch(["--help"]) == 0
        out = capsys.readouterr().out
        for name in ("fit", "bathtub", "optimize", "estimate", "simulate", "figures"):
            assert name in out

    def test_subcommand_help_documents_flags(self, capsys):
        assert dispatch(["optimize", "--help"]) == 0
        out = capsys.readouterr().out
        for flag in ("--pos-model", "--neg-model", "--q", "--grid", "--tol", "--out"):
            assert flag in out


class TestFitCommand:
    def test_fits_two_models_from_two_csvs(self, tmp_path, capsys):
        rng = np.random.default_rng(5)
        pos_csv = tmp_path / "pos.csv"
        neg_csv = tmp_path / "neg.csv"
        # raw readings on an arbitrary instrument scale
        write_values_csv(
            pos_csv,
            (sample(ProbabilityModel("beta", {"a": 3.0, "b": 1.1}, (0, 1)), 2000, 1)
             * 72.0),
        )
        write_values_csv(neg_csv, rng.uniform(0.0, 70.0, size=2000))
        out_pos = tmp_path / "pos.json"
        out_neg = tmp_path / "neg.json"
        code = dispatch([
            "fit",
            "--pos-data", str(pos_csv), "--neg-data", str(neg_csv),
            "--pos-family", "beta", "--neg-family", "uniform",
            "--out-pos", str(out_pos), "--out-neg", str(out_neg),
        ])
        assert code == 0
        pos_spec = json.loads(out_pos.read_text())
        neg_spec = json.loads(out_neg.read_text())
        assert pos_spec["family"] == "beta"
        assert pos_spec["converged"] is True
        assert neg_spec["family"] == "uniform"
        # shared normalization record embedded in both outputs
        assert pos_spec["normalization"] == neg_spec["normalization"]
        assert pos_spec["normalization"]["epsilon"] == 0.01
        assert abs(pos_spec["params"]["a"] - 3.0) < 0.6

    def test_missing_file_exits_two_and_names_the_path(self, tmp_path, capsys):
        code = dispatch([
            "fit",
            "--pos-data", str(tmp_path / "nope.csv"),
            "--neg-data", str(tmp_path / "nope2.csv"),
            "--pos-family", "beta", "--neg-family", "uniform",
            "--out-pos", str(tmp_path / "a.json"),
            "--out-neg", str(tmp_path / "b.json"),
        ])
        assert code == 2
        assert "nope.csv" in capsys.readouterr().err

    def test_non_convergence_is_flagged_with_exit_two(
        self, tmp_path, capsys, monkeypatch
    ):
        import prevopt.cli as cli_mod

        def fake_fit(family, batch, starts=8, support=(0.0, 1.0), bins=None):
            model = ProbabilityModel("beta", {"a": 1.0, "b": 1.0}, (0.0, 1.0))
            return FitResult(model, 0.0, False, 123)

        monkeypatch.setattr(cli_mod, "fit", fake_fit)
        pos_csv = tmp_path / "pos.csv"
        neg_csv = tmp_path / "neg.csv"
        write_values_csv(pos_csv, np.linspace(1.0, 50.0, 100))
        write_values_csv(neg_csv, np.linspace(1.0, 40.0, 100))
        code = dispatch([
            "fit",
            "--pos-data", str(pos_csv), "--neg-data", str(neg_csv),
            "--pos-family", "beta", "--neg-family", "beta",
            "--out-pos", str(tmp_path / "a.json"),
            "--out-neg", str(tmp_path / "b.json"),
        ])
        assert code == 2
        assert "converge" in capsys.readouterr().err
        # outputs are still written for inspection
        assert json.loads((tmp_path / "a.json").read_text())["converged"] is False


class TestBathtubCommand:
    def test_target_mode_matches_the_toy_closed_form(self, tmp_path, toy_models):
        pos, neg = toy_models
        out = tmp_path / "domain.json"
        code = dispatch([
            "bathtub", "--pos-model", pos, "--neg-model", neg,
            "--q", "0.5", "--target", "0.25", "--branch", "plus",
            "--out", str(out),
        ])
        assert code == 0
        obj = json.loads(out.read_text())
        assert obj["branch"] == "plus"
        (lo, hi), = obj["intervals"]
        assert lo == pytest.approx(0.75, abs=1e-6)
        assert hi == pytest.approx(1.0, abs=1e-12)
        assert obj["delta"] == pytest.approx(1.0, abs=1e-5)
        assert obj["q_measure"] == pytest.approx(0.25, abs=1e-6)

    def test_delta_mode_emits_the_level_set(self, tmp_path, toy_models):
        pos, neg = toy_models
        out = tmp_path / "domain.json"
        code = dispatch([
            "bathtub", "--pos-model", pos, "--neg-model", neg,
            "--q", "0.5", "--delta", "0.0", "--out", str(out),
        ])
        assert code == 0
        obj = json.loads(out.read_text())
        (lo, hi), = obj["intervals"]
        assert lo == pytest.approx(0.5, abs=1e-9)
        assert obj["p_measure"] == pytest.approx(0.75, abs=1e-9)
        assert obj["n_measure"] == pytest.approx(0.25, abs=1e-9)

    def test_target_and_delta_together_is_a_usage_error(self, toy_models):
        pos, neg = toy_models
        code = dispatch([
            "bathtub", "--pos-model", pos, "--neg-model", neg,
            "--q", "0.5", "--target", "0.25", "--delta", "0.0",
        ])
        assert code == 1

    def test_unattainable_target_is_a_computation_error(self, tmp_path, capsys):
        # the negative density vanishes on (0.25, 0.5) while the positive
        # one does not, so the minus branch can never cover that cell and
        # its attainable measure tops out at 1 - 0.5 * 0.25 = 0.875
        pos = tmp_path / "pos.json"
        neg = tmp_path / "neg.json"
        write_json(pos, model_to_spec(ProbabilityModel("uniform", {}, (0, 1))))
        write_json(
            neg,
            model_to_spec(ProbabilityModel(
                "histogram", {"w0": 1.0, "w1": 0.0, "w2": 1.0, "w3": 2.0}, (0, 1)
            )),
        )
        code = dispatch([
            "bathtub", "--pos-model", str(pos), "--neg-model", str(neg),
            "--q", "0.5", "--target", "0.95", "--branch", "minus",
        ])
        assert code == 2
        assert "attainable" in capsys.readouterr().err


class TestOptimizeCommand:
    def test_toy_optimum_is_at_one_half(self, tmp_path, toy_models):
        pos, neg = toy_models
        out = tmp_path / "opt.json"
        code = dispatch([
            "optimize", "--pos-model", pos, "--neg-model", neg,
            "--q", "0.5", "--grid", "21", "--out", str(out),
        ])
        assert code == 0
        obj = json.loads(out.read_text())
        assert obj["q_hat_star"] == pytest.approx(0.5, abs=1e-3)
        assert obj["sigma2_star"] == pytest.approx(1.0, abs=1e-4)

    def test_matches_the_library_api_exactly(self, tmp_path, toy_models):
        pos, neg = toy_models
        out = tmp_path / "opt.json"
        trace = tmp_path / "trace.csv"
        assert dispatch([
            "optimize", "--pos-model", pos, "--neg-model", neg,
            "--q", "0.5", "--grid", "21",
            "--out", str(out), "--trace-csv", str(trace),
        ]) == 0
        obj = json.loads(out.read_text())
        pop = MixturePopulation(
            0.5,
            ProbabilityModel("triangular-up", {}, (0, 1)),
            ProbabilityModel("triangular-down", {}, (0, 1)),
        )
        direct = minimize(pop, grid_size=21)
        assert obj["q_hat_star"] == direct.q_hat_star
        assert obj["sigma2_star"] == direct.sigma2_star
        lines = trace.read_text().splitlines()
        assert lines[0] == "q_hat,sigma2_plus,sigma2_minus,diff_plus,diff_minus"
        assert len(lines) == 1 + len(direct.trace)

    def test_bad_q_is_a_usage_error(self, toy_models, capsys):
        pos, neg = toy_models
        code = dispatch([
            "optimize", "--pos-model", pos, "--neg-model", neg, "--q", "1.5",
        ])
        assert code == 1
        assert "(0, 1)" in capsys.readouterr().err


class TestEstimateCommand:
    def test_fixed_domain_worked_example(self, tmp_path, toy_models, capsys):
        pos, neg = toy_models
        data = tmp_path / "test.csv"
        write_values_csv(data, [0.2, 0.6, 0.9])
        domain = tmp_path / "domain.json"
        write_json(domain, {"intervals": [[0.5, 1.0]], "support": [0, 1]})
        out = tmp_path / "est.json"
        code = dispatch([
            "estimate", "--pos-model", pos, "--neg-model", neg,
            "--data", str(data), "--domain", str(domain), "--out", str(out),
        ])
        assert code == 0
        obj = json.loads(out.read_text())
        est = obj["estimate"]
        assert est["q_empirical_measure"] == pytest.approx(2.0 / 3.0)
        # (2/3 - 1/4) / (3/4 - 1/4)
        assert est["q_tilde_raw"] == pytest.approx(5.0 / 6.0, abs=1e-12)
        assert est["sample_count"] == 3

    def test_auto_refinement_reports_a_trace(self, tmp_path, toy_models):
        pos, neg = toy_models
        pop = MixturePopulation(
            0.3,
            ProbabilityModel("triangular-up", {}, (0, 1)),
            ProbabilityModel("triangular-down", {}, (0, 1)),
        )
        data = tmp_path / "test.csv"
        write_values_csv(data, pop.sample(2000, 13))
        out = tmp_path / "est.json"
        code = dispatch([
            "estimate", "--pos-model", pos, "--neg-model", neg,
            "--data", str(data), "--auto", "--grid", "21",
            "--max-iter", "1", "--out", str(out),
        ])
        assert code == 0
        obj = json.loads(out.read_text())
        ref = obj["refinement"]
        assert ref["stop_reason"] in ("tolerance", "max_iterations")
        assert len(ref["iterations"]) == 1
        step = ref["iterations"][0]
        assert set(step) == {"q_k", "q_hat_star", "delta", "q_tilde_next"}
        assert step["q_k"] == 0.5

    def test_domain_and_auto_are_mutually_exclusive(self, tmp_path, toy_models):
        pos, neg = toy_models
        data = tmp_path / "test.csv"
        write_values_csv(data, [0.2, 0.6])
        domain = tmp_path / "domain.json"
        write_json(domain, {"intervals": [[0.5, 1.0]], "support": [0, 1]})
        args = [
            "estimate", "--pos-model", pos, "--neg-model", neg,
            "--data", str(data),
        ]
        assert dispatch(args) == 1
        assert dispatch(args + ["--domain", str(domain), "--auto"]) == 1

    def test_normalize_flag_requires_a_record(self, tmp_path, toy_models, capsys):
        pos, neg = toy_models
        data = tmp_path / "test.csv"
        write_values_csv(data, [10.0, 20.0])
        domain = tmp_path / "domain.json"
        write_json(domain, {"intervals": [[0.5, 1.0]], "support": [0, 1]})
        code = dispatch([
            "estimate", "--pos-model", pos, "--neg-model", neg,
            "--data", str(data), "--domain", str(domain), "--normalize",
        ])
        assert code == 2
        assert "normalization" in capsys.readouterr().err

    def test_normalize_applies_the_stored_record(self, tmp_path, toy_models):
        pos, neg = toy_models
        # rewrite the positive model with a normalization record
        spec = json.loads(open(pos).read())
        spec["normalization"] = {"epsilon": 0.0, "scale": 100.0}
        write_json(tmp_path / "posn.json", spec)
        data = tmp_path / "test.csv"
        write_values_csv(data, [20.0, 60.0, 90.0])
        domain = tmp_path / "domain.json"
        write_json(domain, {"intervals": [[0.5, 1.0]], "support": [0, 1]})
        out = tmp_path / "est.json"
        code = dispatch([
            "estimate", "--pos-model", str(tmp_path / "posn.json"),
            "--neg-model", neg,
            "--data", str(data), "--domain", str(domain), "--normalize",
            "--out", str(out),
        ])
        assert code == 0
        obj = json.loads(out.read_text())
        assert obj["estimate"]["q_empirical_measure"] == pytest.approx(2.0 / 3.0)


class TestSimulateCommand:
    def scenario(self, **overrides):
        base = {
            "positive": {"family": "triangular-up", "params": {}, "support": [0, 1]},
            "negative": {"family": "triangular-down", "params": {}, "support": [0, 1]},
            "q_true": 0.3,
            "samples_per_trial": 200,
            "trials": 120,
            "seed": 11,
            "policy": "custom",
            "domain": {"intervals": [[0.5, 1.0]], "support": [0, 1]},
        }
        base.update(overrides)
        return base

    def test_report_and_per_trial_csv(self, tmp_path):
        scn = tmp_path / "scenario.json"
        write_json(scn, self.scenario())
        out = tmp_path / "report.json"
        trials_csv = tmp_path / "trials.csv"
        code = dispatch([
            "simulate", "--scenario", str(scn),
            "--out", str(out), "--trials-csv", str(trials_csv),
        ])
        assert code == 0
        obj = json.loads(out.read_text())
        assert obj["trials"] == 120
        assert obj["domain_policy"] == "custom"
        assert abs(obj["mean_estimate"] - 0.3) < 0.1
        lines = trials_csv.read_text().splitlines()
        assert lines[0] == "trial,estimate"
        assert len(lines) == 121
        ests = [float(line.split(",")[1]) for line in lines[1:]]
        assert np.mean(ests) == pytest.approx(obj["mean_estimate"], abs=1e-12)

    def test_seed_override_is_deterministic(self, tmp_path):
        scn = tmp_path / "scenario.json"
        write_json(scn, self.scenario())
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert dispatch(["simulate", "--scenario", str(scn), "--seed", "7",
                         "--out", str(a)]) == 0
        assert dispatch(["simulate", "--scenario", str(scn), "--seed", "7",
                         "--out", str(b)]) == 0
        assert a.read_text() == b.read_text()
        assert json.loads(a.read_text())["seed"] == 7

    def test_unknown_scenario_field_is_rejected(self, tmp_path, capsys):
        scn = tmp_path / "scenario.json"
        write_json(scn, self.scenario(extra_knob=1))
        assert dispatch(["simulate", "--scenario", str(scn)]) == 2
        assert "unknown" in capsys.readouterr().err

    def test_missing_scenario_field_is_rejected(self, tmp_path, capsys):
        scn = tmp_path / "scenario.json"
        obj = self.scenario()
        del obj["q_true"]
        write_json(scn, obj)
        assert dispatch(["simulate", "--scenario", str(scn)]) == 2
        assert "missing" in capsys.readouterr().err


class TestFiguresCommand:
    def test_emits_the_four_panels(self, tmp_path, toy_models):
        pos, neg = toy_models
        out_dir = tmp_path / "figs"
        code = dispatch([
            "figures", "--pos-model", pos, "--neg-model", neg,
            "--q", "0.5", "--points", "64", "--grid", "21",
            "--out-dir", str(out_dir),
        ])
        assert code == 0
        names = sorted(p.name for p in out_dir.iterdir())
        assert names == [
            "densities.csv", "diff_curve.csv", "mixture.csv", "variance_curve.csv",
        ]
        dens = (out_dir / "densities.csv").read_text().splitlines()
        assert dens[0] == "r,N_pdf,P_pdf"
        assert len(dens) == 65

    def test_diff_columns_positive_and_variances_reflect(self, tmp_path, toy_models):
        pos, neg = toy_models
        out_dir = tmp_path / "figs"
        assert dispatch([
            "figures", "--pos-model", pos, "--neg-model", neg,
            "--q", "0.5", "--points", "32", "--grid", "21",
            "--out-dir", str(out_dir),
        ]) == 0
        diff = np.genfromtxt(out_dir / "diff_curve.csv", delimiter=",", names=True)
        assert np.all(diff["diff_plus"] > 0.0)
        assert np.all(diff["diff_minus"] > 0.0)
        var = np.genfromtxt(out_dir / "variance_curve.csv", delimiter=",", names=True)
        # reflection: sigma2_plus at q_hat equals sigma2_minus at 1 - q_hat;
        # the uniform grid over [0.01, 0.99] is symmetric, so compare reversed
        assert np.allclose(
            var["sigma2_plus"], var["sigma2_minus"][::-1], rtol=1e-6
        )

    def test_degenerate_pair_is_an_error(self, tmp_path, capsys):
        model = tmp_path / "uniform.json"
        write_json(model, model_to_spec(ProbabilityModel("uniform", {}, (0, 1))))
        code = dispatch([
            "figures", "--pos-model", str(model), "--neg-model", str(model),
            "--q", "0.5", "--grid", "9", "--points", "16",
            "--out-dir", str(tmp_path / "figs"),
        ])
        assert code == 2
        assert "degenerate" in capsys.readouterr().err
