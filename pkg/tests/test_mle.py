"""Tests for normalization and maximum-likelihood fitting."""

import numpy as np
import pytest

from prevopt import ProbabilityModel, sample
from prevopt.mle import (
    FitResult,
    Normalization,
    SampleBatch,
    apply_normalization,
    fit,
    fit_result_to_spec,
    negative_log_likelihood,
    normalize,
    read_csv_batch,
    start_points,
    write_csv_batch,
)

UNIT = (0.0, 1.0)


class TestSampleBatch:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            SampleBatch(np.array([]), "test")

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            SampleBatch(np.array([0.1, np.nan]), "test")

    def test_rejects_bad_label(self):
        with pytest.raises(ValueError):
            SampleBatch(np.array([0.1]), "calibration")


class TestNormalize:
    def test_single_value_maps_to_one(self):
        out, rec = normalize([SampleBatch(np.array([0.99]), "positive-training")], 0.01)
        assert rec.scale == pytest.approx(1.0)
        assert out[0].values[0] == pytest.approx(1.0)

    def test_contract_example(self):
        raw = SampleBatch(np.array([0.0, 0.49, 0.99]), "positive-training")
        out, rec = normalize([raw], 0.01)
        np.testing.assert_allclose(out[0].values, [0.01, 0.5, 1.0], atol=1e-15)
        assert rec == Normalization(epsilon=0.01, scale=1.0)

    def test_default_epsilon(self):
        # default shift is 0.01
        raw = SampleBatch(np.array([0.99]), "positive-training")
        _, rec = normalize([raw])
        assert rec.epsilon == 0.01

    def test_shared_scale_across_batches(self):
        pos = SampleBatch(np.array([0.0, 1.99]), "positive-training")
        neg = SampleBatch(np.array([0.0, 0.99]), "negative-training")
        out, rec = normalize([pos, neg], 0.01)
        assert rec.scale == pytest.approx(2.0)
        np.testing.assert_allclose(out[0].values, [0.005, 1.0])
        np.testing.assert_allclose(out[1].values, [0.005, 0.5])
        assert out[1].normalization == rec

    def test_positive_max_is_exactly_one(self):
        rng = np.random.default_rng(0)
        pos = SampleBatch(rng.random(100) * 7.3, "positive-training")
        out, _ = normalize([pos], 0.01)
        assert float(np.max(out[0].values)) == 1.0
        assert float(np.min(out[0].values)) > 0.0

    def test_requires_positive_batch(self):
        with pytest.raises(ValueError, match="positive-training"):
            normalize([SampleBatch(np.array([0.5]), "negative-training")])

    def test_rejects_negative_raw_values(self):
        with pytest.raises(ValueError, match="nonnegative"):
            normalize([SampleBatch(np.array([-0.1, 0.5]), "positive-training")])

    def test_all_zero_positive_without_shift_rejected(self):
        with pytest.raises(ValueError, match="all zero"):
            normalize([SampleBatch(np.array([0.0, 0.0]), "positive-training")], 0.0)

    def test_batch_above_positive_scale_rejected(self):
        pos = SampleBatch(np.array([0.5]), "positive-training")
        neg = SampleBatch(np.array([0.9]), "negative-training")
        with pytest.raises(ValueError, match="exceeds"):
            normalize([pos, neg], 0.01)

    def test_renormalizing_with_zero_shift_is_identity(self):
        raw = SampleBatch(np.array([0.2, 0.7, 0.99]), "positive-training")
        once, _ = normalize([raw], 0.01)
        twice, rec = normalize(once, 0.0)
        assert rec.scale == pytest.approx(1.0)
        np.testing.assert_array_equal(once[0].values, twice[0].values)


class TestApplyNormalization:
    RECORD = Normalization(epsilon=0.0, scale=100.0)

    def test_maps_values_with_the_stored_record(self):
        batch = apply_normalization([20.0, 60.0, 90.0], self.RECORD)
        np.testing.assert_allclose(batch.values, [0.2, 0.6, 0.9])
        assert batch.label == "test"
        assert batch.normalization == self.RECORD

    def test_small_overshoot_clamps_to_the_support_edge(self):
        # the scale is a training-batch maximum, so fresh test data may
        # overshoot it slightly; that is fluctuation, not a mismatch
        batch = apply_normalization([101.5, -1.0, 50.0], self.RECORD)
        np.testing.assert_allclose(batch.values, [1.0, 0.0, 0.5])

    def test_large_overshoot_raises(self):
        with pytest.raises(ValueError, match="does not match"):
            apply_normalization([110.0, 50.0], self.RECORD)
        with pytest.raises(ValueError, match="does not match"):
            apply_normalization([-10.0, 50.0], self.RECORD)

    def test_epsilon_shift_applied(self):
        record = Normalization(epsilon=0.01, scale=1.0)
        batch = apply_normalization([0.0, 0.49, 0.99], record)
        np.testing.assert_allclose(batch.values, [0.01, 0.5, 1.0])


class TestFit:
    def test_beta_recovery(self):
        true = ProbabilityModel("beta", {"a": 2.0, "b": 5.0}, UNIT)
        batch = SampleBatch(sample(true, 5000, 123), "negative-training")
        result = fit("beta", batch)
        assert result.converged
        assert result.model.params["a"] == pytest.approx(2.0, rel=0.10)
        assert result.model.params["b"] == pytest.approx(5.0, rel=0.10)

    def test_burr_recovery(self):
        true = ProbabilityModel(
            "burr-truncated", {"c": 2.0, "k": 1.2, "scale": 0.07}, UNIT
        )
        batch = SampleBatch(sample(true, 5000, 7), "negative-training")
        result = fit("burr-truncated", batch)
        assert result.converged
        assert result.model.params["c"] == pytest.approx(2.0, rel=0.15)
        assert result.model.params["scale"] == pytest.approx(0.07, rel=0.15)

    def test_uniform_nll_is_zero(self):
        batch = SampleBatch(np.linspace(0.05, 0.95, 20), "test")
        result = fit("uniform", batch)
        assert result.negative_log_likelihood == pytest.approx(0.0, abs=1e-12)
        assert result.converged

    def test_reported_nll_matches_model(self):
        # re-evaluating at the returned parameters reproduces the NLL
        true = ProbabilityModel("beta", {"a": 2.0, "b": 5.0}, UNIT)
        batch = SampleBatch(sample(true, 2000, 5), "negative-training")
        result = fit("beta", batch)
        again = negative_log_likelihood(result.model, batch.values)
        assert again == pytest.approx(result.negative_log_likelihood, abs=1e-9)

    def test_nll_not_above_any_start_point(self):
        true = ProbabilityModel("beta", {"a": 3.0, "b": 3.0}, UNIT)
        batch = SampleBatch(sample(true, 1000, 9), "negative-training")
        result = fit("beta", batch, starts=6)
        for a, b in start_points("beta", 6):
            start_model = ProbabilityModel("beta", {"a": a, "b": b}, UNIT)
            start_nll = negative_log_likelihood(start_model, batch.values)
            assert result.negative_log_likelihood <= start_nll + 1e-9

    def test_deterministic(self):
        true = ProbabilityModel("beta", {"a": 2.0, "b": 5.0}, UNIT)
        batch = SampleBatch(sample(true, 1000, 3), "negative-training")
        r1 = fit("beta", batch)
        r2 = fit("beta", batch)
        assert r1 == r2

    def test_boundary_value_keeps_likelihood_finite(self):
        # the positive maximum is exactly 1 after normalization; a beta
        # with b > 1 has zero density there, so the guarded evaluation
        # must stay finite
        values = np.concatenate([np.linspace(0.05, 0.95, 50), [1.0]])
        batch = SampleBatch(values, "positive-training")
        result = fit("beta", batch)
        assert np.isfinite(result.negative_log_likelihood)

    def test_histogram_closed_form(self):
        values = np.array([0.1] * 6 + [0.6] * 2 + [0.9] * 2)
        result = fit("histogram", SampleBatch(values, "test"), bins=2)
        assert result.model.params == {"w0": 6.0, "w1": 4.0}
        assert result.converged

    def test_histogram_requires_bins(self):
        with pytest.raises(ValueError, match="bin count"):
            fit("histogram", SampleBatch(np.linspace(0.1, 0.9, 20), "test"))

    def test_small_batch_rejected(self):
        with pytest.raises(ValueError, match="at least"):
            fit("beta", SampleBatch(np.array([0.5, 0.6]), "test"))

    def test_values_outside_support_rejected(self):
        batch = SampleBatch(np.linspace(0.5, 1.5, 20), "test")
        with pytest.raises(ValueError, match="support"):
            fit("beta", batch)

    def test_unknown_family_rejected(self):
        batch = SampleBatch(np.linspace(0.1, 0.9, 20), "test")
        with pytest.raises(ValueError):
            fit("gauss", batch)

    @pytest.mark.parametrize(
        "family,params",
        [
            ("beta", {"a": 2.0, "b": 5.0}),
            ("burr-truncated", {"c": 2.0, "k": 1.2, "scale": 0.07}),
        ],
    )
    def test_simulate_and_refit_short(self, family, params):
        # light version of the recovery sweep: 5 repetitions at n=5000
        true = ProbabilityModel(family, params, UNIT)
        for rep in range(5):
            batch = SampleBatch(sample(true, 5000, (400, rep)), "test")
            got = fit(family, batch).model.params
            for name, value in params.items():
                assert got[name] == pytest.approx(value, rel=0.25), (rep, name)


class TestStartPoints:
    def test_within_boxes(self):
        pts = start_points("burr-truncated", 8)
        assert pts.shape == (8, 3)
        assert np.all(pts[:, 0] >= 0.5) and np.all(pts[:, 0] <= 30.0)
        assert np.all(pts[:, 2] >= 1e-3) and np.all(pts[:, 2] <= 3.0)

    def test_deterministic(self):
        np.testing.assert_array_equal(start_points("beta", 5), start_points("beta", 5))


class TestSerialization:
    def test_fit_spec_fields(self):
        true = ProbabilityModel("beta", {"a": 2.0, "b": 5.0}, UNIT)
        batch = SampleBatch(sample(true, 1000, 1), "negative-training")
        result = fit("beta", batch)
        spec = fit_result_to_spec(result)
        assert set(spec) == {"family", "params", "support", "nll", "converged"}
        assert spec["family"] == "beta"
        assert spec["converged"] is True

    def test_csv_round_trip(self, tmp_path):
        batch = SampleBatch(np.array([0.125, 0.5, 0.875]), "test")
        path = tmp_path / "vals.csv"
        write_csv_batch(path, batch)
        again = read_csv_batch(path, "test")
        np.testing.assert_array_equal(again.values, batch.values)
        assert again.label == "test"

    def test_csv_without_header(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("0.25\n0.75\n")
        batch = read_csv_batch(path, "unlabeled")
        np.testing.assert_array_equal(batch.values, [0.25, 0.75])

    def test_csv_bad_row_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("value\n0.25\noops\n")
        with pytest.raises(ValueError, match="row 3"):
            read_csv_batch(path, "test")

    def test_csv_empty_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("value\n")
        with pytest.raises(ValueError, match="no measurements"):
            read_csv_batch(path, "test")
