"""Config validation, Monte Carlo driver, persistence and exports."""
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

import fbsheet.harness as harness
from fbsheet import (
    ConfigError,
    DimensionOverflowError,
    ExperimentConfig,
    ExperimentError,
    FbsheetError,
    Field,
    FieldFormatError,
    InsufficientReplicatesError,
    MagicMismatchError,
    TruncatedPayloadError,
    build_system,
    daubechies_filter,
    fit_system,
    load_field,
    logscale_export,
    octave_box,
    run_experiment,
    save_field,
    summarize,
    synth_fbs,
    write_estimates_csv,
    write_summary_csv,
)

TINY = dict(hurst=(0.5, 0.5), dims=(128, 128), replicates=4, seed=41)


class TestSummarize:
    def test_exact_estimates(self):
        est = np.full((5, 2), 0.5)
        table = summarize(est, (0.5, 0.5), estimator="ols")
        for axis in (1, 2):
            row = table.row("ols", axis)
            assert row.mean == 0.5
            assert row.std == 0.0
            assert row.rmse == 0.0

    def test_hand_computed(self):
        table = summarize(np.array([[0.4], [0.6]]), (0.5,))
        row = table.rows[0]
        assert row.mean == pytest.approx(0.5)
        assert row.std == pytest.approx(np.sqrt(0.02), abs=1e-12)
        assert row.std == pytest.approx(0.1414, abs=1e-4)
        assert row.rmse == pytest.approx(0.1, abs=1e-12)

    @given(
        st.integers(2, 30),
        st.integers(1, 3),
        st.floats(0.05, 0.95),
        st.integers(0, 2**31 - 1),
    )
    def test_rmse_consistency(self, n_rep, d, truth, seed):
        est = 0.5 + 0.2 * np.random.default_rng(seed).standard_normal((n_rep, d))
        table = summarize(est, (truth,) * d)
        for row in table.rows:
            bias = row.mean - row.truth
            popvar = row.std**2 * (n_rep - 1) / n_rep
            assert abs(row.rmse**2 - (bias**2 + popvar)) < 1e-10

    def test_too_few_replicates(self):
        with pytest.raises(InsufficientReplicatesError):
            summarize(np.array([[0.5]]), (0.5,))


class TestExperimentConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown"):
            ExperimentConfig.from_dict({**TINY, "replicatess": 3})

    def test_missing_key_rejected(self):
        with pytest.raises(ConfigError, match="missing"):
            ExperimentConfig.from_dict({"hurst": [0.5], "dims": [128]})

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({**TINY, "dimension": 3})

    def test_hurst_out_of_range(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(hurst=(1.2, 0.5), dims=(128, 128), replicates=2, seed=0)

    def test_order_below_two_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(**TINY, n_vanishing=1)

    def test_estimator_names_checked(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(**TINY, estimators=("mle",))

    def test_box_incompatible_with_dims(self):
        with pytest.raises(ConfigError, match="octave box"):
            ExperimentConfig(hurst=(0.5,), dims=(64,), replicates=2, seed=0)

    def test_from_json_roundtrip(self, tmp_path):
        path = tmp_path / "config.json"
        raw = {
            "dimension": 2,
            "hurst": [0.3, 0.8],
            "dims": [128, 128],
            "replicates": 3,
            "seed": 7,
            "estimators": ["ols"],
        }
        path.write_text(json.dumps(raw))
        config = ExperimentConfig.from_json(path)
        assert config.hurst == (0.3, 0.8)
        assert config.estimators == ("ols",)
        assert config.octaves() == octave_box((3, 3), (4, 4))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json(path)


class TestRunExperiment:
    def test_deterministic_across_runs_and_threads(self):
        config = ExperimentConfig(**TINY)
        first = run_experiment(config, threads=1)
        second = run_experiment(config, threads=1)
        third = run_experiment(config, threads=2)
        for name in config.estimators:
            np.testing.assert_array_equal(first.estimates[name], second.estimates[name])
            np.testing.assert_array_equal(first.estimates[name], third.estimates[name])

    def test_single_replicate_determinism(self):
        config = ExperimentConfig(hurst=(0.5,), dims=(1024,), replicates=1, seed=3)
        with pytest.raises(InsufficientReplicatesError):
            run_experiment(config)

    def test_summary_matches_estimates(self):
        config = ExperimentConfig(**TINY, estimators=("ols",))
        result = run_experiment(config)
        est = result.estimates["ols"]
        row = result.summary.row("ols", 1)
        assert row.mean == pytest.approx(est[:, 0].mean())
        assert row.std == pytest.approx(est[:, 0].std(ddof=1))

    def test_failure_accounting(self, monkeypatch):
        real = harness._estimate_field
        calls = {"n": 0}

        def flaky(field, filt, octaves, config):
            calls["n"] += 1
            if calls["n"] == 2:
                raise FbsheetError("injected")
            return real(field, filt, octaves, config)

        monkeypatch.setattr(harness, "_estimate_field", flaky)
        config = ExperimentConfig(
            hurst=(0.5, 0.5), dims=(128, 128), replicates=40, seed=5, estimators=("ols",)
        )
        result = run_experiment(config)
        assert result.failures == 1
        est = result.estimates["ols"]
        assert np.isnan(est[1]).all()
        ok = est[~np.isnan(est).any(axis=1)]
        assert len(ok) == 39
        # statistics computed on the surviving replicates only
        assert result.summary.row("ols", 1).mean == pytest.approx(ok[:, 0].mean())
        assert result.summary.failures == 1

    def test_too_many_failures_aborts(self, monkeypatch):
        def broken(field, filt, octaves, config):
            raise FbsheetError("injected")

        monkeypatch.setattr(harness, "_estimate_field", broken)
        config = ExperimentConfig(**TINY)
        with pytest.raises(ExperimentError):
            run_experiment(config)


class TestFieldFiles:
    def test_roundtrip_bit_exact(self, tmp_path):
        field = synth_fbs((0.3, 0.8), (32, 16), seed=2)
        path = tmp_path / "field.fbs"
        save_field(field, path)
        loaded = load_field(path)
        np.testing.assert_array_equal(loaded.data, field.data)
        assert loaded.hurst_truth == field.hurst_truth

    def test_roundtrip_without_truth(self, tmp_path):
        field = Field(np.random.default_rng(0).standard_normal((4, 5, 6)))
        path = tmp_path / "field.fbs"
        save_field(field, path)
        loaded = load_field(path)
        np.testing.assert_array_equal(loaded.data, field.data)
        assert loaded.hurst_truth is None

    @given(
        dims=st.lists(st.integers(2, 6), min_size=1, max_size=3),
        seed=st.integers(0, 2**31 - 1),
    )
    def test_roundtrip_property(self, dims, seed, tmp_path_factory):
        data = np.random.default_rng(seed).standard_normal(tuple(dims))
        path = tmp_path_factory.mktemp("fields") / "f.fbs"
        save_field(Field(data), path)
        np.testing.assert_array_equal(load_field(path).data, data)

    def test_header_size_2d(self, tmp_path):
        field = Field(np.zeros((512, 512)))
        path = tmp_path / "f.fbs"
        save_field(field, path)
        size = path.stat().st_size
        assert size == 37 + 512 * 512 * 8

    def test_magic_mismatch(self, tmp_path):
        path = tmp_path / "f.fbs"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(MagicMismatchError):
            load_field(path)

    def test_truncated_payload(self, tmp_path):
        field = Field(np.zeros((8, 8)))
        path = tmp_path / "f.fbs"
        save_field(field, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-16])
        with pytest.raises(TruncatedPayloadError):
            load_field(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "f.fbs"
        path.write_bytes(b"FBS1\x02" + b"\x00" * 8)
        with pytest.raises(TruncatedPayloadError):
            load_field(path)

    def test_dimension_overflow(self, tmp_path):
        path = tmp_path / "f.fbs"
        path.write_bytes(b"FBS1\x00")
        with pytest.raises(DimensionOverflowError):
            load_field(path)
        path.write_bytes(b"FBS1\xff" + b"\x00" * 1024)
        with pytest.raises(DimensionOverflowError):
            load_field(path)

    def test_trailing_garbage(self, tmp_path):
        field = Field(np.zeros((4, 4)))
        path = tmp_path / "f.fbs"
        save_field(field, path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(FieldFormatError):
            load_field(path)


class TestExports:
    def test_logscale_export(self, tmp_path):
        field = synth_fbs((0.5, 0.5), (256, 256), seed=13)
        system = build_system(field, daubechies_filter(3), octave_box((3, 3), (4, 4)))
        report = fit_system(system)
        path = tmp_path / "logscale.csv"
        logscale_export(system, report, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "j_1,j_2,log2_S,fitted,residual,n_J"
        assert len(lines) == 5
        rows = [line.split(",") for line in lines[1:]]
        fitted = system.design @ report.alpha
        for idx, row in enumerate(rows):
            assert float(row[3]) == pytest.approx(fitted[idx], abs=1e-10)
        residuals = np.array([float(r[4]) for r in rows])
        assert abs(residuals.sum()) < 1e-8

    def test_summary_and_estimates_csv(self, tmp_path):
        config = ExperimentConfig(**TINY, estimators=("ols",))
        result = run_experiment(config)
        s_path = tmp_path / "summary.csv"
        e_path = tmp_path / "estimates.csv"
        write_summary_csv(result, s_path)
        write_estimates_csv(result, e_path)
        s_lines = s_path.read_text().strip().split("\n")
        assert s_lines[0].startswith("#")
        assert "sample standard deviation" in s_lines[0]
        assert s_lines[1] == "estimator,axis,truth,mean,std,rmse,replicates,failures"
        assert len(s_lines) == 2 + 2
        e_lines = e_path.read_text().strip().split("\n")
        assert e_lines[0] == "replicate,estimator,h_1,h_2"
        assert len(e_lines) == 1 + 4

    def test_csv_bytes_deterministic(self, tmp_path):
        config = ExperimentConfig(**TINY, estimators=("ols",))
        blobs = []
        for tag in ("a", "b"):
            result = run_experiment(config)
            path = tmp_path / f"{tag}.csv"
            write_summary_csv(result, path)
            blobs.append(path.read_bytes())
        assert blobs[0] == blobs[1]
