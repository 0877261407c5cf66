"""CLI dispatch: exit codes, error objects, precedence, end-to-end pipeline."""

import json
import time

import numpy as np
import pytest

from rankfit import MandelbrotParams, sample_ranks
from rankfit.cli import Config, dispatch
from rankfit.monitor import calibrate_window_reference
from rankfit.serialization import save_references


def run(capsys, *argv):
    code = dispatch(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def corpus_file(tmp_path):
    params = MandelbrotParams(2.0, 1.0, 400)
    draws = sample_ranks(params, 30_000, seed=5)
    path = tmp_path / "corpus.tokens"
    path.write_text("".join(f"t{r:04d}\n" for r in draws))
    return path


@pytest.fixture
def passages_file(tmp_path):
    params = MandelbrotParams(2.0, 1.0, 400)
    records = []
    for i in range(4):
        draws = sample_ranks(params, 60, seed=[9, i])
        tokens = [f"t{r:04d}" for r in draws]
        rec = {"id": f"p{i}", "tokens": tokens,
               "entities": [{"start": 0, "end": 3, "label": "ORG"},
                            {"start": 10, "end": 12, "label": "PERSON"}]}
        if i % 2 == 0:
            rng = np.random.default_rng(i)
            rec["logprobs"] = rng.uniform(-8, -0.5, len(tokens)).tolist()
        records.append(rec)
    path = tmp_path / "passages.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in records))
    return path


class TestExitCodes:
    def test_missing_input_file_is_io_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "fit", "--input", str(tmp_path / "missing.tokens"),
                           "--output", str(tmp_path / "fit.json"))
        assert code == 2
        payload = json.loads(err)
        assert "missing.tokens" in payload["error"]["path"]

    def test_missing_required_flag_is_usage_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "score", "--input", "x", "--output", "y",
                           "--fit", "z")  # no --table
        assert code == 1
        assert "usage" in err

    def test_help_exits_zero(self, capsys):
        code, out, _ = run(capsys, "--help")
        assert code == 0

    @pytest.mark.parametrize("command", ["build-table", "fit", "score",
                                         "calibrate-beta", "fingerprint",
                                         "monitor", "auc", "bench"])
    def test_subcommand_help(self, capsys, command):
        code, out, _ = run(capsys, command, "--help")
        assert code == 0
        assert command in out

    def test_bad_fit_range_is_validation_error(self, capsys, corpus_file, tmp_path):
        code, _, err = run(capsys, "fit", "--input", str(corpus_file),
                           "--fit-range", "nope", "--output", str(tmp_path / "f.json"))
        assert code == 1
        assert json.loads(err)["error"]["type"] == "ValidationError"


class TestPipeline:
    def test_full_pipeline_under_five_seconds(self, capsys, corpus_file,
                                              passages_file, tmp_path):
        t0 = time.time()
        table = tmp_path / "table.rkt"
        fit_json = tmp_path / "fit.json"
        scores = tmp_path / "scores.jsonl"

        code, out, _ = run(capsys, "build-table", "--input", str(corpus_file),
                           "--output", str(table), "--export-tsv",
                           str(tmp_path / "table.tsv"))
        assert code == 0
        assert json.loads(out)["total_tokens"] == 30_000

        code, out, _ = run(capsys, "fit", "--input", str(corpus_file),
                           "--bootstrap", "20", "--seed", "7",
                           "--output", str(fit_json))
        assert code == 0
        fit = json.loads(fit_json.read_text())
        assert fit["converged"] and fit["n_params"] == 2

        code, _, _ = run(capsys, "score", "--table", str(table),
                         "--fit", str(fit_json), "--input", str(passages_file),
                         "--output", str(scores))
        assert code == 0
        lines = [json.loads(l) for l in scores.read_text().splitlines()]
        assert len(lines) == 4
        assert lines[0]["mode"] == "hybrid"  # p0 has logprobs
        assert lines[1]["mode"] == "rank_only"
        assert all("entity_scores" in l for l in lines)

        code, out, _ = run(capsys, "fingerprint", "--fit", str(fit_json),
                           "--force")
        assert code == 0
        ranked = json.loads(out)["classification"]
        assert len(ranked) == 6
        assert ranked[0]["mahalanobis_d"] <= ranked[-1]["mahalanobis_d"]
        assert time.time() - t0 < 5.0

    def test_fit_is_deterministic_given_seed(self, capsys, corpus_file, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            code, _, _ = run(capsys, "fit", "--input", str(corpus_file),
                             "--bootstrap", "10", "--seed", "3",
                             "--output", str(out))
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_zipf_flag(self, capsys, corpus_file, tmp_path):
        out_path = tmp_path / "z.json"
        code, _, _ = run(capsys, "fit", "--input", str(corpus_file), "--zipf",
                         "--bootstrap", "0", "--output", str(out_path))
        assert code == 0
        fit = json.loads(out_path.read_text())
        assert fit["q"] == 0.0 and fit["n_params"] == 1

    def test_entities_only_mode(self, capsys, corpus_file, passages_file, tmp_path):
        table = tmp_path / "table.rkt"
        fit_json = tmp_path / "fit.json"
        run(capsys, "build-table", "--input", str(corpus_file), "--output", str(table))
        run(capsys, "fit", "--input", str(corpus_file), "--bootstrap", "0",
            "--output", str(fit_json))
        code, out, _ = run(capsys, "score", "--table", str(table),
                           "--fit", str(fit_json), "--entities-only",
                           "--input", str(passages_file), "--output", "-")
        assert code == 0
        lines = [json.loads(l) for l in out.splitlines()]
        assert all(l["mode"] == "gap_only" for l in lines)
        assert all("aggregate_mean" not in l for l in lines)
        assert len(lines[0]["entity_scores"]) == 2


class TestCalibrateAndScoreWithDomain:
    def test_calibration_flow(self, capsys, corpus_file, passages_file, tmp_path):
        table = tmp_path / "table.rkt"
        fit_json = tmp_path / "fit.json"
        cal_json = tmp_path / "cal.json"
        run(capsys, "build-table", "--input", str(corpus_file), "--output", str(table))
        run(capsys, "fit", "--input", str(corpus_file), "--bootstrap", "0",
            "--output", str(fit_json))

        code, out, _ = run(capsys, "calibrate-beta", "--table", str(table),
                           "--input", str(corpus_file), "--domain", "news",
                           "--epsilon", "1e-6", "--output", str(cal_json))
        assert code == 0
        cal = json.loads(out)
        # corpus == reference corpus, so this is self-calibration
        assert cal["variance_delta_r"] == 0.0
        assert cal["beta_hat"] == 1e6

        code, out, _ = run(capsys, "score", "--table", str(table),
                           "--fit", str(fit_json), "--calibration", str(cal_json),
                           "--domain", "news", "--input", str(passages_file),
                           "--output", "-")
        assert code == 0
        first = json.loads(out.splitlines()[0])
        assert first["beta_used"] == 1e6

    def test_unknown_domain(self, capsys, corpus_file, passages_file, tmp_path):
        table = tmp_path / "table.rkt"
        fit_json = tmp_path / "fit.json"
        cal_json = tmp_path / "cal.json"
        run(capsys, "build-table", "--input", str(corpus_file), "--output", str(table))
        run(capsys, "fit", "--input", str(corpus_file), "--bootstrap", "0",
            "--output", str(fit_json))
        run(capsys, "calibrate-beta", "--table", str(table), "--input",
            str(corpus_file), "--domain", "news", "--output", str(cal_json))
        code, _, err = run(capsys, "score", "--table", str(table),
                           "--fit", str(fit_json), "--calibration", str(cal_json),
                           "--domain", "legal", "--input", str(passages_file),
                           "--output", "-")
        assert code == 1
        assert "legal" in json.loads(err)["error"]["message"]


class TestConfigPrecedence:
    def test_flag_beats_config_beats_default(self, capsys, corpus_file,
                                             passages_file, tmp_path, monkeypatch):
        table = tmp_path / "table.rkt"
        fit_json = tmp_path / "fit.json"
        run(capsys, "build-table", "--input", str(corpus_file), "--output", str(table))
        run(capsys, "fit", "--input", str(corpus_file), "--bootstrap", "0",
            "--output", str(fit_json))
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"beta": 2.0}))

        def beta_used(*extra):
            code, out, _ = run(capsys, *extra, "score", "--table", str(table),
                               "--fit", str(fit_json), "--input",
                               str(passages_file), "--output", "-")
            assert code == 0
            return json.loads(out.splitlines()[0])["beta_used"]

        assert beta_used() == 1.0  # built-in default
        assert beta_used("--config", str(cfg)) == 2.0  # config file
        monkeypatch.setenv("RANKFIT_CONFIG", str(cfg))
        assert beta_used() == 2.0  # env-var config
        monkeypatch.delenv("RANKFIT_CONFIG")

        code, out, _ = run(capsys, "--config", str(cfg), "score", "--table",
                           str(table), "--fit", str(fit_json), "--beta", "3.5",
                           "--input", str(passages_file), "--output", "-")
        assert json.loads(out.splitlines()[0])["beta_used"] == 3.5  # flag wins

    def test_unknown_config_key(self, capsys, tmp_path):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"betta": 2.0}))
        code, _, err = run(capsys, "--config", str(cfg), "auc", "--input", "x",
                           "--score-field", "s", "--label-field", "y")
        assert code == 1
        assert "betta" in json.loads(err)["error"]["message"]

    def test_config_defaults_object(self):
        cfg = Config()
        assert cfg.beta == 1.0 and cfg.epsilon == 1e-6
        assert cfg.fingerprint_threshold == 3.0 and cfg.score_threshold == 4.0
        assert cfg.bootstrap == 100 and cfg.seed == 0


class TestAuc:
    def test_auc_subcommand(self, capsys, tmp_path):
        data = tmp_path / "scores.jsonl"
        rows = [{"s": 0.9, "y": 1}, {"s": 0.8, "y": 1}, {"s": 0.3, "y": 0},
                {"s": 0.1, "y": 0}]
        data.write_text("".join(json.dumps(r) + "\n" for r in rows))
        code, out, _ = run(capsys, "auc", "--input", str(data),
                           "--score-field", "s", "--label-field", "y")
        assert code == 0
        got = json.loads(out)
        assert got["auc"] == 1.0 and got["n_pos"] == 2

    def test_missing_field(self, capsys, tmp_path):
        data = tmp_path / "scores.jsonl"
        data.write_text('{"s": 1.0}\n')
        code, _, err = run(capsys, "auc", "--input", str(data),
                           "--score-field", "s", "--label-field", "y")
        assert code == 1


class TestMonitorCommand:
    def test_monitor_stream(self, capsys, tmp_path):
        params = MandelbrotParams(2.5, 1.0, 500)
        band = calibrate_window_reference("healthy", params, window_tokens=20_000,
                                          n_fits=6, seed=2, dispersion_scale=2.0)
        refs = tmp_path / "refs.json"
        save_references([band], refs)

        lines = []
        for k in range(3):
            draws = sample_ranks(params, 10_000, seed=[50, k])
            lines.append(json.dumps({"id": f"w{k}",
                                     "tokens": [f"t{r:06d}" for r in draws]}))
        stream = tmp_path / "stream.jsonl"
        stream.write_text("\n".join(lines) + "\n")

        code, out, _ = run(capsys, "monitor", "--reference", str(refs),
                           "--model", "healthy", "--window", "20000",
                           "--refit-every", "10000", "--input", str(stream))
        assert code == 0
        assert out == ""  # in-distribution stream raises no flags

    def test_unknown_model(self, capsys, tmp_path):
        params = MandelbrotParams(2.5, 1.0, 500)
        band = calibrate_window_reference("healthy", params, window_tokens=20_000,
                                          n_fits=4, seed=2)
        refs = tmp_path / "refs.json"
        save_references([band], refs)
        stream = tmp_path / "stream.jsonl"
        stream.write_text('{"tokens": ["a"]}\n')
        code, _, err = run(capsys, "monitor", "--reference", str(refs),
                           "--model", "nope", "--input", str(stream))
        assert code == 1
        assert "nope" in json.loads(err)["error"]["message"]


class TestBench:
    def test_bench_smoke(self, capsys, corpus_file, passages_file, tmp_path):
        table = tmp_path / "table.rkt"
        fit_json = tmp_path / "fit.json"
        run(capsys, "build-table", "--input", str(corpus_file), "--output", str(table))
        run(capsys, "fit", "--input", str(corpus_file), "--bootstrap", "0",
            "--output", str(fit_json))
        code, out, _ = run(capsys, "bench", "--table", str(table),
                           "--fit", str(fit_json), "--input", str(passages_file),
                           "--repetitions", "3")
        assert code == 0
        report = json.loads(out)
        assert report["repetitions"] == 3
        for mode in ("gap_only", "full"):
            for scale in ("per_passage_ms", "per_token_us"):
                stats = report[mode][scale]
                assert stats["p50"] <= stats["p95"] <= stats["p99"]
