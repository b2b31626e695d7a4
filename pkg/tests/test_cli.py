import json
import subprocess
import sys
from pathlib import Path

import pytest

from botscope import cli

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


def run_cli(args):
    return cli.main([str(a) for a in args])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Tiny synth -> train -> calibrate -> score workflow shared by tests."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert run_cli(["--seed", 7, "datasets", "synth", "--out", data,
                    "--name", "demo", "--humans", 25, "--spammers", 25]) == 0
    assert run_cli(["--seed", 7, "train", "--data", data, "--names", "demo",
                    "--out", root / "model.json", "--n-trees", 10,
                    "--registry-out", root / "registry.json"]) == 0
    assert run_cli(["--seed", 7, "calibrate", "--model", root / "model.json",
                    "--data", data, "--names", "demo", "--prior", "0.2",
                    "--out", root / "calibration.json"]) == 0
    assert run_cli(["--seed", 7, "score", "--model", root / "model.json",
                    "--calibration", root / "calibration.json",
                    "--input", data / "demo.jsonl",
                    "--out", root / "scores.jsonl"]) == 0
    return root


class TestSubcommands:
    def test_datasets_load_reports_counts(self, workspace, capsys):
        assert run_cli(["datasets", "load", "--path", workspace / "data",
                        "--name", "demo"]) == 0
        out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert out["bots"] == 25 and out["humans"] == 25

    def test_score_writes_one_report_per_line(self, workspace):
        lines = (workspace / "scores.jsonl").read_text().strip().splitlines()
        assert len(lines) == 50
        row = json.loads(lines[0])
        assert set(row) >= {"user_id", "raw_scores", "display_scores", "cap"}
        assert row["cap"]["english"] is not None

    def test_registry_doc_exported(self, workspace):
        doc = json.loads((workspace / "registry.json").read_text())
        assert doc["version"] == "v1"

    def test_train_deterministic_across_runs(self, workspace, tmp_path):
        for name in ("m1.json", "m2.json"):
            assert run_cli(["--seed", 7, "train", "--data", workspace / "data",
                            "--names", "demo", "--out", tmp_path / name,
                            "--n-trees", 10]) == 0
        assert (tmp_path / "m1.json").read_bytes() == (tmp_path / "m2.json").read_bytes()

    def test_analyze_casestudy_outputs(self, workspace, tmp_path):
        from botscope.corpus import synthesize_cashtag_study, tweet_to_dict

        shape = {"GEMA": {"tweets": 60, "accounts": 40, "en_tweets": 50,
                          "en_accounts": 33},
                 "GEMB": {"tweets": 50, "accounts": 30, "en_tweets": 45,
                          "en_accounts": 26}}
        groups, scores = synthesize_cashtag_study(seed=9, shape=shape)
        paths = []
        for symbol, tweets in groups.items():
            path = tmp_path / f"{symbol}.jsonl"
            path.write_text("\n".join(
                json.dumps(tweet_to_dict(t), sort_keys=True) for t in tweets) + "\n")
            paths.append(str(path))
        scores_path = tmp_path / "scores.jsonl"
        scores_path.write_text("\n".join(
            json.dumps({"user_id": u, "score": s}) for u, s in sorted(scores.items())) + "\n")
        out_dir = tmp_path / "analysis"
        assert run_cli(["analyze", "casestudy", "--groups", ",".join(paths),
                        "--scores", scores_path, "--thresholds", "0.5,0.7",
                        "--language", "en", "--out", out_dir]) == 0
        counts = json.loads((out_dir / "sample_counts.json").read_text())
        assert counts["GEMA"]["analytical_tweets"] == 50
        plot = json.loads((out_dir / "plot_data.json").read_text())
        assert [t["threshold"] for t in plot["thresholds"]] == [0.5, 0.7]

    def test_probe_subcommand(self, tmp_path, capsys):
        store = tmp_path / "series.jsonl"
        assert run_cli(["probe", "--store", store, "--user-id", "u1",
                        "--time", "2021-01-01T00:00:00Z", "--score", 0.4]) == 0
        assert run_cli(["probe", "--store", store, "--user-id", "u1",
                        "--time", "2021-02-01T00:00:00Z", "--score", 0.6]) == 0
        out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert out["points"] == 2

    def test_unknown_flag_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["datasets", "synth", "--does-not-exist", "x"])
        assert exc.value.code == 2

    def test_version_mismatch_aborts(self, workspace, tmp_path, capsys):
        # calibration built against a different model generation must not mix
        assert run_cli(["--seed", 8, "train", "--data", workspace / "data",
                        "--names", "demo", "--out", tmp_path / "other.json",
                        "--n-trees", 12]) == 0
        code = run_cli(["score", "--model", tmp_path / "other.json",
                        "--calibration", workspace / "calibration.json",
                        "--input", workspace / "data" / "demo.jsonl",
                        "--out", tmp_path / "scores.jsonl"])
        assert code == 1
        assert "calibration built for model" in capsys.readouterr().err

    def test_io_failure_exit_1(self, tmp_path, capsys):
        code = run_cli(["datasets", "load", "--path", tmp_path, "--name", "ghost"])
        assert code == 1
        assert "error (io)" in capsys.readouterr().err


class TestPipelineScript:
    def test_fast_pipeline_runs(self, tmp_path):
        result = subprocess.run(
            [sys.executable, str(SCRIPTS / "run_pipeline.py"),
             "--out", str(tmp_path / "run"), "--seed", "5", "--fast"],
            capture_output=True, text=True, timeout=300)
        assert result.returncode == 0, result.stderr
        for name in ("model.json", "calibration.json", "lite.json", "scores.jsonl",
                     "analysis/sample_counts.json", "service.json"):
            assert (tmp_path / "run" / name).exists(), name
