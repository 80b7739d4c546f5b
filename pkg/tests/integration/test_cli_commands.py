"""End-to-end tests of the command-line sub-commands on the bundled data files."""

import json
import os

import pytest

from cli.commands import build_parser, main


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    assert code == 0, out
    return out


def _json_lines(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


class TestParser:
    def test_defaults(self):
        args = build_parser().parse_args(["bench"])
        assert args.grid == "default"
        assert args.threads >= 1
        assert args.delta == 0.05

    def test_exact_and_estimate_exclusive(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["prob", "--input", "x", "--exact", "--estimate"])


class TestSimulate:
    def test_hong_ou_mandel(self, capsys, hom_path):
        data = json.loads(_run(capsys, ["simulate", "--input", hom_path]))
        probs = {tuple(e["state"]): e["prob"] for e in data["entries"]}
        assert probs[(1, 1)] == pytest.approx(0.0, abs=1e-12)
        assert probs[(2, 0)] == pytest.approx(0.5)
        assert data["context"]["marginal"] == "joint"

    @pytest.mark.parametrize("marginal", ["final", "adaptive"])
    def test_marginals_sum_to_one(self, capsys, feedforward_path, marginal):
        data = json.loads(_run(capsys, ["simulate", "--input", feedforward_path,
                                        "--marginal", marginal]))
        assert sum(e["prob"] for e in data["entries"]) == pytest.approx(1.0, abs=1e-10)

    def test_out_file(self, capsys, tmp_path, hom_path):
        target = tmp_path / "dist.json"
        _run(capsys, ["simulate", "--input", hom_path, "--out", str(target)])
        assert json.loads(target.read_text())["context"]["n"] == 2


class TestProb:
    def test_exact_states(self, capsys, hom_path):
        lines = _json_lines(_run(capsys, ["prob", "--input", hom_path,
                                          "--state", "[1,1]", "--state", "2,0"]))
        assert lines[0]["state"] == [1, 1] and lines[0]["prob"] == pytest.approx(0.0, abs=1e-12)
        assert lines[1]["prob"] == pytest.approx(0.5)

    def test_state_key_comes_first(self, capsys, hom_path):
        out = _run(capsys, ["prob", "--input", hom_path, "--state", "[2,0]"])
        assert out.startswith('{"state": [2, 0], "prob": ')
        assert list(json.loads(out.splitlines()[0])) == ["state", "prob"]

    def test_all_states_by_default(self, capsys, feedforward_path):
        lines = _json_lines(_run(capsys, ["prob", "--input", feedforward_path]))
        assert len(lines) == 6
        assert sum(line["prob"] for line in lines) == pytest.approx(1.0, abs=1e-10)

    def test_estimate_deterministic(self, capsys, feedforward_path):
        argv = ["prob", "--input", feedforward_path, "--state", "[1,0]", "--estimate",
                "--epsilon", "0.2", "--seed", "3"]
        first = _run(capsys, argv)
        assert first == _run(capsys, argv)
        line = _json_lines(first)[0]
        assert 0.0 <= line["prob"] <= 1.0
        assert line["abs_error_bound"] == pytest.approx(0.2)


class TestOverlap:
    def test_exact_self_overlap(self, capsys, feedforward_path):
        data = json.loads(_run(capsys, ["overlap", "--input", feedforward_path,
                                        "--p", "[1]", "--q", "[1]"]))
        assert data["overlap"] == pytest.approx(1.0)
        assert data["permanent_evals"] == 12
        assert data["inner_product"]["im"] == pytest.approx(0.0, abs=1e-12)

    def test_exact_different_weights(self, capsys, feedforward_path):
        data = json.loads(_run(capsys, ["overlap", "--input", feedforward_path,
                                        "--p", "[1]", "--q", "[2]"]))
        assert data["overlap"] == 0.0

    def test_estimate(self, capsys, feedforward_path):
        data = json.loads(_run(capsys, ["overlap", "--input", feedforward_path, "--p", "[0]",
                                        "--q", "[0]", "--estimate", "--shots", "500"]))
        assert data["value"] == pytest.approx(1.0)
        assert data["shots"] == 500


class TestSample:
    def test_shot_log(self, capsys, feedforward_path):
        argv = ["sample", "--input", feedforward_path, "--shots", "200", "--seed", "8"]
        out = _run(capsys, argv)
        records = _json_lines(out)
        assert len(records) == 200
        assert all(sum(r["p"]) + sum(r["s"]) == 2 for r in records)
        assert out == _run(capsys, argv)

    def test_target_frequency(self, capsys, hom_path):
        data = json.loads(_run(capsys, ["sample", "--input", hom_path, "--shots", "1000",
                                        "--target", "[1,1]"]))
        assert data["value"] == 0.0
        assert data["hoeffding_halfwidth"] > 0


class TestKernelWorkflow:
    def test_kernel_svm_round_trip(self, capsys, tmp_path, data_dir):
        blobs = os.path.join(data_dir, "toy_blobs.csv")
        gram_path = tmp_path / "gram.json"
        model_path = tmp_path / "model.json"
        _run(capsys, ["kernel", "--input", blobs, "--out", str(gram_path)])
        gram = json.loads(gram_path.read_text())
        assert gram["n"] == 6 and gram["provenance"] == "exact"

        _run(capsys, ["svm-train", "--gram", str(gram_path), "--labels", blobs,
                      "--lambda", "0.01", "--out", str(model_path)])
        model = json.loads(model_path.read_text())
        assert len(model["alphas"]) == 6

        rows_path = tmp_path / "rows.json"
        rows_path.write_text(json.dumps({"rows": gram["entries"]}))
        by_rows = json.loads(_run(capsys, ["svm-predict", "--model", str(model_path),
                                           "--rows", str(rows_path)]))
        by_points = json.loads(_run(capsys, ["svm-predict", "--model", str(model_path),
                                             "--train", blobs, "--input", blobs]))
        assert by_rows["labels"] == by_points["labels"]
        assert by_rows["decision"] == pytest.approx(by_points["decision"], abs=1e-9)

    def test_estimated_kernel_is_seeded(self, capsys, data_dir):
        blobs = os.path.join(data_dir, "toy_blobs.csv")
        argv = ["kernel", "--input", blobs, "--estimate", "--shots", "200", "--seed", "5"]
        first = json.loads(_run(capsys, argv))
        assert first["provenance"] == "shot-estimated(T=200)"
        assert first == json.loads(_run(capsys, argv + ["--threads", "2"]))


class TestExplicitTrain:
    def test_trains_on_toy(self, capsys, tmp_path):
        path = tmp_path / "toy.csv"
        path.write_text("x_1,label\n0.0,1\n0.25,-1\n")
        data = json.loads(_run(capsys, ["explicit-train", "--input", str(path), "--modes", "2",
                                        "--photons", "1", "--adaptive-modes", "0"]))
        assert data["training_accuracy"] == 1.0
        assert data["trace"]["converged"] is True
        assert data["model"]["binning"] == "parity-first-mode"
