import json
from types import SimpleNamespace

import numpy as np
import polars as pl
import pytest

from app import main
from commands.common import ROI_DEFAULTS, resolve_roi
from fibrosis.model import load_checkpoint, save_checkpoint
from utils import save_rgb_png

TINY_SPEC = {
    "width": 64,
    "height": 64,
    "ventricle": [16, 16, 32, 32],
    "blob_radius": [2.0, 4.0],
    "seed": 5,
    "phis": [0.1, 0.3],
    "labels": ["early", "late"],
}

FAST_QUERY = ["--min-roi-size", "16", "--n-z", "2", "--steps", "1"]


def run_cli(*args):
    return main([str(a) for a in args])


def last_json(text):
    lines = [line for line in text.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


def roi_settings(**overrides):
    return SimpleNamespace(**{**ROI_DEFAULTS, "min_roi_size": 16, **overrides})


@pytest.fixture
def query_png(tmp_path, rng):
    path = tmp_path / "query.png"
    save_rgb_png(rng.uniform(size=(40, 40, 3)), path)
    return path


@pytest.fixture
def checkpoint(tmp_path, small_model):
    return save_checkpoint(small_model, tmp_path / "model.ckpt")


@pytest.fixture
def series(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(TINY_SPEC))
    out = tmp_path / "series"
    assert run_cli("synth", "--spec", spec, "--out", out) == 0
    return out


@pytest.fixture
def trained(tmp_path, series):
    out = tmp_path / "trained.ckpt"
    code = run_cli("train", "--image", series / "normal.png", "--out", out, "--patches", 16, "--size", 16,
                   "--epochs", 1, "--batch-size", 8, "--latent-dim", 4, "--seed", 7)
    assert code == 0
    return out


class TestUsage:

    def test_bad_flag_value(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("score", "--steps", "many")
        assert exc.value.code == 2
        payload = last_json(capsys.readouterr().err)
        assert payload["error"] == "UsageError" and payload["exit_code"] == 2

    def test_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("explode")
        assert exc.value.code == 2

    def test_missing_required_setting(self, capsys):
        assert run_cli("score") == 2
        payload = last_json(capsys.readouterr().err)
        assert payload["error"] == "ConfigError"
        assert "--model" in payload["message"]

    def test_lambda_out_of_range(self, capsys, checkpoint, query_png):
        assert run_cli("score", "--model", checkpoint, "--image", query_png, "--lambda", 2.0, *FAST_QUERY) == 2
        assert last_json(capsys.readouterr().err)["error"] == "ConfigError"

    def test_missing_config_file(self, capsys, tmp_path):
        assert run_cli("synth", "--config", tmp_path / "nope.json", "--out", tmp_path) == 2

    def test_config_path_is_directory(self, capsys, tmp_path):
        assert run_cli("synth", "--config", tmp_path, "--out", tmp_path / "out") == 2
        assert last_json(capsys.readouterr().err)["error"] == "ConfigError"

    def test_unknown_config_key(self, capsys, tmp_path):
        config = tmp_path / "train.json"
        config.write_text(json.dumps({"epochs": 1, "epoks": 3}))
        assert run_cli("train", "--config", config, "--image", "x.png", "--out", tmp_path / "m.ckpt") == 2
        payload = last_json(capsys.readouterr().err)
        assert payload["error"] == "ConfigError" and "epoks" in payload["message"]

    @pytest.mark.parametrize("override", [{"width": "big"}, {"ventricle": [1, 2]}, {"seed": 1.5},
                                          {"modality": 3}, {"phis": "0.1"}, {"phis": ["a"]}])
    def test_malformed_phantom_spec(self, capsys, tmp_path, override):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({**TINY_SPEC, **override}))
        assert run_cli("synth", "--spec", spec, "--out", tmp_path / "series") == 2
        assert last_json(capsys.readouterr().err)["error"] == "ConfigError"


class TestDataErrors:

    def test_roi_out_of_bounds(self, capsys, checkpoint, query_png):
        code = run_cli("score", "--model", checkpoint, "--image", query_png, "--roi", "30,30,20,20", *FAST_QUERY)
        assert code == 3
        payload = last_json(capsys.readouterr().err)
        assert payload == {"error": "RoiBoundsError", "message": payload["message"], "exit_code": 3}

    def test_missing_checkpoint(self, capsys, tmp_path, query_png):
        assert run_cli("score", "--model", tmp_path / "none.ckpt", "--image", query_png) == 3
        assert last_json(capsys.readouterr().err)["error"] == "CheckpointFormatError"

    def test_unreadable_image(self, capsys, tmp_path, checkpoint):
        bogus = tmp_path / "bogus.png"
        bogus.write_text("not a png")
        assert run_cli("score", "--model", checkpoint, "--image", bogus, *FAST_QUERY) == 3
        assert last_json(capsys.readouterr().err)["error"] == "ImageReadError"

    def test_unwritable_output(self, capsys, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps(TINY_SPEC))
        blocker = tmp_path / "blocker"
        blocker.write_text("a file, not a directory")
        assert run_cli("synth", "--spec", spec, "--out", blocker / "series") == 3
        payload = last_json(capsys.readouterr().err)
        assert payload["error"] == "FileAccessError" and payload["exit_code"] == 3

    def test_os_error_inside_command(self, capsys, monkeypatch, tmp_path):
        def denied(settings):
            raise PermissionError(13, "Permission denied", str(tmp_path / "locked"))

        monkeypatch.setattr("commands.synth.run", denied)
        assert run_cli("synth", "--out", tmp_path) == 3
        payload = last_json(capsys.readouterr().err)
        assert payload["error"] == "FileAccessError"
        assert "locked" in payload["message"]


class TestResolveRoi:

    @pytest.fixture
    def bright_block(self):
        image = np.zeros((200, 200, 3))
        image[50:110, 40:100] = 1.0
        return image

    def test_heuristic_beats_manifest_bbox(self, bright_block):
        roi = resolve_roi(bright_block, roi_settings(roi_auto=True), bbox=(0, 0, 100, 100))
        assert roi.provenance == "heuristic"
        assert roi.as_tuple() != (0, 0, 100, 100)
        assert 30 <= roi.x0 and roi.x1 <= 110
        assert 40 <= roi.y0 and roi.y1 <= 120

    def test_explicit_roi_wins(self, bright_block):
        roi = resolve_roi(bright_block, roi_settings(roi="10,10,50,50", roi_auto=True), bbox=(0, 0, 100, 100))
        assert roi.provenance == "manual"
        assert roi.as_tuple() == (10, 10, 50, 50)

    def test_manifest_bbox(self, bright_block):
        roi = resolve_roi(bright_block, roi_settings(), bbox=(0, 0, 100, 100))
        assert roi.provenance == "manual"
        assert roi.as_tuple() == (0, 0, 100, 100)

    def test_whole_image(self, bright_block):
        assert resolve_roi(bright_block, roi_settings()).as_tuple() == (0, 0, 200, 200)


class TestQueryCommands:

    def test_score(self, capsys, tmp_path, checkpoint, query_png):
        out = tmp_path / "scored"
        assert run_cli("score", "--model", checkpoint, "--image", query_png, "--out", out,
                       "--label", "day 3", *FAST_QUERY) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["label"] == "day 3"
        assert report["roi"]["width"] == 40
        if report["score"] is None:
            assert report["t_r"] == 0 and report["error"]
        else:
            assert report["score"] == pytest.approx(report["t_g"] / report["t_r"])
        assert report["provenance"]["command"] == "score"
        for name in ("query_green_mask.png", "query_red_coords.csv", "query_heatmap.png",
                     "query_reconstruction.png", "query_report.json"):
            assert (out / name).exists(), name

    def test_segment(self, tmp_path, checkpoint, query_png):
        out = tmp_path / "seg"
        assert run_cli("segment", "--model", checkpoint, "--image", query_png, "--out", out,
                       "--roi", "4,4,32,32", *FAST_QUERY) == 0
        summary = json.loads((out / "query_segmentation.json").read_text())
        assert summary["roi"]["x0"] == 4
        coords = pl.read_csv(out / "query_green_coords.csv")
        assert coords.height == summary["green_pixels"]

    def test_heatmap(self, tmp_path, checkpoint, query_png):
        out = tmp_path / "heat"
        assert run_cli("heatmap", "--model", checkpoint, "--image", query_png, "--out", out,
                       "--min-roi-size", 16, "--steps", 3) == 0
        trace = pl.read_csv(out / "query_search_trace.csv")
        assert trace.height == 4
        assert pl.read_csv(out / "query_heatmap.csv").height == 40 * 40


class TestPipeline:

    def test_synth(self, series):
        manifest = json.loads((series / "manifest.json").read_text())
        assert [e["label"] for e in manifest["entries"]] == ["early", "late"]
        assert (series / "01_late_truth.png").exists()

    def test_synth_flags_override_spec(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps(TINY_SPEC))
        out = tmp_path / "stained"
        assert run_cli("synth", "--spec", spec, "--out", out, "--phis", 0.2, "--labels", "only",
                       "--modality", "stained") == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["modality"] == "stained"
        assert [e["phi"] for e in manifest["entries"]] == [0.2]

    def test_train_writes_log_and_sidecar(self, trained):
        model = load_checkpoint(trained)
        assert model.patch_size == 16 and model.latent_dim == 4
        assert model.metadata["provenance"]["seed"] == 7
        assert pl.read_csv(trained.with_suffix(".trainlog.csv")).height == 1
        assert json.loads(trained.with_suffix(".json").read_text())["epochs"] == 1

    def test_flags_override_config_file(self, tmp_path, series):
        config = tmp_path / "train.json"
        config.write_text(json.dumps({"epochs": 3, "patches": 8, "batch_size": 8, "size": 16, "latent_dim": 4}))
        out = tmp_path / "cfg.ckpt"
        assert run_cli("train", "--config", config, "--image", series / "normal.png", "--out", out,
                       "--epochs", 2) == 0
        assert pl.read_csv(out.with_suffix(".trainlog.csv")).height == 2
        assert load_checkpoint(out).latent_dim == 4

    def test_eval(self, tmp_path, series, trained):
        report = tmp_path / "report"
        assert run_cli("eval", "--manifest", series / "manifest.json", "--model", trained,
                       "--out", report, *FAST_QUERY) == 0
        scores = pl.read_csv(report / "scores.csv")
        assert scores["label"].to_list() == ["early", "late"]
        assert scores.filter(pl.col("error").is_null())["dice_green"].is_between(0.0, 1.0).all()
        summary = json.loads((report / "summary.json").read_text())
        assert summary["images"] == 2
        assert "unstained" in summary["monotonicity"]
        assert (report / "dice.csv").exists()
        assert (report / "unstained" / "00_early_report.json").exists()
        assert set(scores["roi_provenance"].drop_nulls()) <= {"manual"}

    def test_eval_roi_auto_is_not_overridden(self, tmp_path, series, trained):
        report = tmp_path / "auto"
        assert run_cli("eval", "--manifest", series / "manifest.json", "--model", trained,
                       "--out", report, "--roi-auto", *FAST_QUERY) == 0
        scores = pl.read_csv(report / "scores.csv", infer_schema_length=None)
        assert "manual" not in scores["roi_provenance"].drop_nulls().to_list()
        for row in scores.filter(pl.col("roi_provenance").is_null()).iter_rows(named=True):
            assert row["error"]

    def test_checkpoint_independent_of_out_path(self, tmp_path, series):
        args = ["train", "--image", series / "normal.png", "--patches", 8, "--size", 16, "--epochs", 1,
                "--batch-size", 8, "--latent-dim", 4, "--seed", 7]
        first, second = tmp_path / "a.ckpt", tmp_path / "nested" / "b.ckpt"
        assert run_cli(*args, "--out", first) == 0
        assert run_cli(*args, "--out", second) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_eval_threads_match_serial(self, tmp_path, series, trained):
        args = ["eval", "--manifest", series / "manifest.json", "--model", trained, *FAST_QUERY]
        assert run_cli(*args, "--out", tmp_path / "serial") == 0
        assert run_cli(*args, "--out", tmp_path / "threads", "--workers", 2) == 0
        serial = pl.read_csv(tmp_path / "serial" / "scores.csv")
        threads = pl.read_csv(tmp_path / "threads" / "scores.csv")
        assert serial.equals(threads)

    def test_embed(self, tmp_path, series, trained):
        out = tmp_path / "embed"
        assert run_cli("embed", "--model", trained, "--manifest", series / "manifest.json", "--out", out,
                       "--n-patches", 6, "--perplexity", 3, "--iters", 60) == 0
        coords = pl.read_csv(out / "tsne.csv")
        assert coords.height == 12
        assert sorted(set(coords["label"])) == ["infarct", "normal"]
        assert np.isfinite(coords.select("x", "y").to_numpy()).all()
        assert pl.read_csv(out / "tsne_kl.csv").height == 60
        assert (out / "tsne.svg").exists()
