import json

import numpy as np
import pytest

from realscale import geometry
from realscale.cli import main
from realscale.corpus import generate_synthetic_corpus, load_manifest


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_corpus")
    generate_synthetic_corpus(
        n_items=12,
        categories=4,
        volume_range_ml=(10.0, 400.0),
        noise_sigma=0.05,
        views_per_frame=9,
        frames_per_item=2,
        seed=5,
        out_dir=out,
        dim=16,
    )
    return out


@pytest.fixture()
def cube_obj(tmp_path):
    path = tmp_path / "cube.obj"
    geometry.save_mesh(geometry.generate_primitive("cube", edge=1.0), path)
    return path


def run(*argv):
    return main([str(a) for a in argv])


class TestPoses:
    def test_default_rig(self, tmp_path):
        out = tmp_path / "poses.json"
        assert run("poses", "--out", out) == 0
        records = json.loads(out.read_text())
        assert len(records) == 75
        assert (tmp_path / "run.json").exists()

    def test_non_divisible_count_exit_2(self, tmp_path, capsys):
        assert run("poses", "--count", 74, "--out", tmp_path / "p.json") == 2
        assert "multiple" in capsys.readouterr().err

    def test_radius_mult(self, tmp_path, cube_obj):
        out = tmp_path / "poses.json"
        assert run(
            "poses", "--radius-mult", 2.5, "--mesh", cube_obj, "--out", out
        ) == 0
        records = json.loads(out.read_text())
        expected = 2.5 * np.sqrt(3) / 2
        assert records[0]["radius"] == pytest.approx(expected, rel=1e-12)


class TestVolumeAndRescale:
    def test_volume_prints_ml(self, cube_obj, capsys):
        assert run("volume", cube_obj) == 0
        assert capsys.readouterr().out.strip() == "1.000000 mL"

    def test_rescale_factor(self, tmp_path, cube_obj):
        out = tmp_path / "big.obj"
        assert run("rescale", "--mesh", cube_obj, "--factor", 27, "--out", out) == 0
        assert geometry.signed_volume(geometry.load_mesh(out)) == pytest.approx(27.0)

    def test_rescale_negative_factor_exit_2(self, tmp_path, cube_obj):
        out = tmp_path / "bad.obj"
        assert run("rescale", "--mesh", cube_obj, "--factor", -1, "--out", out) == 2

    def test_volume_missing_file_exit_2(self, tmp_path):
        assert run("volume", tmp_path / "missing.obj") == 2


class TestGenSynthetic:
    def test_generates_and_logs(self, tmp_path):
        out = tmp_path / "corpus"
        code = run(
            "gen-synthetic", "--n", 6, "--categories", 3, "--vmin", 10,
            "--vmax", 100, "--views", 6, "--frames", 1, "--dim", 16,
            "--seed", 1, "--out", out,
        )
        assert code == 0
        manifest = load_manifest(out / "manifest.json")
        assert len(manifest.items) == 6
        log = json.loads((out / "run.json").read_text())
        assert log["command"] == "gen-synthetic"
        assert log["seed"] == 1

    def test_named_categories(self, tmp_path):
        out = tmp_path / "corpus"
        assert run(
            "gen-synthetic", "--n", 4, "--categories", "soup,melon", "--vmin", 10,
            "--vmax", 50, "--views", 3, "--frames", 1, "--dim", 16, "--out", out,
        ) == 0
        manifest = load_manifest(out / "manifest.json")
        assert manifest.categories() == ["melon", "soup"]


class TestTrainPredictEvaluate:
    def _train(self, corpus_dir, tmp_path, mode="pair", seed=0, epochs=2):
        tmp_path.mkdir(parents=True, exist_ok=True)
        ckpt = tmp_path / f"{mode}-{seed}.ckpt"
        code = run(
            "train", "--manifest", corpus_dir / "manifest.json",
            "--input-emb", corpus_dir / "embeddings/input.emb",
            "--render-emb", corpus_dir / "embeddings/render.emb",
            "--mode", mode, "--epochs", epochs, "--batch", 32,
            "--hidden", "16,8", "--seed", seed, "--out", ckpt, "--quiet",
        )
        return code, ckpt

    def test_train_predict_evaluate_pipeline(self, corpus_dir, tmp_path):
        code, ckpt = self._train(corpus_dir, tmp_path)
        assert code == 0
        assert ckpt.exists()

        preds = tmp_path / "predictions.json"
        assert run(
            "predict", "--ckpt", ckpt,
            "--manifest", corpus_dir / "manifest.json",
            "--input-emb", corpus_dir / "embeddings/input.emb",
            "--render-emb", corpus_dir / "embeddings/render.emb",
            "--m", 5, "--out", preds, "--quiet",
        ) == 0
        records = json.loads(preds.read_text())
        assert records and all(r["m_views_used"] == 5 for r in records)
        manifest = load_manifest(corpus_dir / "manifest.json")
        for r in records:
            item = manifest.item(r["item_id"])
            assert r["est_volume_ml"] == pytest.approx(
                r["v_scale_hat"] * abs(item.recon_volume_ml), rel=1e-12
            )

        report_path = tmp_path / "report.json"
        scatter_path = tmp_path / "scatter.csv"
        assert run(
            "evaluate", "--predictions", preds,
            "--manifest", corpus_dir / "manifest.json",
            "--out", report_path, "--scatter", scatter_path, "--quiet",
        ) == 0
        report = json.loads(report_path.read_text())
        assert set(report) == {
            "method", "dataset", "n", "mae_ml", "mape_pct",
            "pearson_r", "r2", "cosine",
        }
        assert report["n"] == len(records)
        assert len(scatter_path.read_text().splitlines()) == 1 + len(records) + 1

    def test_train_checkpoints_deterministic(self, corpus_dir, tmp_path):
        _, a = self._train(corpus_dir, tmp_path / "a", seed=7)
        _, b = self._train(corpus_dir, tmp_path / "b", seed=7)
        assert a.read_bytes() == b.read_bytes()

    def test_render_only_missing_render_file_exit_2(self, corpus_dir, tmp_path):
        code = run(
            "train", "--manifest", corpus_dir / "manifest.json",
            "--input-emb", corpus_dir / "embeddings/input.emb",
            "--mode", "render-only", "--epochs", 1,
            "--out", tmp_path / "x.ckpt", "--quiet",
        )
        assert code == 2

    def test_predict_m_zero_exit_2(self, corpus_dir, tmp_path):
        code, ckpt = self._train(corpus_dir, tmp_path)
        assert code == 0
        assert run(
            "predict", "--ckpt", ckpt,
            "--manifest", corpus_dir / "manifest.json",
            "--input-emb", corpus_dir / "embeddings/input.emb",
            "--render-emb", corpus_dir / "embeddings/render.emb",
            "--m", 0, "--out", tmp_path / "p.json", "--quiet",
        ) == 2

    def test_input_only_mode(self, corpus_dir, tmp_path):
        code, ckpt = self._train(corpus_dir, tmp_path, mode="input-only")
        assert code == 0
        preds = tmp_path / "p.json"
        assert run(
            "predict", "--ckpt", ckpt,
            "--manifest", corpus_dir / "manifest.json",
            "--input-emb", corpus_dir / "embeddings/input.emb",
            "--m", 5, "--out", preds, "--quiet",
        ) == 0
        records = json.loads(preds.read_text())
        assert all(r["m_views_used"] == 0 for r in records)


class TestBaselineAndEnergy:
    def test_baseline_then_evaluate_r_zero(self, corpus_dir, tmp_path):
        preds = tmp_path / "baseline.json"
        assert run(
            "baseline", "--manifest", corpus_dir / "manifest.json",
            "--method", "dataset-mean", "--out", preds, "--quiet",
        ) == 0
        report_path = tmp_path / "report.json"
        assert run(
            "evaluate", "--predictions", preds,
            "--manifest", corpus_dir / "manifest.json",
            "--method", "dataset-mean",
            "--out", report_path, "--quiet",
        ) == 0
        report = json.loads(report_path.read_text())
        assert report["pearson_r"] == 0.0

    def test_energy_report_schema(self, corpus_dir, tmp_path):
        preds = tmp_path / "baseline.json"
        run(
            "baseline", "--manifest", corpus_dir / "manifest.json",
            "--method", "category-mean", "--out", preds, "--quiet",
        )
        table = tmp_path / "table.json"
        table.write_text(json.dumps({"_fallback": 1.0}))
        report_path = tmp_path / "energy.json"
        assert run(
            "energy", "--predictions", preds,
            "--manifest", corpus_dir / "manifest.json",
            "--table", table, "--out", report_path, "--quiet",
        ) == 0
        report = json.loads(report_path.read_text())
        assert report["method"].endswith("energy")
        assert report["n"] > 0


class TestTrainDefaults:
    def test_defaults_are_reference_protocol(self):
        from realscale.cli import build_parser

        args = build_parser().parse_args(
            ["train", "--manifest", "m.json", "--out", "model.ckpt"]
        )
        assert args.epochs == 300
        assert args.batch == 64
        assert args.lr == 1e-4
        assert args.lr_decay == 0.7
        assert args.lr_step == 10
        assert args.hidden == "512,128"
        assert args.mode == "pair"

    def test_predict_default_m(self):
        from realscale.cli import build_parser

        args = build_parser().parse_args(
            ["predict", "--ckpt", "c", "--manifest", "m", "--out", "p"]
        )
        assert args.m == 75
        assert args.split == "test"


class TestRunLogAndDeterminism:
    def test_outputs_byte_identical_excluding_run_log(self, tmp_path):
        args = [
            "gen-synthetic", "--n", 4, "--categories", 2, "--vmin", 10,
            "--vmax", 50, "--views", 3, "--frames", 1, "--dim", 16, "--seed", 9,
        ]
        run(*args, "--out", tmp_path / "a", "--quiet")
        run(*args, "--out", tmp_path / "b", "--quiet")
        for rel in ["manifest.json", "embeddings/input.emb", "poses.json"]:
            assert (tmp_path / "a" / rel).read_bytes() == (
                tmp_path / "b" / rel
            ).read_bytes()
