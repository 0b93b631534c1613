import json
from pathlib import Path

import numpy as np
import pytest
import torch

from hairedit.backends import toy_bundle
from hairedit.cli import main
from hairedit.imaging import load_image, save_image

from conftest import rand_image


@pytest.fixture(scope="module")
def face_png(tmp_path_factory, trained_run):
    _, _, cfg = trained_run
    path = tmp_path_factory.mktemp("inputs") / "face.png"
    rng = np.random.default_rng(21)
    save_image(rand_image(rng, cfg.dims.image_size), path)
    return path


class TestInitConfig:
    def test_writes_loadable_config(self, tmp_path):
        path = tmp_path / "c.json"
        assert main(["init-config", str(path), "--desk"]) == 0
        data = json.loads(path.read_text())
        assert data["train"]["dims"]["n_layers"] == 6


class TestTrainCommand:
    def test_train_and_resume(self, tmp_path):
        config = tmp_path / "c.json"
        main(["init-config", str(config), "--desk"])
        data = json.loads(config.read_text())
        data["train"]["iterations"] = 6
        data["train"]["checkpoint_every"] = 3
        config.write_text(json.dumps(data))
        out = tmp_path / "run"
        assert main(["train", "--config", str(config), "--out", str(out)]) == 0
        assert (out / "checkpoint_final.npz").exists()
        assert (out / "train_log.jsonl").exists()
        mid = out / "checkpoint_iter000003.npz"
        assert mid.exists()
        data["train"]["iterations"] = 9
        config.write_text(json.dumps(data))
        assert main(["train", "--config", str(config), "--out", str(out), "--resume", str(mid)]) == 0

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["train", "--config", str(tmp_path / "none.json")]) == 2


class TestEditCommand:
    def test_style_text_edit(self, tmp_path, trained_run, face_png):
        config_path, ckpt, _ = trained_run
        out = tmp_path / "edited.png"
        rc = main(
            [
                "edit",
                str(face_png),
                "--config",
                str(config_path),
                "--checkpoint",
                str(ckpt),
                "--out",
                str(out),
                "--style-text",
                "bobcut hairstyle",
            ]
        )
        assert rc == 0
        assert out.exists()
        sidecar = json.loads(out.with_suffix(".json").read_text())
        assert sidecar["conditions"]["style"] == "text:bobcut hairstyle"
        assert sidecar["losses"]["terms"]["style_text"]["active"]
        assert Path(sidecar["latent"]).exists()

    def test_mixed_modalities_accepted(self, tmp_path, trained_run, face_png):
        config_path, ckpt, cfg = trained_run
        ref = tmp_path / "ref.png"
        save_image(rand_image(np.random.default_rng(5), cfg.dims.image_size), ref)
        out = tmp_path / "mixed.png"
        rc = main(
            [
                "edit",
                str(face_png),
                "--config",
                str(config_path),
                "--checkpoint",
                str(ckpt),
                "--out",
                str(out),
                "--style-text",
                "perm hairstyle",
                "--color-ref",
                str(ref),
            ]
        )
        assert rc == 0
        sidecar = json.loads(out.with_suffix(".json").read_text())
        assert sidecar["losses"]["terms"]["color_image"]["active"]

    def test_no_conditions_rejected(self, tmp_path, trained_run, face_png):
        config_path, ckpt, _ = trained_run
        rc = main(
            [
                "edit",
                str(face_png),
                "--config",
                str(config_path),
                "--checkpoint",
                str(ckpt),
                "--out",
                str(tmp_path / "x.png"),
            ]
        )
        assert rc == 2

    def test_cli_matches_library_edit(self, tmp_path, trained_run, face_png):
        """CLI output bytes equal a direct library call on the same inputs."""
        config_path, ckpt, cfg = trained_run
        out = tmp_path / "lib_check.png"
        main(
            [
                "edit",
                str(face_png),
                "--config",
                str(config_path),
                "--checkpoint",
                str(ckpt),
                "--out",
                str(out),
                "--style-text",
                "afro hairstyle",
            ]
        )
        from hairedit.checkpoint import load_checkpoint
        from hairedit.conditions import ConditionPair, absent_condition, condition_from_text
        from hairedit.editing import edit
        from hairedit.imaging import png_bytes

        backends = toy_bundle(cfg.dims, cfg.backend_seed)
        pair = ConditionPair(
            condition_from_text("afro hairstyle", backends.text_encoder), absent_condition()
        )
        result = edit(
            load_image(face_png, cfg.dims.image_size),
            pair,
            load_checkpoint(ckpt).params,
            backends,
            weights=cfg.train.loss_weights,
        )
        assert out.read_bytes() == png_bytes(result.image)


class TestInterpolateCommand:
    def test_frames_written(self, tmp_path, trained_run, face_png):
        config_path, ckpt, _ = trained_run
        outs = []
        for i, text in enumerate(("afro hairstyle", "mohawk hairstyle")):
            out = tmp_path / f"e{i}.png"
            main(
                [
                    "edit",
                    str(face_png),
                    "--config",
                    str(config_path),
                    "--checkpoint",
                    str(ckpt),
                    "--out",
                    str(out),
                    "--style-text",
                    text,
                ]
            )
            outs.append(out.with_suffix(".latent.npy"))
        frames_dir = tmp_path / "frames"
        rc = main(
            [
                "interpolate",
                "--config",
                str(config_path),
                "--latent-a",
                str(outs[0]),
                "--latent-b",
                str(outs[1]),
                "--steps",
                "4",
                "--out-dir",
                str(frames_dir),
            ]
        )
        assert rc == 0
        assert sorted(p.name for p in frames_dir.iterdir()) == [f"frame_{k:03d}.png" for k in range(4)]
        # Endpoint frame equals the stored edit image.
        assert (frames_dir / "frame_000.png").read_bytes() == (tmp_path / "e0.png").read_bytes()


class TestEvalCommand:
    def test_identical_pair_report(self, tmp_path, trained_run, face_png):
        config_path, _, _ = trained_run
        manifest = tmp_path / "pairs.json"
        manifest.write_text(json.dumps([{"before": str(face_png), "after": str(face_png)}]))
        out = tmp_path / "report.json"
        rc = main(["eval", "--config", str(config_path), "--manifest", str(manifest), "--out", str(out)])
        assert rc == 0
        report = json.loads(out.read_text())
        assert report["means"]["ids"] == pytest.approx(1.0, abs=1e-9)
        assert report["means"]["psnr"] == 99.0

    def test_malformed_manifest_exits_2(self, tmp_path, trained_run):
        config_path, _, _ = trained_run
        manifest = tmp_path / "bad.json"
        manifest.write_text("{broken")
        assert main(["eval", "--config", str(config_path), "--manifest", str(manifest)]) == 2

    def test_missing_manifest_exits_2(self, tmp_path, trained_run):
        config_path, _, _ = trained_run
        assert main(["eval", "--config", str(config_path), "--manifest", str(tmp_path / "no.json")]) == 2


class TestAugmentRefs:
    def test_renders_reference_pool(self, tmp_path, trained_run):
        config_path, ckpt, _ = trained_run
        out_dir = tmp_path / "refs"
        rc = main(
            [
                "augment-refs",
                "--config",
                str(config_path),
                "--checkpoint",
                str(ckpt),
                "--out-dir",
                str(out_dir),
                "--count",
                "3",
            ]
        )
        assert rc == 0
        assert len(list(out_dir.glob("*.png"))) == 3


class TestTrainWithImagePool:
    def test_train_from_reference_directory_with_split(self, tmp_path):
        rng = np.random.default_rng(66)
        pool_dir = tmp_path / "pool"
        for name in ("x.png", "y.png", "z.png"):
            save_image(rand_image(rng, 32), pool_dir / name)
        (tmp_path / "split.txt").write_text("x.png\ny.png\n")

        config = tmp_path / "c.json"
        main(["init-config", str(config), "--desk"])
        data = json.loads(config.read_text())
        data["train"]["iterations"] = 4
        data["train"]["ref_pool_dir"] = str(pool_dir)
        data["train"]["ref_pool_split"] = str(tmp_path / "split.txt")
        data["train"]["latent_source"] = "invert"
        config.write_text(json.dumps(data))
        out = tmp_path / "run"
        assert main(["train", "--config", str(config), "--out", str(out)]) == 0
        assert (out / "checkpoint_final.npz").exists()
