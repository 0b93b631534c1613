import base64

import numpy as np
import pytest
import torch
from fastapi.testclient import TestClient

from hairedit.imaging import encode_png_b64, save_image
from hairedit.service import EditCache, CachedEdit, EditService, create_app

from conftest import rand_image


@pytest.fixture(scope="module")
def service(trained_run):
    config_path, ckpt, cfg = trained_run
    return EditService.from_config(cfg, ckpt)


@pytest.fixture(scope="module")
def client(service):
    return TestClient(create_app(service))


@pytest.fixture(scope="module")
def face_b64(trained_run):
    _, _, cfg = trained_run
    rng = np.random.default_rng(33)
    return encode_png_b64(rand_image(rng, cfg.dims.image_size))


class TestHealth:
    def test_healthy(self, client, service):
        r = client.get("/health")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert body["checkpoint_hash"] == service.checkpoint_hash

    def test_503_before_load(self):
        unloaded = TestClient(create_app(None))
        assert unloaded.get("/health").status_code == 503
        assert unloaded.post("/edit", json={"image": "x"}).status_code == 503


class TestEdit:
    def test_style_text_edit(self, client, face_b64):
        r = client.post("/edit", json={"image": face_b64, "style_text": "bobcut hairstyle"})
        assert r.status_code == 200
        body = r.json()
        assert set(body) == {"image", "edit_id", "breakdown"}
        png = base64.b64decode(body["image"])
        assert png[:8] == b"\x89PNG\r\n\x1a\n"
        assert body["breakdown"]["losses"]["terms"]["style_text"]["active"]

    def test_deterministic_identical_payloads(self, client, face_b64):
        payload = {"image": face_b64, "style_text": "afro hairstyle", "color_text": "green hair"}
        r1 = client.post("/edit", json=payload)
        r2 = client.post("/edit", json=payload)
        assert r1.json()["image"] == r2.json()["image"]
        assert r1.json()["edit_id"] == r2.json()["edit_id"]

    def test_mixed_modal_payload(self, client, face_b64, trained_run):
        _, _, cfg = trained_run
        ref = encode_png_b64(rand_image(np.random.default_rng(44), cfg.dims.image_size))
        r = client.post("/edit", json={"image": face_b64, "style_text": "perm hairstyle", "color_ref": ref})
        assert r.status_code == 200
        assert r.json()["breakdown"]["losses"]["terms"]["color_image"]["active"]

    def test_no_conditions_400(self, client, face_b64):
        r = client.post("/edit", json={"image": face_b64})
        assert r.status_code == 400

    def test_missing_image_400(self, client):
        assert client.post("/edit", json={"style_text": "afro hairstyle"}).status_code == 400

    def test_invalid_base64_400(self, client):
        r = client.post("/edit", json={"image": "@@not/base64@@", "style_text": "afro hairstyle"})
        assert r.status_code == 400

    def test_empty_text_400(self, client, face_b64):
        r = client.post("/edit", json={"image": face_b64, "style_text": "   "})
        assert r.status_code == 400


class TestInterpolate:
    @pytest.fixture
    def two_edit_ids(self, client, face_b64):
        a = client.post("/edit", json={"image": face_b64, "style_text": "afro hairstyle"}).json()
        b = client.post("/edit", json={"image": face_b64, "color_text": "green hair"}).json()
        return a, b

    def test_lambda_zero_returns_edit_a_bytes(self, client, two_edit_ids):
        a, b = two_edit_ids
        r = client.post(
            "/interpolate", json={"edit_id_a": a["edit_id"], "edit_id_b": b["edit_id"], "lambda": 0.0}
        )
        assert r.status_code == 200
        assert r.json()["image"] == a["image"]

    def test_lambda_one_returns_edit_b_bytes(self, client, two_edit_ids):
        a, b = two_edit_ids
        r = client.post(
            "/interpolate", json={"edit_id_a": a["edit_id"], "edit_id_b": b["edit_id"], "lambda": 1.0}
        )
        assert r.json()["image"] == b["image"]

    def test_midpoint_differs_from_endpoints(self, client, two_edit_ids):
        a, b = two_edit_ids
        r = client.post(
            "/interpolate", json={"edit_id_a": a["edit_id"], "edit_id_b": b["edit_id"], "lambda": 0.5}
        )
        assert r.status_code == 200
        assert r.json()["image"] not in (a["image"], b["image"])

    def test_unknown_edit_id_404(self, client, two_edit_ids):
        a, _ = two_edit_ids
        r = client.post(
            "/interpolate", json={"edit_id_a": a["edit_id"], "edit_id_b": "deadbeef", "lambda": 0.5}
        )
        assert r.status_code == 404

    def test_lambda_out_of_range_400(self, client, two_edit_ids):
        a, b = two_edit_ids
        for lam in (-0.1, 1.5, "x", None, True):
            r = client.post(
                "/interpolate", json={"edit_id_a": a["edit_id"], "edit_id_b": b["edit_id"], "lambda": lam}
            )
            assert r.status_code == 400, lam


class TestCache:
    def test_lru_eviction(self):
        cache = EditCache(capacity=2)
        for i in range(3):
            cache.put(f"id{i}", CachedEdit(latent=None, png=b"", response={}))
        assert cache.get("id0") is None
        assert cache.get("id2") is not None
        assert len(cache) == 2

    def test_get_refreshes_recency(self):
        cache = EditCache(capacity=2)
        cache.put("a", CachedEdit(latent=None, png=b"", response={}))
        cache.put("b", CachedEdit(latent=None, png=b"", response={}))
        cache.get("a")
        cache.put("c", CachedEdit(latent=None, png=b"", response={}))
        assert cache.get("a") is not None
        assert cache.get("b") is None


class TestUiMount:
    def test_ui_served_when_dir_exists(self, service, tmp_path):
        ui = tmp_path / "dist"
        ui.mkdir()
        (ui / "index.html").write_text("<html><body>console</body></html>")
        app = create_app(service, ui_dir=ui)
        c = TestClient(app)
        r = c.get("/ui/")
        assert r.status_code == 200
        assert "console" in r.text

    def test_no_ui_dir_still_serves_api(self, service, tmp_path):
        app = create_app(service, ui_dir=tmp_path / "absent")
        c = TestClient(app)
        assert c.get("/health").status_code == 200


class TestCliServiceParity:
    def test_service_bytes_match_cli_edit(self, trained_run, tmp_path):
        """Identical inputs and checkpoint produce byte-identical PNGs via CLI and service."""
        import base64 as b64mod

        from hairedit.cli import main

        config_path, ckpt, cfg = trained_run
        face_path = tmp_path / "face.png"
        save_image(rand_image(np.random.default_rng(55), cfg.dims.image_size), face_path)

        out = tmp_path / "cli.png"
        assert (
            main(
                [
                    "edit",
                    str(face_path),
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
            == 0
        )

        svc = EditService.from_config(cfg, ckpt)
        api = TestClient(create_app(svc))
        payload = {
            "image": b64mod.b64encode(face_path.read_bytes()).decode("ascii"),
            "style_text": "afro hairstyle",
        }
        response = api.post("/edit", json=payload)
        assert response.status_code == 200
        assert b64mod.b64decode(response.json()["image"]) == out.read_bytes()
