"""HTTP edit service: /edit, /interpolate, /health, and optional /ui assets.

The model state is read-only after load; the only synchronized mutable
structure is the bounded LRU cache of edits, keyed by a deterministic
edit_id (hash of payload + checkpoint hash), so identical requests against
the same checkpoint return identical bytes.
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path

import torch
from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .backends import BackendBundle, toy_bundle
from .checkpoint import checkpoint_file_hash, load_checkpoint
from .conditions import ConditionPair, absent_condition, condition_from_reference, condition_from_text
from .config import RunConfig
from .core import HairEditError, InputError, LatentCode, interpolate_latent
from .editing import EditResult, edit
from .imaging import decode_png_b64, encode_png_b64, png_bytes
from .mapper import HairMapperParams


@dataclass
class CachedEdit:
    latent: LatentCode
    png: bytes
    response: dict


class EditCache:
    """Bounded LRU keyed by edit_id; thread-safe."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._items: OrderedDict[str, CachedEdit] = OrderedDict()
        self._lock = threading.Lock()

    def get(self, edit_id: str) -> CachedEdit | None:
        with self._lock:
            item = self._items.get(edit_id)
            if item is not None:
                self._items.move_to_end(edit_id)
            return item

    def put(self, edit_id: str, item: CachedEdit) -> None:
        with self._lock:
            self._items[edit_id] = item
            self._items.move_to_end(edit_id)
            while len(self._items) > self.capacity:
                self._items.popitem(last=False)

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)


class EditService:
    """Loaded model state plus the edit cache."""

    def __init__(self, cfg: RunConfig, backends: BackendBundle, params: HairMapperParams, checkpoint_hash: str):
        self.cfg = cfg
        self.backends = backends
        self.params = params
        self.checkpoint_hash = checkpoint_hash
        self.cache = EditCache(cfg.service.cache_capacity)

    @classmethod
    def from_config(cls, cfg: RunConfig, checkpoint_path: str | Path) -> "EditService":
        backends = toy_bundle(cfg.dims, cfg.backend_seed)
        ckpt = load_checkpoint(checkpoint_path)
        return cls(cfg, backends, ckpt.params, checkpoint_file_hash(checkpoint_path))

    def edit_from_payload(self, payload: dict) -> tuple[str, CachedEdit]:
        img = decode_png_b64(payload["image"], self.cfg.dims.image_size, resize=True)

        style = absent_condition()
        style_ref = None
        if payload.get("style_text"):
            style = condition_from_text(payload["style_text"], self.backends.text_encoder)
        elif payload.get("style_ref"):
            style_ref = decode_png_b64(payload["style_ref"], self.cfg.dims.image_size, resize=True)
            style = condition_from_reference(style_ref, self.backends.parser, self.backends.image_encoder, "style_ref")

        color = absent_condition()
        color_ref = None
        if payload.get("color_text"):
            color = condition_from_text(payload["color_text"], self.backends.text_encoder)
        elif payload.get("color_ref"):
            color_ref = decode_png_b64(payload["color_ref"], self.cfg.dims.image_size, resize=True)
            color = condition_from_reference(color_ref, self.backends.parser, self.backends.image_encoder, "color_ref")

        pair = ConditionPair(style, color)
        if not pair.any_present:
            raise InputError("at least one of style_text/style_ref/color_text/color_ref is required")

        edit_id = self._edit_id(payload)
        cached = self.cache.get(edit_id)
        if cached is not None:
            return edit_id, cached

        result = edit(
            img,
            pair,
            self.params,
            self.backends,
            weights=self.cfg.train.loss_weights,
            style_ref=style_ref,
            color_ref=color_ref,
            zero_delta_when_unconditioned=self.cfg.train.zero_delta_when_unconditioned,
        )
        png = png_bytes(result.image)
        response = {
            "image": encode_png_b64(result.image),
            "edit_id": edit_id,
            "breakdown": _breakdown_dict(result),
        }
        item = CachedEdit(latent=result.w_edited, png=png, response=response)
        self.cache.put(edit_id, item)
        return edit_id, item

    def interpolate(self, edit_id_a: str, edit_id_b: str, lam: float) -> bytes:
        a = self.cache.get(edit_id_a)
        b = self.cache.get(edit_id_b)
        if a is None or b is None:
            missing = edit_id_a if a is None else edit_id_b
            raise KeyError(missing)
        if lam == 0.0:
            return a.png
        if lam == 1.0:
            return b.png
        with torch.no_grad():
            w_i = interpolate_latent(a.latent, b.latent, lam)
            frame = self.backends.generator.generate(w_i)
        return png_bytes(frame)

    def _edit_id(self, payload: dict) -> str:
        keys = ("image", "style_text", "color_text", "style_ref", "color_ref")
        canonical = json.dumps({k: payload.get(k) for k in keys}, sort_keys=True)
        digest = hashlib.sha256((self.checkpoint_hash + canonical).encode()).hexdigest()
        return digest[:16]


def _breakdown_dict(result: EditResult) -> dict:
    return {
        "losses": result.losses.to_json_dict() if result.losses is not None else None,
        "metrics": result.metrics,
        "warnings": list(result.warnings),
    }


def create_app(service: EditService | None, ui_dir: str | Path | None = None) -> FastAPI:
    """Build the FastAPI app; a None service answers 503 until one is loaded."""
    app = FastAPI(title="hairedit service")
    app.state.service = service

    def _require_service() -> EditService:
        svc = app.state.service
        if svc is None:
            raise HTTPException(status_code=503, detail="checkpoint not loaded")
        return svc

    @app.get("/health")
    def health():
        svc = _require_service()
        return {"status": "ok", "checkpoint_hash": svc.checkpoint_hash}

    @app.post("/edit")
    def do_edit(payload: dict = Body(...)):
        svc = _require_service()
        if not isinstance(payload, dict) or not isinstance(payload.get("image"), str):
            raise HTTPException(status_code=400, detail="payload must include a base64 PNG 'image'")
        for key in ("style_text", "color_text", "style_ref", "color_ref"):
            if key in payload and payload[key] is not None and not isinstance(payload[key], str):
                raise HTTPException(status_code=400, detail=f"{key} must be a string")
        try:
            _, item = svc.edit_from_payload(payload)
        except HairEditError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return JSONResponse(item.response)

    @app.post("/interpolate")
    def do_interpolate(payload: dict = Body(...)):
        svc = _require_service()
        if not isinstance(payload, dict):
            raise HTTPException(status_code=400, detail="payload must be a JSON object")
        a, b = payload.get("edit_id_a"), payload.get("edit_id_b")
        lam = payload.get("lambda")
        if not isinstance(a, str) or not isinstance(b, str):
            raise HTTPException(status_code=400, detail="edit_id_a and edit_id_b are required")
        if not isinstance(lam, (int, float)) or isinstance(lam, bool) or not (0.0 <= float(lam) <= 1.0):
            raise HTTPException(status_code=400, detail="lambda must be a number in [0, 1]")
        try:
            png = svc.interpolate(a, b, float(lam))
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=f"unknown edit_id {exc.args[0]}") from exc
        return {"image": base64.b64encode(png).decode("ascii")}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def build_app_from_config(cfg: RunConfig, checkpoint_path: str | Path) -> FastAPI:
    service = EditService.from_config(cfg, checkpoint_path)
    return create_app(service, ui_dir=cfg.service.ui_dir)
