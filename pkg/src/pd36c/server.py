"""HTTP service exposing inference, class-evidence maps, and model metadata.

The service holds one immutable (spec, store) pair; requests never mutate
it, so concurrent calls are safe. A hot swap, if ever needed, replaces the
whole loaded model atomically via ``ModelHolder.swap``.

Endpoints:
  GET  /health               service liveness (503 until a model is loaded)
  GET  /model/info           class list, parameter totals, input extent
  POST /predict              multipart image upload -> prediction JSON
  POST /gradcam              multipart image + optional class -> heatmap JSON
  GET  /classes/{name}/info  disease description and treatment text
"""

from __future__ import annotations

import base64
import time

import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, UploadFile

from .data_io import DiseaseInfo, LoadedModel, decode_image_bytes, load_knowledge_base, load_weights
from .errors import DataError
from .explain import grad_cam, heatmap_to_png_bytes, overlay_to_png_bytes
from .model import param_audit, predict


class ModelHolder:
    """Mutable slot for the immutable loaded model (atomic reference swap)."""

    def __init__(self, model: LoadedModel | None = None, kb: dict[str, DiseaseInfo] | None = None):
        self.model = model
        self.kb = kb or {}

    def swap(self, model: LoadedModel, kb: dict[str, DiseaseInfo]) -> None:
        self.kb = kb
        self.model = model

    def require(self) -> LoadedModel:
        if self.model is None:
            raise HTTPException(status_code=503, detail="model not loaded yet")
        return self.model


def create_app(holder: ModelHolder) -> FastAPI:
    app = FastAPI(title="pd36c", version="0.1.0")

    @app.get("/health")
    def health():
        if holder.model is None:
            raise HTTPException(status_code=503, detail="model not loaded yet")
        return {"status": "ok", "model_id": holder.model.model_id}

    @app.get("/model/info")
    def model_info():
        m = holder.require()
        report = param_audit(m.spec, m.store)
        return {
            "model_id": m.model_id,
            "num_classes": m.spec.num_classes,
            "class_names": list(m.class_names),
            "input_extent": m.spec.input_extent,
            "parameters": {
                "trainable": report.trainable,
                "non_trainable": report.non_trainable,
                "total": report.total,
            },
        }

    def _decode_upload(data: bytes, extent: int) -> np.ndarray:
        try:
            return decode_image_bytes(data, model_extent=extent)
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.post("/predict")
    async def predict_endpoint(image: UploadFile = File(...), k: int = Form(5)):
        m = holder.require()
        tensor = _decode_upload(await image.read(), m.spec.input_extent)
        k = max(1, min(k, m.spec.num_classes))
        start = time.perf_counter()
        result = predict(m.spec, m.store, tensor, list(m.class_names), k=k)
        latency_ms = (time.perf_counter() - start) * 1000.0
        info = holder.kb.get(result.class_name)
        return {
            "class_name": result.class_name,
            "class_index": result.class_index,
            "confidence": result.confidence,
            "top_k": [
                {"index": i, "class": name, "probability": p}
                for i, name, p in result.top_k
            ],
            "latency_ms": latency_ms,
            "model_id": m.model_id,
            "disease_info": None
            if info is None
            else {"description": info.description, "treatment": info.treatment},
        }

    @app.post("/gradcam")
    async def gradcam_endpoint(
        image: UploadFile = File(...),
        class_index: int | None = Form(None),
        class_name: str | None = Form(None),
    ):
        m = holder.require()
        tensor = _decode_upload(await image.read(), m.spec.input_extent)
        if class_index is None and class_name is not None:
            if class_name not in m.class_names:
                raise HTTPException(status_code=404, detail=f"unknown class {class_name!r}")
            class_index = m.class_names.index(class_name)
        if class_index is None:
            result = predict(m.spec, m.store, tensor, list(m.class_names), k=1)
            class_index = result.class_index
        if not 0 <= class_index < m.spec.num_classes:
            raise HTTPException(status_code=404, detail=f"unknown class index {class_index}")
        heat = grad_cam(m.spec, m.store, tensor, class_index)
        return {
            "class_index": class_index,
            "class_name": m.class_names[class_index],
            "source_layer": heat.source_layer,
            "constant": heat.constant,
            "heatmap_png_base64": base64.b64encode(heatmap_to_png_bytes(heat)).decode("ascii"),
            "overlay_png_base64": base64.b64encode(
                overlay_to_png_bytes(heat, tensor)
            ).decode("ascii"),
            "grid": heat.values.tolist(),
        }

    @app.get("/classes/{name}/info")
    def class_info(name: str):
        m = holder.require()
        if name not in m.class_names:
            raise HTTPException(status_code=404, detail=f"unknown class {name!r}")
        info = holder.kb.get(
            name, DiseaseInfo(name, "No description available.", "No treatment available.")
        )
        return {
            "class_name": info.class_name,
            "description": info.description,
            "treatment": info.treatment,
        }

    return app


def build_service(weights_path, kb_path=None) -> FastAPI:
    """Load weights (and knowledge base) and return the ready application."""
    model = load_weights(weights_path)
    kb = (
        load_knowledge_base(kb_path, model.class_names)
        if kb_path is not None
        else {}
    )
    return create_app(ModelHolder(model, kb))
