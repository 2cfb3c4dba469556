"""Provider stub: the wire protocol served by synthetic providers.

Requests must carry ``region`` for crops and windows; the stub scores
geometry, not pixels. The scene comes from MRD_STUB_SCENE.
"""

from __future__ import annotations

import os
from functools import lru_cache
from pathlib import Path
from typing import Optional

import orjson
import uvicorn
from fastapi import Depends, FastAPI, HTTPException

from modules.common.logs import get_logger
from modules.m5 import (
    DetectionOut,
    DetectRequest,
    DetectResponse,
    EmbedRequest,
    EmbedResponse,
    ExtractRequest,
    ExtractResponse,
    SyntheticSceneSpec,
    embedding_for_similarity,
    synthetic_detector,
    synthetic_embedder,
    synthetic_extractor,
)
from services.common.config import get_settings

LOGGER = get_logger("provider-stub")

app = FastAPI(title="mrd-provider-stub", version="0.1.0")


@lru_cache(maxsize=4)
def _load(path: str) -> SyntheticSceneSpec:
    return SyntheticSceneSpec.model_validate(orjson.loads(Path(path).read_bytes()))


def get_scene() -> Optional[SyntheticSceneSpec]:
    path = get_settings().stub_scene
    return _load(path) if path else None


def _require(scene: Optional[SyntheticSceneSpec]) -> SyntheticSceneSpec:
    if scene is None:
        raise HTTPException(status_code=503, detail="no scene configured (MRD_STUB_SCENE)")
    return scene


@app.get("/health")
def health(scene: Optional[SyntheticSceneSpec] = Depends(get_scene)):
    return {
        "status": "ok",
        "service": "provider-stub",
        "scene": scene.scene_id if scene is not None else None,
    }


@app.post("/v1/embed", response_model=EmbedResponse)
def embed(req: EmbedRequest, scene: Optional[SyntheticSceneSpec] = Depends(get_scene)):
    scene = _require(scene)
    embedder = synthetic_embedder(scene)
    if req.kind == "text":
        vec = embedder.embed_query(req.payload)
    else:
        if req.region is None:
            raise HTTPException(status_code=422, detail="image embeds need a region")
        vec = embedding_for_similarity(embedder.similarity(req.region.to_rect()), scene.dim)
    return EmbedResponse(embedding=[float(v) for v in vec], dim=len(vec))


@app.post("/v1/detect", response_model=DetectResponse)
def detect(req: DetectRequest, scene: Optional[SyntheticSceneSpec] = Depends(get_scene)):
    scene = _require(scene)
    if req.region is None:
        raise HTTPException(status_code=422, detail="detect needs a region")
    dets = synthetic_detector(scene).detect_rect(req.region.to_rect(), req.labels)
    LOGGER.debug("detect region={} labels={} -> {}", req.region, req.labels, len(dets))
    return DetectResponse(
        detections=[
            DetectionOut(
                x0=d.box.x0, y0=d.box.y0, x1=d.box.x1, y1=d.box.y1, score=d.score, label=d.label
            )
            for d in dets
            if d.score > req.threshold
        ]
    )


@app.post("/v1/extract", response_model=ExtractResponse)
def extract(req: ExtractRequest, scene: Optional[SyntheticSceneSpec] = Depends(get_scene)):
    scene = _require(scene)
    return ExtractResponse(objects=synthetic_extractor(scene).extract(req.query))


def serve(scene: Optional[Path] = None, port: Optional[int] = None) -> None:
    settings = get_settings()
    if scene is not None:
        os.environ["MRD_STUB_SCENE"] = str(scene)
    uvicorn.run(app, host="127.0.0.1", port=port or settings.stub_port)
