"""M5.1 - Provider wire protocol (JSON over HTTP).

POST /v1/embed    {kind, payload, region?}          -> {embedding, dim}
POST /v1/detect   {image, labels, threshold, region?} -> {detections: [...]}
POST /v1/extract  {system, examples, query}         -> {objects: [...]}

``region`` is optional padded-image pixel geometry of the crop or window.
"""

from __future__ import annotations

from typing import List, Literal, Optional

import httpx
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from modules.m1 import PixelRect

EMBED_PATH = "/v1/embed"
DETECT_PATH = "/v1/detect"
EXTRACT_PATH = "/v1/extract"


class ProviderEndpoint(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    base_url: str
    timeout_ms: int = Field(default=30000, ge=1)
    retries: int = Field(default=2, ge=0, le=10)
    auth_token: Optional[str] = None

    @field_validator("base_url")
    @classmethod
    def _valid_url(cls, v: str) -> str:
        try:
            url = httpx.URL(v)
        except Exception as exc:  # noqa: BLE001
            raise ValueError(f"invalid base_url {v!r}: {exc}") from exc
        if url.scheme not in ("http", "https") or not url.host:
            raise ValueError(f"base_url must be an absolute http(s) URL, got {v!r}")
        return v.rstrip("/")


class Region(BaseModel):
    x0: int
    y0: int
    x1: int
    y1: int

    @model_validator(mode="after")
    def _nonempty(self) -> "Region":
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("region must be nonempty")
        return self

    @classmethod
    def from_rect(cls, rect: PixelRect) -> "Region":
        return cls(x0=rect.x0, y0=rect.y0, x1=rect.x1, y1=rect.y1)

    def to_rect(self) -> PixelRect:
        return PixelRect(self.x0, self.y0, self.x1, self.y1)


class EmbedRequest(BaseModel):
    kind: Literal["text", "image"]
    payload: str
    region: Optional[Region] = None


class EmbedResponse(BaseModel):
    embedding: List[float] = Field(min_length=1)
    dim: int = Field(ge=1)

    @model_validator(mode="after")
    def _dim_matches(self) -> "EmbedResponse":
        if len(self.embedding) != self.dim:
            raise ValueError(f"embedding length {len(self.embedding)} != declared dim {self.dim}")
        return self


class DetectRequest(BaseModel):
    image: str
    labels: List[str] = Field(min_length=1)
    threshold: float = Field(ge=0.0, le=1.0)
    region: Optional[Region] = None


class DetectionOut(BaseModel):
    x0: int
    y0: int
    x1: int
    y1: int
    score: float = Field(ge=0.0, le=1.0)
    label: str

    @model_validator(mode="after")
    def _nonempty(self) -> "DetectionOut":
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("detection box must be nonempty")
        return self


class DetectResponse(BaseModel):
    detections: List[DetectionOut] = Field(default_factory=list)


class ExtractRequest(BaseModel):
    system: str
    examples: List[str] = Field(default_factory=list)
    query: str = Field(min_length=1)


class ExtractResponse(BaseModel):
    # list of labels, or the model's raw JSON-array text
    objects: List[str] | str
