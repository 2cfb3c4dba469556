"""M5.2 - HTTP provider clients.

Requests are idempotent POSTs retried with exponential backoff
(100 ms, 200 ms, ...). Batches are all-or-nothing.
"""

from __future__ import annotations

import base64
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence

import httpx
import numpy as np
from PIL import Image
from pydantic import BaseModel, ValidationError

from modules.common.errors import InvalidArgumentError, ProtocolError, ProviderError
from modules.common.logs import get_logger
from modules.m1 import PixelRect
from modules.m2 import Crop, Embedding, as_embedding
from modules.m3 import Detection

from .m5_1_protocol import (
    DETECT_PATH,
    EMBED_PATH,
    EXTRACT_PATH,
    DetectRequest,
    DetectResponse,
    EmbedRequest,
    EmbedResponse,
    ExtractRequest,
    ExtractResponse,
    ProviderEndpoint,
    Region,
)

LOGGER = get_logger("m5.http")

BACKOFF_BASE_S = 0.1
BACKOFF_FACTOR = 2.0


def encode_png_b64(pixels: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(pixels)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _crop_payload(crop: Crop) -> str:
    if crop.pixels is None:
        raise InvalidArgumentError("HTTP providers need crops with pixels")
    return encode_png_b64(crop.pixels)


class ProviderClient:
    """POST JSON to one endpoint with retries.

    An injected httpx.Client belongs to the caller; one created here is closed by close().
    """

    def __init__(
        self,
        endpoint: ProviderEndpoint,
        client: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.endpoint = endpoint
        self._owns_client = client is None
        self._client = client or httpx.Client(timeout=endpoint.timeout_ms / 1000.0)
        self._sleep = sleep

    @property
    def closed(self) -> bool:
        return self._client.is_closed

    def close(self) -> None:
        if self._owns_client:
            self._client.close()

    def __enter__(self) -> "ProviderClient":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()

    def _headers(self) -> Dict[str, str]:
        if self.endpoint.auth_token:
            return {"Authorization": f"Bearer {self.endpoint.auth_token}"}
        return {}

    def post(self, path: str, body: Dict[str, Any]) -> Any:
        url = f"{self.endpoint.base_url}{path}"
        attempts = self.endpoint.retries + 1
        status: Optional[int] = None
        last: Optional[Exception] = None
        for attempt in range(1, attempts + 1):
            try:
                resp = self._client.post(
                    url,
                    json=body,
                    headers=self._headers(),
                    timeout=self.endpoint.timeout_ms / 1000.0,
                )
                resp.raise_for_status()
            except httpx.HTTPStatusError as exc:
                status, last = exc.response.status_code, exc
            except httpx.HTTPError as exc:
                status, last = None, exc
            else:
                try:
                    return resp.json()
                except json.JSONDecodeError as exc:
                    raise ProtocolError(
                        f"non-JSON response from {url}", raw=resp.text, attempts=attempt
                    ) from exc
            if attempt < attempts:
                delay = BACKOFF_BASE_S * BACKOFF_FACTOR ** (attempt - 1)
                LOGGER.warning(
                    "POST {} failed ({}), retry {}/{} in {:.2f}s",
                    url,
                    last,
                    attempt,
                    attempts - 1,
                    delay,
                )
                self._sleep(delay)
        raise ProviderError(f"POST {url} failed: {last}", status=status, attempts=attempts)

    def call(self, path: str, request: BaseModel, response_model: type[BaseModel]) -> Any:
        raw = self.post(path, request.model_dump(mode="json", exclude_none=True))
        try:
            return response_model.model_validate(raw)
        except ValidationError as exc:
            raise ProtocolError(f"invalid response from {path}: {exc}", raw=raw) from exc


def _client_for(endpoint: ProviderEndpoint, client: Optional[Any]) -> ProviderClient:
    if isinstance(client, ProviderClient):
        return client
    return ProviderClient(endpoint, client=client)


@contextmanager
def _session(endpoint: ProviderEndpoint, client: Optional[Any]) -> Iterator[ProviderClient]:
    """Borrow the caller's client, or open one for this call only."""
    if isinstance(client, ProviderClient):
        yield client
        return
    with ProviderClient(endpoint, client=client) as pc:
        yield pc


def _parse_embedding(resp: EmbedResponse, expected_dim: Optional[int]) -> Embedding:
    if expected_dim is not None and resp.dim != expected_dim:
        raise ProtocolError(
            f"embedding dim {resp.dim} != declared {expected_dim}", raw=resp.model_dump()
        )
    try:
        return as_embedding(resp.embedding)
    except InvalidArgumentError as exc:
        raise ProtocolError(str(exc), raw=resp.model_dump()) from exc


def embed_query(
    endpoint: ProviderEndpoint,
    text: str,
    expected_dim: Optional[int] = None,
    client: Optional[Any] = None,
) -> Embedding:
    with _session(endpoint, client) as pc:
        resp = pc.call(EMBED_PATH, EmbedRequest(kind="text", payload=text), EmbedResponse)
    return _parse_embedding(resp, expected_dim)


def embed_crops(
    endpoint: ProviderEndpoint,
    crops: Sequence[Crop],
    expected_dim: Optional[int] = None,
    client: Optional[Any] = None,
    workers: int = 1,
) -> List[Embedding]:
    """One request per crop; any failure fails the whole batch."""
    with _session(endpoint, client) as pc:
        return _embed_all(pc, crops, expected_dim, workers)


def _embed_all(
    pc: ProviderClient, crops: Sequence[Crop], expected_dim: Optional[int], workers: int
) -> List[Embedding]:
    def one(crop: Crop) -> Embedding:
        req = EmbedRequest(
            kind="image", payload=_crop_payload(crop), region=Region.from_rect(crop.rect)
        )
        try:
            return _parse_embedding(pc.call(EMBED_PATH, req, EmbedResponse), expected_dim)
        except ProviderError as exc:
            if exc.index is None and crop.index is not None:
                exc.with_index(crop.index.as_tuple())
            raise

    if workers > 1 and len(crops) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, crops))
    return [one(c) for c in crops]


def detect_in_window(
    endpoint: ProviderEndpoint,
    window_image: Crop,
    labels: Sequence[str],
    threshold: float = 0.0,
    client: Optional[Any] = None,
) -> List[Detection]:
    """Window-local detections, validated against the window size."""
    labels = list(labels)
    if not labels:
        raise InvalidArgumentError("detect_in_window needs at least one label")
    req = DetectRequest(
        image=_crop_payload(window_image),
        labels=labels,
        threshold=threshold,
        region=Region.from_rect(window_image.rect),
    )
    with _session(endpoint, client) as pc:
        resp = pc.call(DETECT_PATH, req, DetectResponse)
    local = PixelRect(0, 0, window_image.rect.width, window_image.rect.height)
    out = []
    for d in resp.detections:
        box = PixelRect(d.x0, d.y0, d.x1, d.y1)
        if not local.contains(box):
            raise ProtocolError(
                f"box {box.as_tuple()} outside window {local.as_tuple()}", raw=resp.model_dump()
            )
        out.append(Detection(box=box, score=d.score, label=d.label))
    return out


def extract_objects_llm(
    endpoint: ProviderEndpoint,
    system_prompt: str,
    examples: Sequence[str],
    query: str,
    client: Optional[Any] = None,
) -> List[str]:
    """Raw object labels from the LLM; normalization happens in m3."""
    if not query or not query.strip():
        raise InvalidArgumentError("query must be nonempty")
    req = ExtractRequest(system=system_prompt, examples=list(examples), query=query)
    with _session(endpoint, client) as pc:
        resp = pc.call(EXTRACT_PATH, req, ExtractResponse)
    objects = resp.objects
    if isinstance(objects, str):
        try:
            objects = json.loads(objects)
        except json.JSONDecodeError as exc:
            raise ProtocolError("extractor output is not JSON", raw=resp.objects) from exc
        if not isinstance(objects, list) or not all(isinstance(o, str) for o in objects):
            raise ProtocolError("extractor output is not a JSON array of strings", raw=objects)
    return list(objects)


class _HttpProvider:
    _pc: ProviderClient

    def close(self) -> None:
        self._pc.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


class HttpEmbeddingProvider(_HttpProvider):
    def __init__(
        self,
        endpoint: ProviderEndpoint,
        expected_dim: Optional[int] = None,
        client: Optional[Any] = None,
        workers: int = 1,
    ) -> None:
        self.endpoint = endpoint
        self.expected_dim = expected_dim
        self.workers = workers
        self._pc = _client_for(endpoint, client)

    def embed_query(self, text: str) -> Embedding:
        return embed_query(self.endpoint, text, self.expected_dim, self._pc)

    def embed_crops(self, crops: Sequence[Crop]) -> List[Embedding]:
        return embed_crops(self.endpoint, crops, self.expected_dim, self._pc, self.workers)


class HttpDetectorProvider(_HttpProvider):
    def __init__(self, endpoint: ProviderEndpoint, client: Optional[Any] = None) -> None:
        self.endpoint = endpoint
        self._pc = _client_for(endpoint, client)

    def detect(self, window: Crop, labels: Sequence[str], threshold: float) -> List[Detection]:
        return detect_in_window(self.endpoint, window, labels, threshold, self._pc)


class HttpObjectExtractor(_HttpProvider):
    def __init__(
        self,
        endpoint: ProviderEndpoint,
        system_prompt: str,
        examples: Sequence[str] = (),
        client: Optional[Any] = None,
    ) -> None:
        self.endpoint = endpoint
        self.system_prompt = system_prompt
        self.examples = list(examples)
        self._pc = _client_for(endpoint, client)

    def extract(self, query: str) -> List[str]:
        return extract_objects_llm(
            self.endpoint, self.system_prompt, self.examples, query, self._pc
        )
