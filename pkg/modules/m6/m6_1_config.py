"""M6.1 - Run configuration, benchmark presets and provider wiring.

Precedence: explicit CLI flags > preset > model defaults. Provider endpoints
come from a JSON file and are overridden by MRD_* environment variables.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple

import orjson
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from modules.common.errors import ConfigError
from modules.m3 import HeuristicExtractor
from modules.m4 import FusionConfig, Providers
from modules.m5 import (
    HttpDetectorProvider,
    HttpEmbeddingProvider,
    HttpObjectExtractor,
    ProviderEndpoint,
    SyntheticSceneSpec,
    synthetic_detector,
    synthetic_embedder,
    synthetic_extractor,
)
from services.common.config import Settings

ROOT = Path(__file__).resolve().parents[2]
PRESETS_PATH = ROOT / "configs" / "presets.yml"

DEFAULT_SYSTEM_PROMPT = (
    "You extract the physical objects a visual question is about. Answer with a JSON array "
    "of short lowercase noun phrases naming only the objects that must be located in the image."
)


def _pair(value: Any) -> Tuple[int, int]:
    if isinstance(value, str):
        parts = value.lower().replace(",", "x").split("x")
        value = [p.strip() for p in parts]
    if isinstance(value, (list, tuple)):
        if len(value) == 1:
            value = (value[0], value[0])
        if len(value) != 2:
            raise ValueError(f"expected N or WxH, got {value!r}")
        return (int(value[0]), int(value[1]))
    n = int(value)
    return (n, n)


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    preset: Optional[str] = None
    crop_px: int = Field(default=112, ge=1)
    ratio_k: int = Field(default=2, ge=2)
    window_px: Tuple[int, int] = (1232, 1232)
    stride_px: Tuple[int, int] = (896, 896)
    tau_det: float = Field(default=0.3, ge=0.0, le=1.0)
    weight_w: float = Field(default=0.4, ge=0.0, le=1.0)
    top_k: int = Field(default=16, ge=1)
    max_steps: int = Field(default=200, ge=1)
    answer_tau: float = Field(default=0.6, ge=0.0, le=1.0)
    membership: Literal["any", "center"] = "any"
    batch_size: int = Field(default=32, ge=1)
    workers: int = Field(default=1, ge=1)
    parallel_branches: bool = False

    @field_validator("window_px", "stride_px", mode="before")
    @classmethod
    def _parse_pair(cls, v: Any) -> Tuple[int, int]:
        return _pair(v)

    @field_validator("window_px", "stride_px")
    @classmethod
    def _positive(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] < 1 or v[1] < 1:
            raise ValueError(f"must be positive, got {v}")
        return v

    def fusion(self) -> FusionConfig:
        return FusionConfig(
            weight_w=self.weight_w,
            top_k=self.top_k,
            max_steps=self.max_steps,
            answer_tau=self.answer_tau,
        )

    def with_overrides(self, **changes: Any) -> "RunConfig":
        data = self.model_dump()
        data.update({k: v for k, v in changes.items() if v is not None})
        return make_run_config(data)

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def make_run_config(data: Mapping[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(dict(data))
    except ValidationError as exc:
        raise ConfigError(f"invalid run config: {exc}") from exc


def load_presets(path: Path = PRESETS_PATH) -> Dict[str, Dict[str, Any]]:
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read presets {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"presets file {path} must be a mapping")
    return data


def build_run_config(
    preset: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    presets_path: Path = PRESETS_PATH,
) -> RunConfig:
    data: Dict[str, Any] = {}
    if preset:
        presets = load_presets(presets_path)
        if preset not in presets:
            raise ConfigError(f"unknown preset {preset!r}; known: {', '.join(sorted(presets))}")
        data.update(presets[preset])
        data["preset"] = preset
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return make_run_config(data)


class ProvidersConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    embed: Optional[ProviderEndpoint] = None
    detect: Optional[ProviderEndpoint] = None
    extract: Optional[ProviderEndpoint] = None
    embed_dim: Optional[int] = Field(default=None, ge=1)
    system_prompt: str = DEFAULT_SYSTEM_PROMPT
    examples: List[str] = Field(default_factory=list)


def _override(
    ep: Optional[ProviderEndpoint], url: Optional[str], token: Optional[str]
) -> Optional[ProviderEndpoint]:
    if url is None and token is None:
        return ep
    data = ep.model_dump() if ep is not None else {}
    if url is not None:
        data["base_url"] = url
    if token is not None:
        data["auth_token"] = token
    if "base_url" not in data:
        return None
    return ProviderEndpoint.model_validate(data)


def load_providers_config(
    path: Optional[Path], settings: Optional[Settings] = None
) -> ProvidersConfig:
    settings = settings or Settings()
    try:
        raw = orjson.loads(path.read_bytes()) if path is not None else {}
        cfg = ProvidersConfig.model_validate(raw)
        return cfg.model_copy(
            update={
                "embed": _override(cfg.embed, settings.embed_url, settings.auth_token),
                "detect": _override(cfg.detect, settings.detect_url, settings.auth_token),
                "extract": _override(cfg.extract, settings.extract_url, settings.auth_token),
            }
        )
    except OSError as exc:
        raise ConfigError(f"cannot read providers config {path}: {exc}") from exc
    except (orjson.JSONDecodeError, ValidationError) as exc:
        raise ConfigError(f"invalid providers config {path}: {exc}") from exc


def build_providers(
    run: RunConfig,
    providers_cfg: Optional[ProvidersConfig] = None,
    scene: Optional[SyntheticSceneSpec] = None,
) -> Providers:
    """Synthetic trio for a scene, otherwise HTTP providers for configured endpoints."""
    if scene is not None:
        return Providers(
            embedder=synthetic_embedder(scene),
            detector=synthetic_detector(scene),
            extractor=synthetic_extractor(scene),
        )
    cfg = providers_cfg or ProvidersConfig()
    embedder = detector = None
    extractor: Any = HeuristicExtractor()
    if cfg.embed is not None:
        embedder = HttpEmbeddingProvider(cfg.embed, cfg.embed_dim, workers=run.workers)
    if cfg.detect is not None:
        detector = HttpDetectorProvider(cfg.detect)
    if cfg.extract is not None:
        extractor = HttpObjectExtractor(cfg.extract, cfg.system_prompt, cfg.examples)
    return Providers(embedder=embedder, detector=detector, extractor=extractor)


def load_scene(path: Path) -> SyntheticSceneSpec:
    try:
        return SyntheticSceneSpec.model_validate(orjson.loads(path.read_bytes()))
    except OSError as exc:
        raise ConfigError(f"cannot read scene {path}: {exc}") from exc
    except (orjson.JSONDecodeError, ValidationError) as exc:
        raise ConfigError(f"invalid scene spec {path}: {exc}") from exc
