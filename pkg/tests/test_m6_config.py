from pathlib import Path

import pytest

from modules.common.errors import ConfigError
from modules.m3 import HeuristicExtractor
from modules.m5 import HttpEmbeddingProvider, SyntheticEmbedder
from modules.m6 import (
    RunConfig,
    build_providers,
    build_run_config,
    load_presets,
    load_providers_config,
    load_scene,
)
from services.common.config import Settings

ROOT = Path(__file__).resolve().parents[1]
EXAMPLE = ROOT / "configs" / "providers.example.json"


@pytest.mark.parametrize(
    "name,crop,window,stride",
    [("vstar", 112, 1232, 896), ("hr4k", 224, 2240, 1792), ("hr8k", 448, 3136, 2688)],
)
def test_preset_fidelity(name, crop, window, stride):
    cfg = build_run_config(name)
    assert cfg.preset == name
    assert cfg.crop_px == crop
    assert cfg.window_px == (window, window)
    assert cfg.stride_px == (stride, stride)
    assert cfg.ratio_k == 2
    assert cfg.weight_w == 0.4
    assert RunConfig.model_validate(cfg.to_dict()) == cfg


def test_presets_file_lists_the_three_benchmarks():
    assert set(load_presets()) == {"vstar", "hr4k", "hr8k"}


def test_flags_override_preset():
    cfg = build_run_config("hr4k", {"weight_w": 0.0, "top_k": 8, "crop_px": None})
    assert (cfg.weight_w, cfg.top_k, cfg.crop_px) == (0.0, 8, 224)


def test_window_accepts_w_by_h():
    cfg = build_run_config(None, {"window_px": "1232x896", "stride_px": 448})
    assert cfg.window_px == (1232, 896)
    assert cfg.stride_px == (448, 448)


@pytest.mark.parametrize(
    "overrides",
    [
        {"ratio_k": 1},
        {"stride_px": 0},
        {"weight_w": 1.2},
        {"tau_det": -0.1},
        {"top_k": 0},
        {"membership": "centre"},
        {"window_px": "12x"},
        {"unknown": 1},
    ],
)
def test_invalid_config_is_config_error(overrides):
    with pytest.raises(ConfigError):
        build_run_config(None, overrides)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        build_run_config("hr16k")


def test_run_config_is_frozen_and_carries_fusion():
    cfg = RunConfig()
    with pytest.raises(Exception):
        cfg.top_k = 3  # type: ignore[misc]
    fusion = cfg.fusion()
    assert (fusion.weight_w, fusion.top_k, fusion.max_steps, fusion.answer_tau) == (
        0.4,
        16,
        200,
        0.6,
    )


def test_providers_example_file():
    cfg = load_providers_config(EXAMPLE, Settings(_env_file=None))
    assert cfg.embed.base_url == "http://127.0.0.1:8010"
    assert cfg.detect.timeout_ms == 60000
    assert len(cfg.examples) == 3
    assert "JSON array" in cfg.system_prompt


def test_env_overrides_endpoints(monkeypatch):
    monkeypatch.setenv("MRD_EMBED_URL", "https://embed.example.org/")
    monkeypatch.setenv("MRD_AUTH_TOKEN", "tok")
    cfg = load_providers_config(EXAMPLE, Settings(_env_file=None))
    assert cfg.embed.base_url == "https://embed.example.org"
    assert cfg.embed.retries == 2
    assert cfg.detect.base_url == "http://127.0.0.1:8010"
    assert cfg.detect.auth_token == "tok"


def test_env_alone_can_configure_an_endpoint(monkeypatch):
    monkeypatch.setenv("MRD_DETECT_URL", "http://det:9000")
    cfg = load_providers_config(None, Settings(_env_file=None))
    assert cfg.detect.base_url == "http://det:9000"
    assert cfg.embed is None


def test_malformed_providers_file(tmp_path):
    bad = tmp_path / "p.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_providers_config(bad, Settings(_env_file=None))
    bad.write_text('{"embed": {"base_url": "nope"}}')
    with pytest.raises(ConfigError):
        load_providers_config(bad, Settings(_env_file=None))


def test_build_providers_http_and_synthetic(tmp_path):
    cfg = load_providers_config(EXAMPLE, Settings(_env_file=None))
    providers = build_providers(RunConfig(), cfg)
    assert isinstance(providers.embedder, HttpEmbeddingProvider)

    bare = build_providers(RunConfig())
    assert bare.embedder is None and isinstance(bare.extractor, HeuristicExtractor)

    scene = load_scene(ROOT / "data" / "eval" / "scenes" / "distractor" / "scene_000.json")
    assert isinstance(build_providers(RunConfig(), scene=scene).embedder, SyntheticEmbedder)


def test_load_scene_errors(tmp_path):
    bad = tmp_path / "s.json"
    bad.write_text('{"grid_h": 0, "grid_w": 2}')
    with pytest.raises(ConfigError):
        load_scene(bad)
    with pytest.raises(ConfigError):
        load_scene(tmp_path / "missing.json")
