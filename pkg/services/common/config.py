from __future__ import annotations

from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="MRD_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Provider endpoints (override the --providers file)
    embed_url: Optional[str] = None
    detect_url: Optional[str] = None
    extract_url: Optional[str] = None
    auth_token: Optional[str] = None

    # Logging
    log_level: str = "INFO"
    log_json: bool = False

    # Stub provider service
    stub_scene: Optional[str] = None
    stub_port: int = Field(default=8010, ge=1, le=65535)


def get_settings() -> Settings:
    """Fresh read of env/.env (tests monkeypatch the environment)."""
    return Settings()
