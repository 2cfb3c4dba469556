"""Error hierarchy shared by every module.

CLI exit codes are derived from these types in ``modules.m6.cli``.
"""

from __future__ import annotations

from typing import Any, Optional


class MRDError(Exception):
    """Root of all engine errors."""


class InvalidArgumentError(MRDError, ValueError):
    """A caller passed a value outside an operation's domain."""


class DegenerateInputError(MRDError, ValueError):
    """Input is well-formed but numerically unusable (e.g. zero-norm vector)."""


class ConfigError(InvalidArgumentError):
    """Run or provider configuration failed validation."""


class InputError(MRDError):
    """A required input file is missing or cannot be decoded."""


class ProviderError(MRDError):
    """An external model provider failed after retries."""

    def __init__(
        self,
        message: str,
        status: Optional[int] = None,
        attempts: int = 0,
        index: Any = None,
    ) -> None:
        super().__init__(message)
        self.status = status
        self.attempts = attempts
        self.index = index

    def with_index(self, index: Any) -> "ProviderError":
        self.index = index
        return self

    def __str__(self) -> str:
        parts = [super().__str__()]
        if self.status is not None:
            parts.append(f"status={self.status}")
        if self.attempts:
            parts.append(f"attempts={self.attempts}")
        if self.index is not None:
            parts.append(f"index={self.index}")
        return " ".join(parts)


class ProtocolError(ProviderError):
    """A provider answered, but the payload violates the wire contract."""

    def __init__(self, message: str, raw: Any = None, **kwargs: Any) -> None:
        super().__init__(message, **kwargs)
        self.raw = raw


class PipelineError(MRDError):
    """Failure inside run_pipeline, tagged with the stage that raised it."""

    def __init__(self, stage: str, cause: BaseException) -> None:
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
