"""M6.2 - PNG decode/encode (Pillow)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from modules.common.errors import InputError
from modules.common.logs import get_logger

LOGGER = get_logger("m6.imageio")


def load_png(path: Path) -> np.ndarray:
    """Decode a PNG into an HxWx3 uint8 array."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"image not found: {path}")
    try:
        with Image.open(str(path)) as im:
            if im.format != "PNG":
                raise InputError(f"{path} is {im.format}, only PNG is supported")
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError) as exc:
        raise InputError(f"cannot decode image {path}: {exc}") from exc
    LOGGER.debug("decoded {} as {}x{}", path, arr.shape[1], arr.shape[0])
    return arr


def save_png(path: Path, pixels: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8)).convert("RGB").save(
        str(path), format="PNG"
    )
