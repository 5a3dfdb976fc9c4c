"""Benchmark image assets: fetch, verify, and load.

The benchmark uses the House, Lena, Bridge and Peppers images from the
USC-SIPI database.  They are not shipped with the package; a fetch step
downloads them (or imports them from a local directory), converts them
to 8-bit grayscale PGM at native size, and records SHA-256 checksums in
a manifest so later loads can detect corruption or substitution.

The cache directory defaults to ``~/.cache/bm3dstack`` and can be moved
with the ``BM3DSTACK_ASSETS`` environment variable.
"""

from __future__ import annotations

import hashlib
import json
import os
import urllib.request
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .imgio import read_image, write_image

ENV_VAR = "BM3DSTACK_ASSETS"
_SIPI = "https://sipi.usc.edu/database/download.php?volume=misc&image="


@dataclass(frozen=True)
class AssetSpec:
    name: str
    url: str
    size: tuple[int, int]  # (height, width) at native resolution


# Best-effort source URLs; override with --url NAME=... or use --from-dir
# when the canonical files are already on disk.
REGISTRY = {
    "house": AssetSpec("house", _SIPI + "4.1.05", (256, 256)),
    "lena": AssetSpec("lena", _SIPI + "4.2.04", (512, 512)),
    "peppers": AssetSpec("peppers", _SIPI + "4.2.07", (512, 512)),
    "bridge": AssetSpec("bridge", _SIPI + "5.2.10", (512, 512)),
}


def cache_dir() -> Path:
    root = os.environ.get(ENV_VAR)
    if root:
        return Path(root)
    return Path.home() / ".cache" / "bm3dstack"


def _manifest_path(root: Path) -> Path:
    return root / "manifest.json"


def _load_manifest(root: Path) -> dict:
    path = _manifest_path(root)
    if path.is_file():
        return json.loads(path.read_text())
    return {}


def _to_grayscale(img: Image.Image) -> np.ndarray:
    """Luma conversion (BT.601 via Pillow 'L') for color sources."""
    if img.mode not in ("L", "I", "I;16"):
        img = img.convert("L")
    return np.asarray(img, dtype=np.float64)


def install_file(source: Path, spec: AssetSpec, root: Path) -> Path:
    """Convert one downloaded/local file into the cached grayscale PGM."""
    with Image.open(source) as img:
        frame = _to_grayscale(img)
    if frame.shape != spec.size:
        raise ValueError(
            f"{spec.name}: expected {spec.size}, got {frame.shape} from {source}")
    root.mkdir(parents=True, exist_ok=True)
    dest = root / f"{spec.name}.pgm"
    write_image(frame, dest, maxval=255)
    manifest = _load_manifest(root)
    manifest[spec.name] = hashlib.sha256(dest.read_bytes()).hexdigest()
    _manifest_path(root).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return dest


def fetch(names: list[str] | None = None, root: Path | None = None,
          from_dir: Path | None = None,
          url_overrides: dict[str, str] | None = None) -> list[Path]:
    """Download (or import) the named assets into the cache."""
    root = root or cache_dir()
    installed = []
    for name in names or sorted(REGISTRY):
        spec = REGISTRY[name]
        if url_overrides and name in url_overrides:
            spec = AssetSpec(spec.name, url_overrides[name], spec.size)
        if from_dir is not None:
            candidates = sorted(from_dir.glob(f"{name}.*"))
            if not candidates:
                raise FileNotFoundError(f"no {name}.* in {from_dir}")
            installed.append(install_file(candidates[0], spec, root))
            continue
        tmp = root / f"{name}.download"
        root.mkdir(parents=True, exist_ok=True)
        with urllib.request.urlopen(spec.url, timeout=60) as resp:
            tmp.write_bytes(resp.read())
        try:
            installed.append(install_file(tmp, spec, root))
        finally:
            tmp.unlink(missing_ok=True)
    return installed


def available(root: Path | None = None) -> dict[str, Path]:
    """Map of asset name -> cached file, for assets that pass verification."""
    root = root or cache_dir()
    manifest = _load_manifest(root)
    out = {}
    for name in REGISTRY:
        path = root / f"{name}.pgm"
        if not path.is_file():
            continue
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        if manifest.get(name) not in (None, digest):
            continue  # corrupted or substituted; treat as missing
        out[name] = path
    return out


def load_clean(name: str, root: Path | None = None,
               resize: int | None = None) -> np.ndarray:
    """Load one cached clean image, optionally box-resized to a square."""
    paths = available(root)
    if name not in paths:
        raise FileNotFoundError(
            f"asset {name!r} not cached; run `bm3dstack fetch-assets` "
            f"(or fetch-assets --from-dir DIR with pre-downloaded files)")
    frame = read_image(paths[name])
    if resize is not None and frame.shape != (resize, resize):
        img = Image.fromarray(frame.astype(np.uint8), mode="L")
        img = img.resize((resize, resize), Image.LANCZOS)
        frame = np.asarray(img, dtype=np.float64)
    return frame
