"""File formats: ``.rqt`` tensors, 16-bit PNG, JSON manifests and checkpoints.

``.rqt`` layout (little-endian)::

    b"RQT1" | rank: uint32 | dims: rank x uint32 | payload: float32, row-major
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .errors import BadTensorFile

__all__ = [
    "write_rqt",
    "read_rqt",
    "write_png",
    "read_png",
    "write_manifest",
    "save_checkpoint",
    "load_checkpoint",
    "load_image",
]

MAGIC = b"RQT1"


def write_rqt(path, array) -> Path:
    """Write ``array`` as float32; returns the path."""
    arr = np.asarray(array, dtype="<f4")
    path = Path(path)
    header = MAGIC + struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    path.write_bytes(header + arr.tobytes(order="C"))
    return path


def read_rqt(path) -> np.ndarray:
    """Read a ``.rqt`` file into a float32 array."""
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != MAGIC:
        raise BadTensorFile(f"{path}: missing RQT1 magic")
    (rank,) = struct.unpack_from("<I", data, 4)
    off = 8 + 4 * rank
    if len(data) < off:
        raise BadTensorFile(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{rank}I", data, 8)
    count = int(np.prod(dims, dtype=np.int64))
    if len(data) - off != 4 * count:
        raise BadTensorFile(f"{path}: payload has {len(data) - off} bytes, expected {4 * count}")
    return np.frombuffer(data, dtype="<f4", offset=off).reshape(dims).copy()


def write_png(path, image, bits: int = 16) -> Path:
    """Write a ``(n1, n2)`` image with values in [0, 1] (clipped) as gray PNG."""
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    if img.ndim != 2:
        raise ValueError("write_png takes a single band")
    if bits == 16:
        q = np.round(img * 65535).astype(np.uint16)
        pil = Image.fromarray(q)
    elif bits == 8:
        pil = Image.fromarray(np.round(img * 255).astype(np.uint8))
    else:
        raise ValueError("bits must be 8 or 16")
    path = Path(path)
    pil.save(path, format="PNG")
    return path


def read_png(path) -> np.ndarray:
    """Read a gray or RGB PNG into ``(P, n1, n2)`` floats in [0, 1]."""
    with Image.open(path) as im:
        arr = np.array(im)
        mode = im.mode
    scale = 65535.0 if mode.startswith("I") else 255.0
    arr = arr.astype(np.float64) / scale
    if arr.ndim == 2:
        return arr[None]
    return np.moveaxis(arr[..., :3], -1, 0)


def load_image(path) -> np.ndarray:
    """Load ``.rqt`` or ``.png`` as float64."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        return read_png(path)
    return read_rqt(path).astype(np.float64)


def write_manifest(path, config: dict, seed, outputs=(), command: str = "") -> Path:
    """JSON manifest with config, seed, version and output names (sorted keys)."""
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "outputs": [str(Path(o).name) for o in outputs],
    }
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    return path


def save_checkpoint(directory, model, seed=None) -> Path:
    """Write every parameter and batchnorm statistic as ``.rqt`` plus ``manifest.json``.

    Tensors are stored as float32, so a reloaded model matches the saved one
    to single precision.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for k, v in model.params.items():
        write_rqt(d / f"{k}.rqt", v)
        names.append(k)
    for k, (m, v) in model.bn_stats.items():
        write_rqt(d / f"{k}.mean.rqt", m)
        write_rqt(d / f"{k}.var.rqt", v)
    doc = {
        "config": model.config_dict(),
        "params": names,
        "bn_stats": sorted(model.bn_stats),
        "seed": seed,
        "version": __version__,
    }
    (d / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return d


def load_checkpoint(directory):
    """Inverse of :func:`save_checkpoint`."""
    from .neural.model import VaeConfig, VaeModel

    d = Path(directory)
    try:
        doc = json.loads((d / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise BadTensorFile(f"{d}: unreadable checkpoint manifest ({exc})") from exc
    cfg = VaeConfig(**doc["config"])
    params = {k: read_rqt(d / f"{k}.rqt").astype(np.float64) for k in doc["params"]}
    stats = {
        k: (read_rqt(d / f"{k}.mean.rqt").astype(np.float64), read_rqt(d / f"{k}.var.rqt").astype(np.float64))
        for k in doc["bn_stats"]
    }
    return VaeModel(cfg, params, stats)
