"""Binary and JSON persistence for subspace models and gallery indexes.

Binary container layout, integers little endian:

    magic    6 bytes   "SUBFR" 0x01
    tag      u8 length + utf-8 bytes      method name, or "GALLERY"

model payload (tag is the method):
    d u32, q_max u32, provenance u16-prefixed utf-8,
    mean d * f64, transform q_max * d * f64

gallery payload (tag "GALLERY"):
    feature_dim u32, n_subjects u32, then per subject:
    subject_id u16-prefixed utf-8, n_templates u32, templates n * q * f64

Round trips are bit exact; the JSON mirror uses shortest round-trip float
notation so it is bit exact as well.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .matcher import GalleryIndex
from .subspace import SubspaceModel

MAGIC = b"SUBFR\x01"
GALLERY_TAG = "GALLERY"


class _Writer:
    def __init__(self) -> None:
        self.parts: list[bytes] = [MAGIC]

    def tag(self, text: str) -> None:
        raw = text.encode("utf-8")
        if len(raw) > 255:
            raise ValidationError("tag too long")
        self.parts.append(struct.pack("<B", len(raw)) + raw)

    def string(self, text: str) -> None:
        raw = text.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValidationError("string too long")
        self.parts.append(struct.pack("<H", len(raw)) + raw)

    def u32(self, value: int) -> None:
        self.parts.append(struct.pack("<I", value))

    def floats(self, array: np.ndarray) -> None:
        self.parts.append(np.ascontiguousarray(array, dtype="<f8").tobytes())

    def write(self, path: str | Path) -> None:
        Path(path).write_bytes(b"".join(self.parts))


class _Reader:
    def __init__(self, path: str | Path) -> None:
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"file not found: {p}")
        self.data = p.read_bytes()
        self.pos = 0
        self.path = p
        if self._take(len(MAGIC)) != MAGIC:
            raise ValidationError(f"{p}: bad magic, not a subface container")

    def _take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise ValidationError(f"{self.path}: truncated container")
        out = self.data[self.pos : self.pos + count]
        self.pos += count
        return out

    def tag(self) -> str:
        (n,) = struct.unpack("<B", self._take(1))
        return self._take(n).decode("utf-8")

    def string(self) -> str:
        (n,) = struct.unpack("<H", self._take(2))
        return self._take(n).decode("utf-8")

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def floats(self, count: int) -> np.ndarray:
        raw = self._take(count * 8)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64)


def save_model(model: SubspaceModel, path: str | Path) -> None:
    w = _Writer()
    w.tag(model.method)
    w.u32(model.dim)
    w.u32(model.q_max)
    w.string(model.provenance)
    w.floats(model.mean)
    w.floats(model.transform)
    w.write(path)


def load_model(path: str | Path) -> SubspaceModel:
    r = _Reader(path)
    method = r.tag()
    if method == GALLERY_TAG:
        raise ValidationError(f"{path}: contains a gallery index, not a model")
    d = r.u32()
    q_max = r.u32()
    provenance = r.string()
    mean = r.floats(d)
    transform = r.floats(q_max * d).reshape(q_max, d)
    return SubspaceModel(
        method=method, mean=mean, transform=transform, q_max=q_max, provenance=provenance
    )


def model_to_dict(model: SubspaceModel) -> dict:
    return {
        "format": "SUBFR1",
        "method": model.method,
        "dim": model.dim,
        "q_max": model.q_max,
        "provenance": model.provenance,
        "mean": [float(v) for v in model.mean],
        "transform": [[float(v) for v in row] for row in model.transform],
    }


def save_model_json(model: SubspaceModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_model_json(path: str | Path) -> SubspaceModel:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"file not found: {p}")
    with open(p, encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("format") != "SUBFR1":
        raise ValidationError(f"{p}: not a subface model mirror")
    transform = np.array(data["transform"], dtype=np.float64).reshape(
        data["q_max"], data["dim"]
    )
    return SubspaceModel(
        method=data["method"],
        mean=np.array(data["mean"], dtype=np.float64),
        transform=transform,
        q_max=int(data["q_max"]),
        provenance=data["provenance"],
    )


def save_gallery(index: GalleryIndex, path: str | Path) -> None:
    w = _Writer()
    w.tag(GALLERY_TAG)
    w.u32(index.feature_dim)
    w.u32(len(index.entries))
    for subject in sorted(index.entries):
        templates = index.entries[subject]
        w.string(subject)
        w.u32(templates.shape[0])
        w.floats(templates)
    w.write(path)


def load_gallery(path: str | Path) -> GalleryIndex:
    r = _Reader(path)
    tag = r.tag()
    if tag != GALLERY_TAG:
        raise ValidationError(f"{path}: contains a {tag} model, not a gallery index")
    q = r.u32()
    n_subjects = r.u32()
    entries: dict[str, np.ndarray] = {}
    for _ in range(n_subjects):
        subject = r.string()
        count = r.u32()
        entries[subject] = r.floats(count * q).reshape(count, q)
    return GalleryIndex(entries=entries, feature_dim=q)
