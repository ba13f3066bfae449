"""Face dataset ingestion: manifests, PGM images, eye-based alignment, splits.

Two manifest schemas are supported (UTF-8 CSV with a mandatory header row):

* images:  ``path,subject_id,left_eye_x,left_eye_y,right_eye_x,right_eye_y,tag``
  Each row names a binary 8-bit PGM file plus annotated eye centers; the image
  is warped onto a canonical geometry and flattened into a pixel vector.
* vectors: ``subject_id,f0,f1,...,f{d-1}``
  Each row is a ready-made feature vector with values in [0, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

IMAGE_HEADER = [
    "path",
    "subject_id",
    "left_eye_x",
    "left_eye_y",
    "right_eye_x",
    "right_eye_y",
    "tag",
]


@dataclass
class ManifestEntry:
    """One labeled image row: file location, subject, and annotated eye centers."""

    image_path: str
    subject_id: str
    left_eye: tuple[float, float]
    right_eye: tuple[float, float]
    tag: str = ""


@dataclass
class NormalizationGeometry:
    """Output raster size and the canonical eye positions faces are warped onto."""

    out_width: int = 64
    out_height: int = 80
    target_left_eye: tuple[float, float] = (20.0, 28.0)
    target_right_eye: tuple[float, float] = (44.0, 28.0)
    hist_eq: bool = True

    def __post_init__(self) -> None:
        if self.out_width < 1 or self.out_height < 1:
            raise ValidationError("output raster must be non-empty")
        if tuple(self.target_left_eye) == tuple(self.target_right_eye):
            raise ValidationError("target eyes must be distinct")
        if self.target_left_eye[1] != self.target_right_eye[1]:
            raise ValidationError("target eyes must share a y coordinate")
        for x, y in (self.target_left_eye, self.target_right_eye):
            if not (0 <= x < self.out_width and 0 <= y < self.out_height):
                raise ValidationError("target eyes must lie inside the output raster")

    @property
    def dim(self) -> int:
        return self.out_width * self.out_height


@dataclass(eq=False)
class FaceSample:
    """A flattened face vector with its subject label and manifest row index."""

    vector: np.ndarray
    subject_id: str
    source: int


@dataclass(eq=False)
class Dataset:
    """An immutable collection of equal-length face vectors."""

    samples: list[FaceSample]
    dim: int
    _matrix: np.ndarray | None = field(default=None, init=False, repr=False)
    _by_subject: dict[str, list[int]] | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.samples:
            raise ValidationError("dataset has no samples")
        for s in self.samples:
            if s.vector.shape != (self.dim,):
                raise ValidationError("inconsistent vector lengths in dataset")
            if not np.all(np.isfinite(s.vector)):
                raise ValidationError(f"non-finite values in sample for {s.subject_id!r}")

    def __len__(self) -> int:
        return len(self.samples)

    def matrix(self) -> np.ndarray:
        """All sample vectors stacked as an (n_samples, dim) float64 matrix."""
        if self._matrix is None:
            self._matrix = np.stack([s.vector for s in self.samples]).astype(np.float64)
        return self._matrix

    def subjects(self) -> list[str]:
        """Sorted unique subject ids."""
        return sorted(self.subject_indices())

    def subject_indices(self) -> dict[str, list[int]]:
        """Sample indices per subject, in dataset order, keys sorted."""
        if self._by_subject is None:
            acc: dict[str, list[int]] = {}
            for i, s in enumerate(self.samples):
                acc.setdefault(s.subject_id, []).append(i)
            self._by_subject = {k: acc[k] for k in sorted(acc)}
        return self._by_subject


@dataclass(eq=False)
class GalleryProbeSplit:
    """Index-disjoint gallery/probe datasets with a fixed per-subject gallery size."""

    gallery: Dataset
    probe: Dataset
    k_per_subject: int
    dropped_subjects: int = 0


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary 8-bit PGM ("P5") file into a (height, width) uint8 array."""
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"image not found: {p}")
    data = p.read_bytes()
    if not data.startswith(b"P5"):
        raise ValidationError(f"{p}: not a binary PGM (P5) file")

    def next_token(pos: int) -> tuple[bytes, int]:
        while pos < len(data):
            c = data[pos : pos + 1]
            if c in (b" ", b"\t", b"\r", b"\n"):
                pos += 1
            elif c == b"#":
                while pos < len(data) and data[pos : pos + 1] not in (b"\r", b"\n"):
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and data[pos : pos + 1] not in (b" ", b"\t", b"\r", b"\n"):
            pos += 1
        if start == pos:
            raise ValidationError(f"{p}: truncated PGM header")
        return data[start:pos], pos

    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = next_token(pos)
        try:
            fields.append(int(tok))
        except ValueError as exc:
            raise ValidationError(f"{p}: bad PGM header token {tok!r}") from exc
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ValidationError(f"{p}: zero-area image")
    if not 1 <= maxval <= 255:
        raise ValidationError(f"{p}: only 8-bit PGM supported (maxval {maxval})")
    pos += 1  # single whitespace byte separates header from raster
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ValidationError(f"{p}: truncated raster data")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def equalize_histogram(image: np.ndarray) -> np.ndarray:
    """Integer histogram equalization via the cumulative-distribution remap."""
    img = np.asarray(image, dtype=np.uint8)
    hist = np.bincount(img.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    cdf_min = int(cdf[np.nonzero(hist)[0][0]])
    total = img.size
    if total == cdf_min:
        # single gray level: the remap is undefined, keep the image as is
        return img.copy()
    lut = np.floor((cdf - cdf_min) / (total - cdf_min) * 255.0 + 0.5)
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    return lut[img]


def _eye_transform(
    left_eye: tuple[float, float],
    right_eye: tuple[float, float],
    geom: NormalizationGeometry,
) -> tuple[complex, complex]:
    """Similarity transform (as complex a*z + b) mapping given eyes onto targets."""
    src_l = complex(left_eye[0], left_eye[1])
    src_r = complex(right_eye[0], right_eye[1])
    if src_l == src_r:
        raise ValidationError("eye coordinates must be distinct")
    dst_l = complex(*geom.target_left_eye)
    dst_r = complex(*geom.target_right_eye)
    a = (dst_r - dst_l) / (src_r - src_l)
    b = dst_l - a * src_l
    return a, b


def normalize_face(
    image: np.ndarray,
    left_eye: tuple[float, float],
    right_eye: tuple[float, float],
    geom: NormalizationGeometry | None = None,
) -> np.ndarray:
    """Warp a grayscale face so its eyes land on the canonical positions.

    The two eye correspondences fix a similarity transform (rotation, uniform
    scale, translation). Optional histogram equalization runs on the source
    image before warping; output pixels are bilinearly sampled with edge
    replication and scaled to [0, 1].

    Returns a flat float vector of length ``geom.out_width * geom.out_height``.
    """
    if geom is None:
        geom = NormalizationGeometry()
    img = np.asarray(image)
    if img.ndim != 2 or img.size == 0:
        raise ValidationError("image must be a non-empty 2-D grayscale raster")
    for x, y in (left_eye, right_eye):
        if not (np.isfinite(x) and np.isfinite(y)):
            raise ValidationError("eye coordinates must be finite")
    img = img.astype(np.uint8)
    if geom.hist_eq:
        img = equalize_histogram(img)
    a, b = _eye_transform(left_eye, right_eye, geom)

    h, w = img.shape
    xs, ys = np.meshgrid(
        np.arange(geom.out_width, dtype=np.float64),
        np.arange(geom.out_height, dtype=np.float64),
    )
    src = (xs + 1j * ys - b) / a
    sx = np.clip(src.real, 0.0, w - 1.0)
    sy = np.clip(src.imag, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    pix = img.astype(np.float64)
    top = (1.0 - fx) * pix[y0, x0] + fx * pix[y0, x1]
    bottom = (1.0 - fx) * pix[y1, x0] + fx * pix[y1, x1]
    out = (1.0 - fy) * top + fy * bottom
    return (out / 255.0).ravel()


def _parse_image_row(
    row: list[str], rownum: int, base: Path, geom: NormalizationGeometry
) -> FaceSample:
    if len(row) != len(IMAGE_HEADER):
        raise ValidationError(f"malformed row {rownum}: expected {len(IMAGE_HEADER)} fields")
    try:
        eyes = [float(v) for v in row[2:6]]
    except ValueError as exc:
        raise ValidationError(f"malformed row {rownum}: bad eye coordinate") from exc
    if not all(np.isfinite(v) and v >= 0 for v in eyes):
        raise ValidationError(f"malformed row {rownum}: eye coordinates must be finite and non-negative")
    entry = ManifestEntry(
        image_path=row[0],
        subject_id=row[1],
        left_eye=(eyes[0], eyes[1]),
        right_eye=(eyes[2], eyes[3]),
        tag=row[6],
    )
    if entry.left_eye == entry.right_eye:
        raise ValidationError(f"malformed row {rownum}: coincident eyes")
    img_path = Path(entry.image_path)
    if not img_path.is_absolute():
        img_path = base / img_path
    vector = normalize_face(read_pgm(img_path), entry.left_eye, entry.right_eye, geom)
    return FaceSample(vector=vector, subject_id=entry.subject_id, source=rownum - 2)


def _parse_vector_row(row: list[str], rownum: int, dim: int) -> FaceSample:
    if len(row) != dim + 1:
        raise ValidationError(f"malformed row {rownum}: expected {dim + 1} fields, got {len(row)}")
    try:
        values = np.array([float(v) for v in row[1:]], dtype=np.float64)
    except ValueError as exc:
        raise ValidationError(f"malformed row {rownum}: non-numeric value") from exc
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"malformed row {rownum}: non-finite value")
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise ValidationError(f"malformed row {rownum}: values outside [0, 1]")
    return FaceSample(vector=values, subject_id=row[0], source=rownum - 2)


def load_manifest(
    path: str | Path, mode: str, geom: NormalizationGeometry | None = None
) -> Dataset:
    """Load a manifest CSV into a Dataset.

    Args:
        path: manifest file location.
        mode: ``"images"`` (rows are PGM files normalized via
            :func:`normalize_face`) or ``"vectors"`` (rows are taken verbatim,
            values checked against [0, 1]).
        geom: normalization geometry for image mode; defaults apply otherwise.

    Raises:
        ValidationError: missing file, header mismatch, empty body, or a
            malformed row (reported with its 1-based row number).
    """
    p = Path(path)
    if mode not in ("images", "vectors"):
        raise ValidationError(f"unknown manifest mode {mode!r}")
    if not p.is_file():
        raise ValidationError(f"manifest not found: {p}")
    if geom is None:
        geom = NormalizationGeometry()
    with open(p, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh)]
    if not rows:
        raise ValidationError(f"{p}: missing header row")
    header = [c.strip() for c in rows[0]]
    body = rows[1:]
    if mode == "images":
        if header != IMAGE_HEADER:
            raise ValidationError(f"{p}: image manifest header mismatch")
        dim = geom.dim
    else:
        dim = len(header) - 1
        if dim < 1 or header != ["subject_id"] + [f"f{j}" for j in range(dim)]:
            raise ValidationError(f"{p}: vector manifest header mismatch")
    if not body:
        raise ValidationError(f"{p}: empty dataset")
    samples = []
    for i, row in enumerate(body):
        rownum = i + 2
        if mode == "images":
            samples.append(_parse_image_row(row, rownum, p.parent, geom))
        else:
            samples.append(_parse_vector_row(row, rownum, dim))
    return Dataset(samples=samples, dim=dim)


def write_vector_manifest(dataset: Dataset, path: str | Path) -> None:
    """Write a Dataset as a vector manifest CSV (floats in round-trip notation)."""
    p = Path(path)
    with open(p, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject_id"] + [f"f{j}" for j in range(dataset.dim)])
        for s in dataset.samples:
            writer.writerow([s.subject_id] + [repr(float(v)) for v in s.vector])


def split_train_test(dataset: Dataset, train_subjects: int, seed: int) -> tuple[Dataset, Dataset]:
    """Subject-disjoint split selecting ``train_subjects`` by a seeded shuffle.

    Subject ids are sorted, shuffled with the seeded generator, and the first
    ``train_subjects`` go to the training side. Sample order is preserved
    within each side; results are identical for identical seeds.
    """
    subjects = dataset.subjects()
    if not 1 <= train_subjects < len(subjects):
        raise ValidationError(
            f"train_subjects must be in [1, {len(subjects) - 1}], got {train_subjects}"
        )
    rng = np.random.default_rng(seed)
    order = [subjects[i] for i in rng.permutation(len(subjects))]
    chosen = set(order[:train_subjects])
    train = [s for s in dataset.samples if s.subject_id in chosen]
    test = [s for s in dataset.samples if s.subject_id not in chosen]
    return (
        Dataset(samples=train, dim=dataset.dim),
        Dataset(samples=test, dim=dataset.dim),
    )


def make_gallery_probe(
    dataset: Dataset, k: int, rule: str = "first", seed: int = 0
) -> GalleryProbeSplit:
    """Split each subject's samples into k gallery templates plus probes.

    Subjects with at most k samples are dropped (counted in the result) since
    they could not contribute both a full gallery and a probe. ``rule`` picks
    the gallery samples: ``"first"`` takes the first k in manifest order,
    ``"seeded-random"`` draws k without replacement from a seeded generator.
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    if rule not in ("first", "seeded-random"):
        raise ValidationError(f"unknown gallery rule {rule!r}")
    rng = np.random.default_rng(seed)
    gallery_idx: list[int] = []
    probe_idx: list[int] = []
    dropped = 0
    for subject in dataset.subjects():
        idx = dataset.subject_indices()[subject]
        if len(idx) <= k:
            dropped += 1
            continue
        if rule == "first":
            chosen = set(idx[:k])
        else:
            picks = rng.choice(len(idx), size=k, replace=False)
            chosen = {idx[j] for j in picks}
        gallery_idx.extend(i for i in idx if i in chosen)
        probe_idx.extend(i for i in idx if i not in chosen)
    if not gallery_idx:
        raise ValidationError("no subjects retained: every subject has <= k samples")
    gallery_idx.sort()
    probe_idx.sort()
    return GalleryProbeSplit(
        gallery=Dataset(samples=[dataset.samples[i] for i in gallery_idx], dim=dataset.dim),
        probe=Dataset(samples=[dataset.samples[i] for i in probe_idx], dim=dataset.dim),
        k_per_subject=k,
        dropped_subjects=dropped,
    )
