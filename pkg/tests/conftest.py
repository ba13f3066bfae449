import sys
from pathlib import Path

import numpy as np
import pytest

from subface.dataset import Dataset, FaceSample

sys.path.insert(0, str(Path(__file__).parent))


def vector_dataset(arrays_by_subject: dict[str, list]) -> Dataset:
    """Build a Dataset straight from per-subject lists of vectors."""
    samples = []
    i = 0
    dim = None
    for subject, vectors in arrays_by_subject.items():
        for v in vectors:
            arr = np.asarray(v, dtype=np.float64)
            dim = arr.shape[0] if dim is None else dim
            samples.append(FaceSample(vector=arr, subject_id=subject, source=i))
            i += 1
    return Dataset(samples=samples, dim=dim)


def random_dataset(rng, subjects: int, per_subject: int, dim: int, spread: float = 1.0) -> Dataset:
    """Well-separated Gaussian blobs, one per subject."""
    data = {}
    for s in range(subjects):
        center = rng.normal(0.0, 4.0, size=dim)
        data[f"p{s:03d}"] = [center + rng.normal(0.0, spread, size=dim) for _ in range(per_subject)]
    return vector_dataset(data)


def write_pgm(path: Path, image: np.ndarray) -> None:
    img = np.asarray(image, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
