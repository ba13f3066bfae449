"""Evaluation protocols: CMC, feature-count sweeps, open-set rates, ROC, synthesis.

All rates are exact integer counts divided once at the end, so results agree
with exhaustive counting on any probe set.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Dataset, FaceSample, GalleryProbeSplit
from .errors import ValidationError
from .matcher import GalleryIndex, MatchResult, ThresholdConfig, enroll, identify
from .subspace import SubspaceModel, project

REPORT_FILES = ("cmc.csv", "rate_vs_q.csv", "openset.csv", "roc.csv", "summary.json")


@dataclass
class ProtocolConfig:
    """Knobs of one evaluation run."""

    gallery_k: int = 7
    q_list: list[int] = field(default_factory=list)
    theta_list: list[float] = field(default_factory=lambda: [0.85])
    max_rank: int = 10
    seed: int = 0
    far_list: list[float] = field(default_factory=lambda: [0.001, 0.01, 0.1])

    def __post_init__(self) -> None:
        if self.q_list and sorted(self.q_list) != list(self.q_list):
            raise ValidationError("q_list must be ascending")
        for theta in self.theta_list:
            if not 0.0 < theta <= 1.0:
                raise ValidationError(f"theta must be in (0, 1], got {theta}")


@dataclass
class OpenSetPoint:
    """Open-set rates at one threshold setting."""

    theta: float
    tau: float
    gir: float
    irr: float


@dataclass(eq=False)
class EvalReport:
    """Aggregated curves and counts of one evaluation run."""

    cmc: list[float] = field(default_factory=list)
    rate_vs_q: list[tuple[int, float]] = field(default_factory=list)
    open_set: list[OpenSetPoint] = field(default_factory=list)
    roc: list[tuple[float, float]] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)
    config_digest: str = ""


@dataclass
class SyntheticSpec:
    """Parameters of a synthetic multi-cluster identification dataset."""

    subjects: int
    clusters_per_subject: int
    dim: int
    samples_per_subject: int
    separation: float
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("subjects", "clusters_per_subject", "dim", "samples_per_subject"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be at least 1")
        if self.separation <= 0:
            raise ValidationError("separation must be positive")


def cmc_curve(results: Sequence[tuple[MatchResult, str]], max_rank: int) -> np.ndarray:
    """Cumulative match rates: rate[k-1] = fraction of probes ranked within k."""
    if not results:
        raise ValidationError("no identification results")
    if max_rank < 1:
        raise ValidationError("max_rank must be at least 1")
    hits = np.zeros(max_rank, dtype=np.int64)
    for result, true_subject in results:
        position = None
        for i, (subject, _) in enumerate(result.ranking):
            if subject == true_subject:
                position = i
                break
        if position is None:
            raise ValidationError(f"true subject {true_subject!r} is not enrolled")
        if position < max_rank:
            hits[position] += 1
    return np.cumsum(hits) / float(len(results))


def rate_vs_features(
    model: SubspaceModel, split: GalleryProbeSplit, q_list: Sequence[int]
) -> list[tuple[int, float]]:
    """Closed-set rank-1 rate per feature count, re-enrolling at every q."""
    if not q_list:
        raise ValidationError("q_list is empty")
    if max(q_list) > model.q_max:
        raise ValidationError(f"q_list exceeds model rank {model.q_max}")
    curve = []
    for q in q_list:
        index = enroll(model, split.gallery, q)
        correct = 0
        for sample in split.probe.samples:
            result = identify(index, project(model, sample.vector, q))
            if result.decision == sample.subject_id:
                correct += 1
        curve.append((int(q), correct / float(len(split.probe.samples))))
    return curve


def open_set_rates(
    index: GalleryIndex,
    genuine: Sequence[tuple[np.ndarray, str]],
    imposters: Sequence[tuple[np.ndarray, str]],
    threshold: ThresholdConfig,
) -> tuple[float, float]:
    """Genuine identification rate and imposter rejection rate at one threshold.

    Genuine probes count when decided as their true subject within tau;
    imposters count when rejected as unknown. Imposter subjects must be
    disjoint from the gallery.
    """
    if not genuine or not imposters:
        raise ValidationError("genuine and imposter probe lists must be non-empty")
    enrolled = set(index.entries)
    for _, label in imposters:
        if label in enrolled:
            raise ValidationError(f"imposter subject {label!r} overlaps the gallery")
    for _, label in genuine:
        if label not in enrolled:
            raise ValidationError(f"genuine subject {label!r} is not enrolled")
    g_hits = sum(
        1 for vec, label in genuine if identify(index, vec, threshold.tau).decision == label
    )
    i_rejects = sum(
        1 for vec, _ in imposters if identify(index, vec, threshold.tau).decision is None
    )
    return g_hits / float(len(genuine)), i_rejects / float(len(imposters))


def roc_points(
    genuine_scores: Sequence[float],
    imposter_scores: Sequence[float],
    far_targets: Sequence[float],
) -> list[tuple[float, float]]:
    """Verification rate at each false-acceptance target.

    For a target f the threshold is the largest imposter score accepting at
    most floor(f * n_imposters) imposters; when even the smallest imposter
    score accepts too many, nothing is accepted and VR is 0. Achieved FAR
    therefore never exceeds the target.
    """
    g = np.sort(np.asarray(list(genuine_scores), dtype=np.float64))
    imp = np.sort(np.asarray(list(imposter_scores), dtype=np.float64))
    if g.size == 0 or imp.size == 0:
        raise ValidationError("score lists must be non-empty")
    uniq = np.unique(imp)
    counts = np.searchsorted(imp, uniq, side="right")
    out = []
    for f in far_targets:
        if not 0.0 <= f <= 1.0:
            raise ValidationError(f"FAR target must be in [0, 1], got {f}")
        allowed = int(np.floor(f * imp.size + 1e-9))
        feasible = uniq[counts <= allowed]
        if feasible.size:
            vr = float(np.searchsorted(g, feasible[-1], side="right")) / g.size
        else:
            vr = 0.0
        out.append((float(f), vr))
    return out


# Subject anchors are drawn at this multiple of the separation scale so
# identity separation slightly dominates intra-subject cluster spread.
SUBJECT_ANCHOR_FACTOR = 1.2


def synthesize(spec: SyntheticSpec) -> Dataset:
    """Seeded Gaussian clusters per subject, rescaled into [0, 1].

    Each subject gets an anchor point plus ``clusters_per_subject`` cluster
    centers around it whose pairwise distances concentrate near ``separation``
    times the unit within-cluster deviation; samples cycle through the
    clusters, so any leading slice of a subject's samples covers them. A final
    affine rescale of the whole dataset into [0, 1] preserves every distance
    ratio and all cosine comparisons after mean subtraction.
    """
    rng = np.random.default_rng(spec.seed)
    offset_scale = spec.separation / np.sqrt(2.0 * spec.dim)
    anchor_scale = SUBJECT_ANCHOR_FACTOR * offset_scale
    rows = []
    labels = []
    for s in range(spec.subjects):
        anchor = rng.normal(0.0, anchor_scale, size=spec.dim)
        centers = anchor + rng.normal(
            0.0, offset_scale, size=(spec.clusters_per_subject, spec.dim)
        )
        for i in range(spec.samples_per_subject):
            cluster = i % spec.clusters_per_subject
            rows.append(centers[cluster] + rng.normal(0.0, 1.0, size=spec.dim))
            labels.append(f"s{s:04d}")
    data = np.stack(rows)
    low = data.min()
    span = data.max() - low
    data = (data - low) / span if span > 0 else np.zeros_like(data)
    samples = [
        FaceSample(vector=data[i].copy(), subject_id=labels[i], source=i)
        for i in range(len(labels))
    ]
    return Dataset(samples=samples, dim=spec.dim)


def _fmt(value: float) -> str:
    return repr(float(value))


def emit_report(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """Write the report CSV files and summary.json; headers always present."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    def table(name: str, header: list[str], rows: list[list[str]]) -> None:
        path = out / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        paths.append(path)

    table("cmc.csv", ["rank", "rate"], [[str(k + 1), _fmt(r)] for k, r in enumerate(report.cmc)])
    table("rate_vs_q.csv", ["q", "rate"], [[str(q), _fmt(r)] for q, r in report.rate_vs_q])
    table(
        "openset.csv",
        ["theta", "tau", "gir", "irr"],
        [[_fmt(p.theta), _fmt(p.tau), _fmt(p.gir), _fmt(p.irr)] for p in report.open_set],
    )
    table("roc.csv", ["far", "vr"], [[_fmt(f), _fmt(v)] for f, v in report.roc])

    summary: dict = {"config_digest": report.config_digest, "counts": report.counts}
    if report.cmc:
        summary["rank1"] = float(report.cmc[0])
    path = out / "summary.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1)
        fh.write("\n")
    paths.append(path)
    return paths
