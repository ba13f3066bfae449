"""Command-line front door wiring datasets, training, matching, and evaluation.

Every command writes its artifacts under explicit ``--out`` locations, prints
a one-line ``key=value`` summary to stdout, and appends a JSON line (command,
flags, input digests, output digests) to ``runs.log`` in the output directory.
Exit codes: 0 success, 2 validation or usage error, 1 unexpected runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluation, modelio
from .dataset import (
    NormalizationGeometry,
    load_manifest,
    make_gallery_probe,
    split_train_test,
    write_vector_manifest,
)
from .errors import SubfaceError, ValidationError
from .evaluation import EvalReport, OpenSetPoint, SyntheticSpec
from .matcher import calibrate_threshold, enroll, identify, verify
from .partition import build_partition
from .plots import save_report_figures
from .subspace import project, train_ere, train_lda, train_pca, train_wssda

METHODS = ("pca", "lda", "ere", "wssda")


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad float list {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad integer list {text!r}") from exc


def _point(text: str) -> tuple[float, float]:
    parts = _floats(text)
    if len(parts) != 2:
        raise ValidationError(f"expected x,y - got {text!r}")
    return parts[0], parts[1]


def _geometry(args: argparse.Namespace) -> NormalizationGeometry:
    return NormalizationGeometry(
        out_width=args.width,
        out_height=args.height,
        target_left_eye=_point(args.left_eye),
        target_right_eye=_point(args.right_eye),
        hist_eq=not args.no_hist_eq,
    )


def _log_run(
    out_dir: Path,
    args: argparse.Namespace,
    inputs: list[Path],
    outputs: list[Path],
) -> None:
    flags = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k not in ("func", "command") and v is not None
    }
    entry = {
        "command": args.command,
        "flags": flags,
        "inputs": {str(p): _sha256_file(Path(p)) for p in inputs},
        "outputs": {str(p): _sha256_file(Path(p)) for p in outputs},
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "runs.log", "a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry) + "\n")


def _summary(**pairs: object) -> None:
    print(" ".join(f"{k}={v}" for k, v in pairs.items()))


def _train_model(dataset, method: str, q: int | None, max_leaf: int, mu: float):
    if method == "pca":
        if q is None:
            raise ValidationError("--q is required for method pca")
        return train_pca(dataset, q)
    if method == "lda":
        if q is None:
            raise ValidationError("--q is required for method lda")
        return train_lda(dataset, q)
    part = build_partition(dataset, max_leaf)
    if method == "ere":
        return train_ere(dataset, part, mu)
    if method == "wssda":
        return train_wssda(dataset, part, mu, q)
    raise ValidationError(f"unknown method {method!r}")


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        subjects=args.subjects,
        clusters_per_subject=args.clusters,
        dim=args.dim,
        samples_per_subject=args.samples,
        separation=args.separation,
        seed=args.seed,
    )
    ds = evaluation.synthesize(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_vector_manifest(ds, out)
    _log_run(out.parent, args, [], [out])
    _summary(
        command="synth",
        subjects=args.subjects,
        samples=len(ds),
        dim=ds.dim,
        out=out,
        sha256=_sha256_file(out),
    )
    return 0


def _cmd_normalize(args: argparse.Namespace) -> int:
    geom = _geometry(args)
    ds = load_manifest(args.manifest, "images", geom)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_vector_manifest(ds, out)
    _log_run(out.parent, args, [Path(args.manifest)], [out])
    _summary(command="normalize", samples=len(ds), dim=ds.dim, out=out, sha256=_sha256_file(out))
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    ds = load_manifest(args.manifest, "vectors")
    train, test = split_train_test(ds, args.train_subjects, args.seed)
    out_train, out_test = Path(args.out_train), Path(args.out_test)
    out_train.parent.mkdir(parents=True, exist_ok=True)
    out_test.parent.mkdir(parents=True, exist_ok=True)
    write_vector_manifest(train, out_train)
    write_vector_manifest(test, out_test)
    _log_run(out_train.parent, args, [Path(args.manifest)], [out_train, out_test])
    _summary(
        command="split",
        train_subjects=len(train.subjects()),
        test_subjects=len(test.subjects()),
        train_samples=len(train),
        test_samples=len(test),
    )
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    ds = load_manifest(args.manifest, args.mode)
    model = _train_model(ds, args.method, args.q, args.max_leaf, args.mu)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    modelio.save_model(model, out)
    outputs = [out]
    if args.json_mirror:
        mirror = Path(args.json_mirror)
        mirror.parent.mkdir(parents=True, exist_ok=True)
        modelio.save_model_json(model, mirror)
        outputs.append(mirror)
    _log_run(out.parent, args, [Path(args.manifest)], outputs)
    _summary(
        command="train",
        method=model.method,
        n=len(ds),
        d=ds.dim,
        q_max=model.q_max,
        out=out,
        sha256=_sha256_file(out),
    )
    return 0


def _cmd_enroll(args: argparse.Namespace) -> int:
    model = modelio.load_model(args.model)
    gallery = load_manifest(args.manifest, args.mode)
    index = enroll(model, gallery, args.q)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    modelio.save_gallery(index, out)
    _log_run(out.parent, args, [Path(args.model), Path(args.manifest)], [out])
    _summary(
        command="enroll",
        subjects=index.subject_count(),
        templates=index.template_count(),
        q=index.feature_dim,
        out=out,
        sha256=_sha256_file(out),
    )
    return 0


def _cmd_identify(args: argparse.Namespace) -> int:
    model = modelio.load_model(args.model)
    index = modelio.load_gallery(args.gallery)
    probes = load_manifest(args.manifest, args.mode)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    identified = 0
    unknown = 0
    with open(out, "w", newline="", encoding="utf-8") as fh:
        fh.write("probe,true_subject,decision,top_subject,top_distance\n")
        for i, sample in enumerate(probes.samples):
            result = identify(index, project(model, sample.vector, index.feature_dim), args.tau)
            top_subject, top_dist = result.ranking[0]
            decision = result.decision if result.decision is not None else "Unknown"
            if result.decision is None:
                unknown += 1
            else:
                identified += 1
            fh.write(f"{i},{sample.subject_id},{decision},{top_subject},{top_dist!r}\n")
    _log_run(out.parent, args, [Path(args.model), Path(args.gallery), Path(args.manifest)], [out])
    _summary(command="identify", probes=len(probes), identified=identified, unknown=unknown, out=out)
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    model = modelio.load_model(args.model)
    template_ds = load_manifest(args.template, args.mode)
    if len(template_ds) != 1:
        raise ValidationError("template manifest must contain exactly one row")
    live_ds = load_manifest(args.live, args.mode)
    q = args.q if args.q is not None else model.q_max
    template = project(model, template_ds.samples[0].vector, q)
    live = [project(model, s.vector, q) for s in live_ds.samples]
    accepted, best = verify(template, live, args.tau)
    _summary(
        command="verify",
        accepted=str(accepted).lower(),
        best=repr(best),
        tau=repr(args.tau),
        live=len(live),
    )
    return 0


def _rank1_protocol(model, split, q):
    index = enroll(model, split.gallery, q)
    results = []
    for sample in split.probe.samples:
        results.append((identify(index, project(model, sample.vector, q)), sample.subject_id))
    return index, results


def _cmd_evaluate(args: argparse.Namespace) -> int:
    ds = load_manifest(args.manifest, args.mode)
    inputs = [Path(args.manifest)]

    if args.imposter_subjects > 0:
        keep = len(ds.subjects()) - args.imposter_subjects
        if keep < 1:
            raise ValidationError("imposter hold-out would drop every subject")
        main_ds, imposter_ds = split_train_test(ds, keep, args.seed)
    else:
        main_ds, imposter_ds = ds, None

    if args.train_manifest:
        train_ds = load_manifest(args.train_manifest, args.mode)
        if train_ds.dim != ds.dim:
            raise ValidationError("training manifest dimension does not match the dataset")
        inputs.append(Path(args.train_manifest))
    else:
        train_ds = main_ds

    model = _train_model(train_ds, args.method, args.q, args.max_leaf, args.mu)
    split = make_gallery_probe(main_ds, args.gallery_k, args.gallery_rule, seed=args.seed)
    index, results = _rank1_protocol(model, split, args.q)
    cmc = evaluation.cmc_curve(results, args.max_rank)

    genuine_distances = []
    for result, true_subject in results:
        genuine_distances.append(dict(result.ranking)[true_subject])

    open_points: list[OpenSetPoint] = []
    roc: list[tuple[float, float]] = []
    n_imposters = 0
    if imposter_ds is not None:
        genuine_pairs = [
            (project(model, s.vector, args.q), s.subject_id) for s in split.probe.samples
        ]
        imposter_pairs = [
            (project(model, s.vector, args.q), s.subject_id) for s in imposter_ds.samples
        ]
        n_imposters = len(imposter_pairs)
        for theta in _floats(args.theta):
            cfg = calibrate_threshold(genuine_distances, theta)
            gir, irr = evaluation.open_set_rates(index, genuine_pairs, imposter_pairs, cfg)
            open_points.append(OpenSetPoint(theta=theta, tau=cfg.tau, gir=gir, irr=irr))
        imposter_scores = [identify(index, vec).ranking[0][1] for vec, _ in imposter_pairs]
        roc = evaluation.roc_points(genuine_distances, imposter_scores, _floats(args.far))

    digest_src = json.dumps(
        {
            "command": "evaluate",
            "method": args.method,
            "q": args.q,
            "gallery_k": args.gallery_k,
            "gallery_rule": args.gallery_rule,
            "max_leaf": args.max_leaf,
            "mu": args.mu,
            "theta": args.theta,
            "far": args.far,
            "max_rank": args.max_rank,
            "seed": args.seed,
            "imposter_subjects": args.imposter_subjects,
            "inputs": [_sha256_file(p) for p in inputs],
        },
        sort_keys=True,
    )
    report = EvalReport(
        cmc=[float(v) for v in cmc],
        open_set=open_points,
        roc=roc,
        counts={
            "gallery": len(split.gallery),
            "probe": len(split.probe),
            "imposter": n_imposters,
            "enrolled_subjects": index.subject_count(),
            "dropped_subjects": split.dropped_subjects,
        },
        config_digest=hashlib.sha256(digest_src.encode()).hexdigest(),
    )
    out = Path(args.out)
    written = evaluation.emit_report(report, out)
    if not args.no_figures:
        written += save_report_figures(report, out)
    _log_run(out, args, inputs, written)
    _summary(
        command="evaluate",
        method=args.method,
        q=args.q,
        gallery_k=args.gallery_k,
        gallery=len(split.gallery),
        probes=len(split.probe),
        imposters=n_imposters,
        rank1=repr(float(cmc[0])),
        out=out,
    )
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    ds = load_manifest(args.manifest, args.mode)
    inputs = [Path(args.manifest)]
    if args.train_manifest:
        train_ds = load_manifest(args.train_manifest, args.mode)
        if train_ds.dim != ds.dim:
            raise ValidationError("training manifest dimension does not match the dataset")
        inputs.append(Path(args.train_manifest))
    else:
        train_ds = ds
    q_list = sorted(_ints(args.q_list))
    if not q_list:
        raise ValidationError("--q-list is empty")
    model = _train_model(train_ds, args.method, max(q_list), args.max_leaf, args.mu)
    split = make_gallery_probe(ds, args.gallery_k, args.gallery_rule, seed=args.seed)
    curve = evaluation.rate_vs_features(model, split, q_list)
    report = EvalReport(
        rate_vs_q=curve,
        counts={
            "gallery": len(split.gallery),
            "probe": len(split.probe),
            "imposter": 0,
            "dropped_subjects": split.dropped_subjects,
        },
    )
    out = Path(args.out)
    written = evaluation.emit_report(report, out)
    if not args.no_figures:
        written += save_report_figures(report, out)
    _log_run(out, args, inputs, written)
    best_q, best_rate = max(curve, key=lambda qr: qr[1])
    _summary(
        command="sweep",
        method=args.method,
        q_list=args.q_list,
        best_q=best_q,
        best_rate=repr(best_rate),
        out=out,
    )
    return 0


def _add_mode(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("vectors", "images"), default="vectors",
                   help="manifest schema (default vectors)")


def _add_training(p: argparse.ArgumentParser, require_q: bool) -> None:
    p.add_argument("--method", choices=METHODS, required=True)
    if require_q:
        p.add_argument("--q", type=int, required=True, help="feature count")
    else:
        p.add_argument("--q", type=int, default=None, help="feature count (default: full rank)")
    p.add_argument("--max-leaf", type=int, default=8, help="subclass size bound (default 8)")
    p.add_argument("--mu", type=float, default=1.0, help="spectrum boundary tuning (default 1.0)")


def _add_protocol(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gallery-k", type=int, default=7, help="gallery images per subject (1 or 7 presets)")
    p.add_argument("--gallery-rule", choices=("first", "seeded-random"), default="first")
    p.add_argument("--train-manifest", default=None,
                   help="separate training manifest for subject-disjoint protocols")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subface",
        description="Subspace face recognition toolkit and evaluation harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic identification dataset")
    p.add_argument("--subjects", type=int, required=True)
    p.add_argument("--clusters", type=int, default=1, help="clusters per subject")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--samples", type=int, required=True, help="samples per subject")
    p.add_argument("--separation", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output vector manifest")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("normalize", help="warp an image manifest into a vector manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=80)
    p.add_argument("--left-eye", default="20,28")
    p.add_argument("--right-eye", default="44,28")
    p.add_argument("--no-hist-eq", action="store_true")
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("split", help="subject-disjoint train/test split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--train-subjects", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="train a subspace model")
    p.add_argument("--manifest", required=True)
    _add_mode(p)
    _add_training(p, require_q=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--json-mirror", default=None, help="also write a JSON mirror")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("enroll", help="project a gallery and build an index")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    _add_mode(p)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_enroll)

    p = sub.add_parser("identify", help="rank probes against an enrolled gallery")
    p.add_argument("--model", required=True)
    p.add_argument("--gallery", required=True)
    p.add_argument("--manifest", required=True)
    _add_mode(p)
    p.add_argument("--tau", type=float, default=None, help="rejection threshold (default closed-set)")
    p.add_argument("--out", required=True, help="output results CSV")
    p.set_defaults(func=_cmd_identify)

    p = sub.add_parser("verify", help="one-to-one template vs live captures")
    p.add_argument("--model", required=True)
    p.add_argument("--template", required=True, help="manifest with exactly one row")
    p.add_argument("--live", required=True, help="manifest of live captures")
    _add_mode(p)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--tau", type=float, required=True)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("evaluate", help="CMC, open-set, and ROC evaluation")
    p.add_argument("--manifest", required=True)
    _add_mode(p)
    _add_training(p, require_q=True)
    _add_protocol(p)
    p.add_argument("--theta", default="0.85", help="threshold fractions, comma separated")
    p.add_argument("--far", default="0.001,0.01,0.1", help="FAR targets, comma separated")
    p.add_argument("--max-rank", type=int, default=10)
    p.add_argument("--imposter-subjects", type=int, default=0,
                   help="hold out this many subjects as imposters")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="rank-1 rate against feature count")
    p.add_argument("--manifest", required=True)
    _add_mode(p)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--q-list", required=True, help="feature counts, comma separated")
    p.add_argument("--max-leaf", type=int, default=8)
    p.add_argument("--mu", type=float, default=1.0)
    _add_protocol(p)
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return int(args.func(args))
    except SubfaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
