import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from subface.cli import main
from subface.dataset import NormalizationGeometry, load_manifest, normalize_face

from conftest import write_pgm


def run(*argv):
    return main([str(a) for a in argv])


def synth_manifest(tmp_path, name="data.csv", subjects=10, clusters=2, dim=50,
                   samples=20, seed=0):
    path = tmp_path / name
    code = run("synth", "--subjects", subjects, "--clusters", clusters, "--dim", dim,
               "--samples", samples, "--separation", 5.0, "--seed", seed, "--out", path)
    assert code == 0
    return path


def test_unknown_command_exits_2(capsys):
    assert run("frobnicate") == 2
    capsys.readouterr()


def test_train_missing_manifest_flag_exits_2(tmp_path, capsys):
    code = run("train", "--method", "pca", "--out", tmp_path / "m.bin")
    assert code == 2
    assert not (tmp_path / "m.bin").exists()
    capsys.readouterr()


def test_train_missing_manifest_file_exits_2(tmp_path, capsys):
    code = run("train", "--manifest", tmp_path / "nope.csv", "--method", "pca",
               "--q", "3", "--out", tmp_path / "m.bin")
    assert code == 2
    assert not (tmp_path / "m.bin").exists()
    err = capsys.readouterr().err
    assert "not found" in err


def test_synth_train_evaluate_pipeline(tmp_path, capsys):
    data = synth_manifest(tmp_path)
    model_path = tmp_path / "model.bin"
    assert run("train", "--manifest", data, "--method", "wssda", "--q", "9",
               "--out", model_path) == 0
    assert model_path.exists()
    out = tmp_path / "report"
    code = run("evaluate", "--manifest", data, "--method", "wssda", "--q", "9",
               "--gallery-k", "7", "--out", out)
    assert code == 0
    captured = capsys.readouterr().out.strip().splitlines()[-1]
    fields = dict(kv.split("=", 1) for kv in captured.split())
    assert fields["command"] == "evaluate"
    assert float(fields["rank1"]) >= 0.95
    for name in ("cmc.csv", "rate_vs_q.csv", "openset.csv", "roc.csv", "summary.json"):
        assert (out / name).exists()
    # figures rendered alongside the delimited output
    assert (out / "cmc.png").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["counts"]["gallery"] == 70
    assert summary["counts"]["probe"] == 130


def test_train_runs_are_byte_identical(tmp_path, capsys):
    data = synth_manifest(tmp_path)
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    assert run("train", "--manifest", data, "--method", "wssda", "--q", "5", "--out", a) == 0
    assert run("train", "--manifest", data, "--method", "wssda", "--q", "5", "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()


def test_evaluate_runs_produce_identical_reports(tmp_path, capsys):
    data = synth_manifest(tmp_path, subjects=6, dim=20, samples=10)
    args = ("evaluate", "--manifest", data, "--method", "pca", "--q", "4",
            "--gallery-k", "3", "--imposter-subjects", "2", "--no-figures")
    assert run(*args, "--out", tmp_path / "r1") == 0
    assert run(*args, "--out", tmp_path / "r2") == 0
    for name in ("cmc.csv", "rate_vs_q.csv", "openset.csv", "roc.csv", "summary.json"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()
    capsys.readouterr()


def test_evaluate_open_set_sections(tmp_path, capsys):
    data = synth_manifest(tmp_path, subjects=8, dim=30, samples=12)
    out = tmp_path / "report"
    code = run("evaluate", "--manifest", data, "--method", "wssda", "--q", "5",
               "--gallery-k", "3", "--imposter-subjects", "3",
               "--theta", "0.5,0.65,0.85,1.0", "--far", "0.1,0.5", "--out", out,
               "--no-figures")
    assert code == 0
    with open(out / "openset.csv", newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    assert [float(r[0]) for r in rows] == [0.5, 0.65, 0.85, 1.0]
    girs = [float(r[2]) for r in rows]
    irrs = [float(r[3]) for r in rows]
    assert girs == sorted(girs)
    assert irrs == sorted(irrs, reverse=True)
    with open(out / "roc.csv", newline="") as fh:
        roc_rows = list(csv.reader(fh))[1:]
    assert len(roc_rows) == 2
    capsys.readouterr()


def test_sweep_writes_curve_and_figure(tmp_path, capsys):
    data = synth_manifest(tmp_path, subjects=6, dim=20, samples=10)
    out = tmp_path / "sweep"
    code = run("sweep", "--manifest", data, "--method", "wssda", "--q-list", "2,3,5",
               "--gallery-k", "3", "--out", out)
    assert code == 0
    with open(out / "rate_vs_q.csv", newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    assert [int(r[0]) for r in rows] == [2, 3, 5]
    assert (out / "rate_vs_q.png").exists()
    capsys.readouterr()


def test_enroll_identify_verify_flow(tmp_path, capsys):
    data = synth_manifest(tmp_path, subjects=5, dim=12, samples=8)
    model_path = tmp_path / "model.bin"
    assert run("train", "--manifest", data, "--method", "pca", "--q", "4",
               "--out", model_path) == 0
    gallery_path = tmp_path / "gallery.bin"
    assert run("enroll", "--model", model_path, "--manifest", data, "--q", "4",
               "--out", gallery_path) == 0

    results = tmp_path / "results.csv"
    assert run("identify", "--model", model_path, "--gallery", gallery_path,
               "--manifest", data, "--out", results) == 0
    with open(results, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["probe", "true_subject", "decision", "top_subject", "top_distance"]
    assert len(rows) == 1 + 40
    # closed-set self-identification of enrolled samples is exact
    assert all(r[1] == r[2] for r in rows[1:])

    # one-row template manifest vs the rest
    ds = load_manifest(data, "vectors")
    from subface.dataset import Dataset, write_vector_manifest

    template = Dataset(samples=[ds.samples[0]], dim=ds.dim)
    live = Dataset(samples=ds.samples[:3], dim=ds.dim)
    write_vector_manifest(template, tmp_path / "tpl.csv")
    write_vector_manifest(live, tmp_path / "live.csv")
    code = run("verify", "--model", model_path, "--template", tmp_path / "tpl.csv",
               "--live", tmp_path / "live.csv", "--tau", "0.1")
    assert code == 0
    out_line = capsys.readouterr().out.strip().splitlines()[-1]
    fields = dict(kv.split("=", 1) for kv in out_line.split())
    assert fields["accepted"] == "true"
    assert float(fields["best"]) == 0.0


def test_identify_with_tau_marks_unknowns(tmp_path, capsys):
    data = synth_manifest(tmp_path, subjects=5, dim=12, samples=8)
    model_path = tmp_path / "model.bin"
    run("train", "--manifest", data, "--method", "pca", "--q", "4", "--out", model_path)
    gallery_path = tmp_path / "gallery.bin"
    run("enroll", "--model", model_path, "--manifest", data, "--q", "4", "--out", gallery_path)
    results = tmp_path / "res.csv"
    assert run("identify", "--model", model_path, "--gallery", gallery_path,
               "--manifest", data, "--tau", "-1.0", "--out", results) == 0
    with open(results, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    assert all(r[2] == "Unknown" for r in rows)
    out_line = capsys.readouterr().out.strip().splitlines()[-1]
    assert "unknown=40" in out_line


def test_runs_log_appends_digests(tmp_path, capsys):
    data = synth_manifest(tmp_path, subjects=4, dim=10, samples=6)
    log = tmp_path / "runs.log"
    assert log.exists()
    run("train", "--manifest", data, "--method", "pca", "--q", "3",
        "--out", tmp_path / "m.bin")
    entries = [json.loads(line) for line in log.read_text().splitlines()]
    assert [e["command"] for e in entries] == ["synth", "train"]
    train_entry = entries[-1]
    assert str(data) in train_entry["inputs"]
    assert len(list(train_entry["outputs"].values())[0]) == 64
    assert train_entry["flags"]["method"] == "pca"
    capsys.readouterr()


def test_split_command(tmp_path, capsys):
    data = synth_manifest(tmp_path, subjects=8, dim=10, samples=4)
    t, s = tmp_path / "train.csv", tmp_path / "test.csv"
    assert run("split", "--manifest", data, "--train-subjects", "5", "--seed", "1",
               "--out-train", t, "--out-test", s) == 0
    train = load_manifest(t, "vectors")
    test = load_manifest(s, "vectors")
    assert len(train.subjects()) == 5
    assert len(test.subjects()) == 3
    assert not set(train.subjects()) & set(test.subjects())
    capsys.readouterr()


def test_normalize_command(tmp_path, capsys, rng):
    rows = ["path,subject_id,left_eye_x,left_eye_y,right_eye_x,right_eye_y,tag"]
    images = []
    for i in range(2):
        img = rng.integers(0, 256, size=(40, 32), dtype=np.uint8)
        images.append(img)
        write_pgm(tmp_path / f"f{i}.pgm", img)
        rows.append(f"f{i}.pgm,s{i},10,14,22,14,")
    manifest = tmp_path / "faces.csv"
    manifest.write_text("\n".join(rows) + "\n")
    out = tmp_path / "vectors.csv"
    code = run("normalize", "--manifest", manifest, "--out", out,
               "--width", "32", "--height", "40", "--left-eye", "10,14",
               "--right-eye", "22,14")
    assert code == 0
    ds = load_manifest(out, "vectors")
    assert ds.dim == 32 * 40
    geom = NormalizationGeometry(out_width=32, out_height=40, target_left_eye=(10, 14),
                                 target_right_eye=(22, 14))
    want = normalize_face(images[0], (10, 14), (22, 14), geom)
    assert np.array_equal(ds.samples[0].vector, want)
    capsys.readouterr()


def test_evaluate_with_separate_training_manifest(tmp_path, capsys):
    data = synth_manifest(tmp_path, subjects=10, dim=20, samples=10)
    t, s = tmp_path / "train.csv", tmp_path / "test.csv"
    run("split", "--manifest", data, "--train-subjects", "5", "--seed", "0",
        "--out-train", t, "--out-test", s)
    out = tmp_path / "report"
    code = run("evaluate", "--manifest", s, "--train-manifest", t, "--method", "wssda",
               "--q", "6", "--gallery-k", "3", "--out", out, "--no-figures")
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["counts"]["enrolled_subjects"] == 5
    capsys.readouterr()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "subface", "synth", "--subjects", "2", "--dim", "4",
         "--samples", "3", "--out", str(tmp_path / "d.csv")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("command=synth")
