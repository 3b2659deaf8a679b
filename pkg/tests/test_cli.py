import csv
import io
import xml.etree.ElementTree as ET

import pytest
import yaml

from skipgram_mci.cli import CURVE_FEATURE_SETS, main
from skipgram_mci.features import read_dataset

from conftest import write_chat, write_manifest


def read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text(encoding="utf-8"))))


def write_config(path, **entries):
    path.write_text(yaml.safe_dump(entries, sort_keys=False), encoding="utf-8")
    return path


LOGISTIC_ONLY = [{"name": "Logistic", "variant": "LOGISTIC_RIDGE", "ridge": 1.0}]


class TestExtract:
    def test_writes_dataset(self, separable_dir):
        out = separable_dir / "out"
        assert main(["extract", "--train-manifest", str(separable_dir / "manifest.csv"),
                     "--out-dir", str(out)]) == 0
        ds = read_dataset(out / "dataset.txt", out / "dataset.names")
        assert len(ds.participant_ids) == 6
        assert ds.X.shape == (6, len(ds.feature_names))
        assert {k.split("|")[0] for k in ds.feature_names} == {"2.1", "3.1", "2.2", "3.2"}
        assert len(read_csv(out / "baseline.csv")) == 6

    def test_missing_manifest(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["extract", "--train-manifest", str(tmp_path / "absent.csv"), "--out-dir", str(out)])
        assert code == 2
        assert "absent.csv" in capsys.readouterr().err
        assert not out.exists()

    def test_unknown_feature_set(self, separable_dir):
        assert main(["extract", "--train-manifest", str(separable_dir / "manifest.csv"),
                     "--feature-set", "9-skip-nothing"]) == 2


class TestEvaluate:
    def test_four_models_and_baseline(self, separable_dir):
        out = separable_dir / "out"
        with pytest.warns(UserWarning):  # three per class forces fewer than ten folds
            code = main(["evaluate", "--train-manifest", str(separable_dir / "manifest.csv"),
                         "--out-dir", str(out)])
        assert code == 0
        rows = read_csv(out / "table1.csv")
        assert [r["model"] for r in rows] == ["SVM", "NB", "DT", "Logistic", "Baseline-SVM"]
        for r in rows[:4]:
            assert float(r["auc"]) == 1.0, r["model"]
            assert r["features"] == "top 200 all-skip-grams"
        assert rows[4]["features"] == "baseline"
        roc = read_csv(out / "roc.csv")
        assert {r["model"] for r in roc} == {r["model"] for r in rows}

    def test_baseline_only(self, separable_dir):
        cfg = write_config(separable_dir / "c.yaml", train_manifest="manifest.csv", models=[],
                           baseline=True, folds=3, out_dir="res")
        assert main(["evaluate", "--config", str(cfg)]) == 0
        rows = read_csv(separable_dir / "res" / "table1.csv")
        assert [(r["model"], r["features"]) for r in rows] == [("Baseline-SVM", "baseline")]

    def test_models_fragment_and_k(self, separable_dir):
        frag = write_config(separable_dir / "m.yaml", models=LOGISTIC_ONLY)
        out = separable_dir / "o"
        assert main(["evaluate", "--train-manifest", str(separable_dir / "manifest.csv"), "--models", str(frag),
                     "--k-top", "20", "--leakage-safe", "--out-dir", str(out)]) == 0
        rows = read_csv(out / "table1.csv")
        assert rows[0]["model"] == "Logistic" and rows[0]["k_top"] == "20"
        assert rows[0]["leakage"] == "PER_FOLD"

    def test_bad_models_file(self, separable_dir):
        frag = separable_dir / "m.yaml"
        frag.write_text("models:\n  - {variant: NOPE}\n", encoding="utf-8")
        assert main(["evaluate", "--train-manifest", str(separable_dir / "manifest.csv"),
                     "--models", str(frag)]) == 2


class TestCurves:
    def _run(self, d, out):
        cfg = write_config(d / "curves.yaml", train_manifest="manifest.csv", k_list=[10, 50, 200],
                           models=LOGISTIC_ONLY, baseline=False, folds=3, out_dir=out)
        return main(["curves", "--config", str(cfg)])

    def test_points_and_truncation(self, separable_dir):
        assert self._run(separable_dir, "c1") == 0
        out = separable_dir / "c1"
        rows = read_csv(out / "curves.csv")
        assert {r["feature_set"] for r in rows} == set(CURVE_FEATURE_SETS)
        for fs in CURVE_FEATURE_SETS:
            ks = [int(r["k"]) for r in rows if r["feature_set"] == fs]
            assert ks == sorted(ks) and 1 <= len(ks) <= 3
            assert all(0.0 <= float(r["accuracy"]) <= 1.0 for r in rows if r["feature_set"] == fs)
            ET.fromstring((out / f"curve-{fs}.svg").read_text(encoding="utf-8"))
        # the tiny corpus has fewer than 200 distinct grams per feature set
        assert all("truncated at vocabulary size" in r["note"] for r in rows)

    def test_byte_identical_reruns(self, separable_dir):
        self._run(separable_dir, "a")
        self._run(separable_dir, "b")
        for name in ["curves.csv"] + [f"curve-{fs}.svg" for fs in CURVE_FEATURE_SETS]:
            assert (separable_dir / "a" / name).read_bytes() == (separable_dir / "b" / name).read_bytes()


def _split_corpus(d):
    """Train/eval and validation manifests over distinct participants."""
    rows = {"manifest.csv": [], "validation.csv": []}
    for i in range(6):
        for label, marker in (("MCI", "thing"), ("CONTROL", "spigot")):
            pid = f"{label.lower()}{i}"
            for visit in (1, 2):
                write_chat(d / f"{pid}_{visit}.cha", pid, [f"the boy {marker} is on the stool {visit} .",
                                                           f"water {marker} on the floor ."])
                role = "TRAIN_EVAL" if i < 4 else "VALIDATION"
                name = "manifest.csv" if i < 4 else "validation.csv"
                rows[name].append((f"{pid}_{visit}.cha", pid, visit, label, role))
    for name, r in rows.items():
        write_manifest(d / name, r)
    return d


class TestGrid:
    GRID = {"Logistic": [{"variant": "LOGISTIC_RIDGE", "ridge": 1.0}],
            "NB": [{"variant": "NAIVE_BAYES_KDE", "kernel_density": False}]}

    def _run(self, d, out, **extra):
        cfg = write_config(d / "g.yaml", train_manifest="manifest.csv", validation_manifest="validation.csv",
                           grid=self.GRID, out_dir=out, **extra)
        return main(["grid", "--config", str(cfg)])

    def test_single_spec_grids_echo_inputs(self, tmp_path):
        d = _split_corpus(tmp_path)
        assert self._run(d, "g1") == 0
        chosen = yaml.safe_load((d / "g1" / "best_models.yaml").read_text())["models"]
        assert [(m["name"], m["variant"]) for m in chosen] == [("Logistic", "LOGISTIC_RIDGE"), ("NB", "NAIVE_BAYES_KDE")]
        assert chosen[0]["ridge"] == 1.0 and chosen[1]["kernel_density"] is False
        self._run(d, "g2")
        assert (d / "g1" / "best_models.yaml").read_bytes() == (d / "g2" / "best_models.yaml").read_bytes()

    def test_best_models_feed_evaluate(self, tmp_path):
        d = _split_corpus(tmp_path)
        self._run(d, "g")
        assert main(["evaluate", "--train-manifest", str(d / "manifest.csv"), "--models", str(d / "g" / "best_models.yaml"),
                     "--seed", "1", "--out-dir", str(d / "e")]) == 0
        assert [r["model"] for r in read_csv(d / "e" / "table1.csv")] == ["Logistic", "NB", "Baseline-SVM"]

    def test_participant_overlap_exit_code(self, tmp_path, capsys):
        d = _split_corpus(tmp_path)
        with open(d / "validation.csv", "a", encoding="utf-8") as fh:
            fh.write("mci0_1.cha,mci0,1,MCI,VALIDATION\nmci0_2.cha,mci0,2,MCI,VALIDATION\n")
        assert self._run(d, "g") == 3
        assert "mci0" in capsys.readouterr().err
        assert not (d / "g" / "best_models.yaml").exists()


def test_synth_then_config(tmp_path):
    out = tmp_path / "syn"
    assert main(["synth", "--out-dir", str(out), "--seed", "5"]) == 0
    cfg = yaml.safe_load((out / "config.yaml").read_text())
    assert (out / cfg["train_manifest"]).is_file() and (out / cfg["validation_manifest"]).is_file()
