import csv

import pytest

from ppgglu import cli, errors

SMALL_CFG = """\
# small, fast settings for CLI tests
synth_fs = 200
synth_duration_s = 3
window_len = 40
cnn_a_filters = 4
cnn_b_filters = 3
gru_layers = 6,5
branch_fc = 8,4
epochs_max = 3
patience = 2
batch_size = 4
aug_copies = 1
aug_sigmas = 0.02
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL_CFG, encoding="utf-8")
    return p


@pytest.fixture
def synth_dir(tmp_path, cfg_file):
    out = tmp_path / "synth"
    assert cli.main(["synth", "--config", str(cfg_file), "--count", "40", "--seed", "3", "--out", str(out),
                     "--quiet"]) == 0
    return out


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- preprocess --------------------------------------------------------------

def test_preprocess_fixture(capsys, tmp_path, fixture_dir):
    code, out, _ = run(capsys, "preprocess", fixture_dir, "--out", tmp_path / "o")
    assert code == 0
    r = rows(tmp_path / "o" / "windows.csv")
    assert len(r) == 3 and all(len(row) == 302 for row in r)
    assert r[0][:3] == ["record_id", "glucose_mgdl", "v000"] and r[1][0] == "rec1"
    assert "<98:1" in out.replace(" ", "") and ">=138:1" in out.replace(" ", "")


def test_preprocess_deterministic(capsys, tmp_path, fixture_dir):
    for d in ("a", "b"):
        assert run(capsys, "preprocess", fixture_dir, "--out", tmp_path / d, "--quiet")[0] == 0
    assert (tmp_path / "a" / "windows.csv").read_bytes() == (tmp_path / "b" / "windows.csv").read_bytes()


def test_preprocess_corrupt_signal(capsys, tmp_path, fixture_dir):
    (fixture_dir / "signals" / "rec2.csv").write_text("1.0\nbad\n")
    code, _, err = run(capsys, "preprocess", fixture_dir, "--out", tmp_path / "o")
    assert code == 2 and "rec2" in err and err.startswith("error:")


def test_preprocess_degenerate_names_record(capsys, tmp_path, fixture_dir):
    (fixture_dir / "signals" / "rec1.csv").write_text("1.0\n" * 300)
    code, _, err = run(capsys, "preprocess", fixture_dir, "--out", tmp_path / "o")
    assert code == 2 and "rec1" in err


def test_no_dataset(capsys, tmp_path):
    assert run(capsys, "preprocess", "--out", tmp_path)[0] == 2


# -- train -------------------------------------------------------------------

def test_train_outputs_and_determinism(capsys, tmp_path, cfg_file, synth_dir):
    outs = []
    for d in ("a", "b"):
        code, out, _ = run(capsys, "train", synth_dir, "--config", cfg_file, "--seed", 7, "--out", tmp_path / d)
        assert code == 0
        outs.append(out)
    for name in ("model.bin", "history.csv", "metrics.csv", "ceg.csv", "ceg.svg", "predictions.csv",
                 "report.txt"):
        assert (tmp_path / "a" / name).is_file(), name
    for name in ("metrics.csv", "ceg.csv", "predictions.csv", "model.bin", "history.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    labels = [ln.split()[0] for ln in outs[0].splitlines() if ln.split() and ln.split()[0] in
              ("MAE", "MAPE", "R2", "RMSE")]
    assert labels == ["MAE", "MAPE", "R2", "RMSE"]
    pred = rows(tmp_path / "a" / "predictions.csv")
    assert pred[0] == ["record_id", "ref_mgdl", "pred_mgdl"] and len(pred) == 1 + 40 - 28 - 6


def test_train_non_finite_exit_3(capsys, monkeypatch, tmp_path, cfg_file, synth_dir):
    def boom(*a, **k):
        raise errors.NonFiniteLoss("non-finite training loss at epoch 4, batch 2", epoch=4, batch=2)

    monkeypatch.setattr(cli, "train", boom)
    code, _, err = run(capsys, "train", synth_dir, "--config", cfg_file, "--out", tmp_path / "o")
    assert code == 3 and "epoch 4" in err


def test_unexpected_error_has_summary_first(capsys, monkeypatch, tmp_path, cfg_file, synth_dir):
    def boom(*a, **k):
        raise RuntimeError("kaput")

    monkeypatch.setattr(cli, "train", boom)
    code, _, err = run(capsys, "train", synth_dir, "--config", cfg_file, "--out", tmp_path / "o")
    assert code == 3 and err.splitlines()[0] == "internal error: RuntimeError: kaput"


# -- crossval ----------------------------------------------------------------

def test_crossval(capsys, tmp_path, cfg_file, synth_dir):
    code, out, _ = run(capsys, "crossval", synth_dir, "--config", cfg_file, "--k", 4, "--out", tmp_path / "cv")
    assert code == 0
    r = rows(tmp_path / "cv" / "folds.csv")
    assert r[0] == ["fold", "mae", "rmse"] and len(r) == 5
    assert "Fold No." in out and out.count("*") == 2


def test_crossval_k_too_big(capsys, tmp_path, cfg_file, synth_dir):
    code, _, err = run(capsys, "crossval", synth_dir, "--config", cfg_file, "--k", 41, "--out", tmp_path / "cv")
    assert code == 2 and "folds" in err


def test_crossval_fold_failure(capsys, monkeypatch, tmp_path, cfg_file, synth_dir):
    from ppgglu import training

    def boom(*a, **k):
        raise errors.NonFiniteLoss("non-finite training loss at epoch 1, batch 1", epoch=1, batch=1)

    monkeypatch.setattr(training, "train", boom)
    code, _, err = run(capsys, "crossval", synth_dir, "--config", cfg_file, "--k", 4, "--out", tmp_path / "cv")
    assert code == 3 and "fold 1" in err


# -- ceg ---------------------------------------------------------------------

def write_pairs(path, pairs, header="ref_mgdl,pred_mgdl"):
    path.write_text(header + "\n" + "".join(f"{r},{p}\n" for r, p in pairs))
    return path


def test_ceg_perfect(capsys, tmp_path):
    p = write_pairs(tmp_path / "p.csv", [(90, 90), (150, 150), (300, 300)])
    assert run(capsys, "ceg", p, "--out", tmp_path / "o")[0] == 0
    assert rows(tmp_path / "o" / "ceg.csv")[1] == ["A", "3", "100.0"]
    assert (tmp_path / "o" / "ceg.svg").read_text().count('class="point"') == 3


def test_ceg_three_pairs(capsys, tmp_path):
    p = write_pairs(tmp_path / "p.csv", [(100, 115), (60, 65), (200, 60)])
    code, out, _ = run(capsys, "ceg", p, "--out", tmp_path / "o")
    assert code == 0 and "Zone A: 2" in out and "Zone E: 1" in out


@pytest.mark.parametrize("content", ["", "ref_mgdl,pred_mgdl\n", "a,b\n1,2\n", "ref_mgdl,pred_mgdl\n1,x\n"])
def test_ceg_bad_files(capsys, tmp_path, content):
    p = tmp_path / "p.csv"
    p.write_text(content)
    assert run(capsys, "ceg", p, "--out", tmp_path / "o")[0] == 2


def test_ceg_missing_file(capsys, tmp_path):
    assert run(capsys, "ceg", tmp_path / "nope.csv", "--out", tmp_path / "o")[0] == 2


# -- synth -------------------------------------------------------------------

def test_synth_layout_and_determinism(capsys, tmp_path, cfg_file):
    for d in ("a", "b"):
        assert run(capsys, "synth", "--config", cfg_file, "--count", 10, "--seed", 1, "--out", tmp_path / d)[0] == 0
    assert len(rows(tmp_path / "a" / "labels.csv")) == 11
    files = sorted(p.name for p in (tmp_path / "a" / "signals").iterdir())
    assert len(files) == 10
    for p in sorted((tmp_path / "a").rglob("*.csv")):
        assert p.read_bytes() == (tmp_path / "b" / p.relative_to(tmp_path / "a")).read_bytes()
    assert run(capsys, "preprocess", tmp_path / "a", "--config", cfg_file, "--out", tmp_path / "w")[0] == 0


def test_synth_unwritable(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(capsys, "synth", "--count", 1, "--out", blocker / "sub")[0] == 2


# -- config ------------------------------------------------------------------

def test_unknown_config_key(capsys, tmp_path, fixture_dir):
    bad = tmp_path / "bad.cfg"
    bad.write_text("window_len = 300\nlearning_rate = 0.1\n")
    code, _, err = run(capsys, "preprocess", fixture_dir, "--config", bad, "--out", tmp_path / "o")
    assert code == 2 and "learning_rate" in err


@pytest.mark.parametrize("item", ["epochs_max=zero", "nokey", "aug_copies=2"])
def test_bad_overrides(capsys, tmp_path, fixture_dir, item):
    assert run(capsys, "preprocess", fixture_dir, "--set", item, "--out", tmp_path / "o")[0] == 2


def test_missing_config_file(capsys, tmp_path, fixture_dir):
    assert run(capsys, "preprocess", fixture_dir, "--config", tmp_path / "none.cfg", "--out", tmp_path)[0] == 2


def test_every_key_has_default():
    from ppgglu.config import DEFAULTS, RunConfig

    cfg = RunConfig()
    assert set(cfg.values) == set(DEFAULTS)
    assert RunConfig.from_sources(None, {"seed": "4"}).seed == 4
