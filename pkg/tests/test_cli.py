import csv
import io
import json

import numpy as np
import pytest

from filament_net import cli, network
from filament_net.image_io import ImageFragment, LabelMask, load_mask, save_image, save_mask


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    assert cli.main(["synth", str(d), "--count", "55", "--height", "96", "--width", "96", "--seed", "3"]) == 0
    return d


@pytest.fixture(scope="module")
def trained(corpus_dir, tmp_path_factory):
    model = tmp_path_factory.mktemp("model") / "model.json"
    assert cli.main(["train", str(corpus_dir / "frag_000_image.pgm"), str(corpus_dir / "frag_000_mask.pgm"),
                     str(model)]) == 0
    return model


def test_synth_writes_pairs_and_manifest(corpus_dir):
    assert len(list(corpus_dir.glob("*_image.pgm"))) == 55
    assert len(list(corpus_dir.glob("*_mask.pgm"))) == 55
    lines = (corpus_dir / "manifest.txt").read_text().splitlines()
    assert lines[0].startswith("# corpus seed=3 count=55")
    assert sum(1 for l in lines if l.startswith("frag_")) == 55
    assert "depth=" in lines[2] and "background=" in lines[2]


def test_synth_repeat_is_identical(tmp_path, capsys):
    for name in ("a", "b"):
        assert run(capsys, "synth", tmp_path / name, "--count", "4", "--height", "40", "--width", "40",
                   "--seed", "8")[0] == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


@pytest.mark.parametrize("depth", ["0", "-5"])
def test_synth_invalid_depth(tmp_path, capsys, depth):
    code, _, err = run(capsys, "synth", tmp_path / "x", "--count", "2", "--depth-min", depth)
    assert code == cli.EXIT_USAGE
    assert "depth" in err


def test_train_prints_error_and_rms(corpus_dir, tmp_path, capsys):
    code, out, _ = run(capsys, "train", corpus_dir / "frag_000_image.pgm", corpus_dir / "frag_000_mask.pgm",
                       tmp_path / "m.json")
    assert code == 0
    assert "training error:" in out and "background rms:" in out
    network.load_model(tmp_path / "m.json")


def test_train_twice_byte_identical(corpus_dir, tmp_path, capsys):
    for name in ("a.json", "b.json"):
        run(capsys, "train", corpus_dir / "frag_001_image.pgm", corpus_dir / "frag_001_mask.pgm",
            tmp_path / name, "--seed", "4")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_train_mask_dimension_mismatch(tmp_path, capsys):
    save_image(ImageFragment(np.full((20, 30), 90, dtype=np.uint8)), tmp_path / "img.pgm")
    save_mask(LabelMask(np.zeros((21, 30), dtype=bool)), tmp_path / "mask.pgm")
    code, _, err = run(capsys, "train", tmp_path / "img.pgm", tmp_path / "mask.pgm", tmp_path / "m.json")
    assert code == cli.EXIT_DATA
    assert "21x30" in err and "20x30" in err


def test_train_missing_file(tmp_path, capsys):
    code, _, _ = run(capsys, "train", tmp_path / "nope.pgm", tmp_path / "nope.pgm", tmp_path / "m.json")
    assert code == cli.EXIT_DATA


def test_train_degenerate_mask(tmp_path, capsys):
    save_image(ImageFragment(np.full((20, 30), 90, dtype=np.uint8)), tmp_path / "img.pgm")
    save_mask(LabelMask(np.zeros((20, 30), dtype=bool)), tmp_path / "mask.pgm")
    code, _, err = run(capsys, "train", tmp_path / "img.pgm", tmp_path / "mask.pgm", tmp_path / "m.json")
    assert code == cli.EXIT_DATA and "single class" in err


def test_usage_errors(capsys):
    assert run(capsys, "train")[0] == cli.EXIT_USAGE
    assert run(capsys, "bogus")[0] == cli.EXIT_USAGE
    assert run(capsys, "eval", "a", "b", "--k", "x")[0] == cli.EXIT_USAGE


def test_detect_on_training_fragment(corpus_dir, trained, tmp_path, capsys):
    out_mask = tmp_path / "pred.pgm"
    code, out, _ = run(capsys, "detect", corpus_dir / "frag_000_image.pgm", trained, out_mask)
    assert code == 0 and out.startswith("filament pixels:")
    code, out, _ = run(capsys, "eval", out_mask, corpus_dir / "frag_000_mask.pgm")
    (row,) = rows(out)
    assert float(row["f1"]) >= 0.95


def test_detect_reproduces_training_error(corpus_dir, tmp_path, capsys):
    img, mask = corpus_dir / "frag_002_image.pgm", corpus_dir / "frag_002_mask.pgm"
    _, out, _ = run(capsys, "train", img, mask, tmp_path / "m.json")
    reported = int(out.split("training error:")[1].split()[0])
    run(capsys, "detect", img, tmp_path / "m.json", tmp_path / "p.pgm")
    _, out, _ = run(capsys, "eval", tmp_path / "p.pgm", mask)
    (row,) = rows(out)
    assert int(row["fp"]) + int(row["fn"]) == reported


def test_detect_minimal_image(trained, tmp_path, capsys):
    save_image(ImageFragment(np.full((5, 5), 150, dtype=np.uint8)), tmp_path / "tiny.pgm")
    code, _, _ = run(capsys, "detect", tmp_path / "tiny.pgm", trained, tmp_path / "tiny_pred.pgm")
    assert code == 0
    assert load_mask(tmp_path / "tiny_pred.pgm").shape == (1, 1)


def test_detect_too_small_image(trained, tmp_path, capsys):
    save_image(ImageFragment(np.full((4, 9), 150, dtype=np.uint8)), tmp_path / "small.pgm")
    assert run(capsys, "detect", tmp_path / "small.pgm", trained, tmp_path / "o.pgm")[0] == cli.EXIT_DATA


def test_detect_pad(corpus_dir, trained, tmp_path, capsys):
    run(capsys, "detect", corpus_dir / "frag_005_image.pgm", trained, tmp_path / "pad.pgm", "--pad")
    m = load_mask(tmp_path / "pad.pgm").labels
    assert m.shape == (96, 96)
    ring = np.ones_like(m)
    ring[2:-2, 2:-2] = False
    assert not m[ring].any()
    assert m.any()


def test_detect_bad_model(corpus_dir, tmp_path, capsys):
    (tmp_path / "bad.json").write_text(json.dumps({"k": 5}))
    code, _, _ = run(capsys, "detect", corpus_dir / "frag_000_image.pgm", tmp_path / "bad.json", tmp_path / "o.pgm")
    assert code == cli.EXIT_DATA


def test_eval_identical_and_disjoint(tmp_path, capsys):
    a = np.zeros((10, 10), dtype=bool)
    a[3:6, 2:8] = True
    save_mask(LabelMask(a), tmp_path / "a.pgm")
    save_mask(LabelMask(~a), tmp_path / "b.pgm")
    _, out, _ = run(capsys, "eval", tmp_path / "a.pgm", tmp_path / "a.pgm", "--k", "3")
    assert float(rows(out)[0]["f1"]) == 1.0
    _, out, _ = run(capsys, "eval", tmp_path / "b.pgm", tmp_path / "a.pgm", "--k", "3")
    assert float(rows(out)[0]["f1"]) == 0.0


def test_corpus_directory_mode(corpus_dir, trained, tmp_path, capsys):
    preds = tmp_path / "preds"
    code, out, _ = run(capsys, "detect", corpus_dir, trained, preds, "--exclude", "frag_000", "--workers", "3")
    assert code == 0
    assert len(list(preds.glob("*_pred.pgm"))) == 54
    code, out, _ = run(capsys, "eval", preds, corpus_dir)
    table = rows(out)
    assert len(table) == 55 and table[-1]["fragment_id"] == "mean"
    assert [r["fragment_id"] for r in table[:-1]] == [f"frag_{i:03d}" for i in range(1, 55)]
    mean_f1 = np.mean([float(r["f1"]) for r in table[:-1]])
    assert float(table[-1]["f1"]) == pytest.approx(mean_f1, abs=1e-6)


def test_corpus_detect_order_stable(corpus_dir, trained, tmp_path, capsys):
    outs = []
    for workers in ("1", "4"):
        d = tmp_path / f"w{workers}"
        outs.append(run(capsys, "detect", corpus_dir, trained, d, "--workers", workers)[1])
        run(capsys, "eval", d, corpus_dir)
    assert outs[0] == outs[1]


def test_config_file_and_override(corpus_dir, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# options\nk = 3\nepochs=5\nrobust=false\npad=true\n")
    img, mask = corpus_dir / "frag_000_image.pgm", corpus_dir / "frag_000_mask.pgm"
    assert run(capsys, "--config", cfg, "train", img, mask, tmp_path / "a.json")[0] == 0
    a = network.load_model(tmp_path / "a.json")
    assert a.window.k == 3 and a.bg_robust is False
    assert run(capsys, "--config", cfg, "train", img, mask, tmp_path / "b.json", "--k", "7", "--robust")[0] == 0
    b = network.load_model(tmp_path / "b.json")
    assert b.window.k == 7 and b.bg_robust is True
    # pad from the file applies to detect
    assert run(capsys, "--config", cfg, "detect", img, tmp_path / "a.json", tmp_path / "p.pgm")[0] == 0
    assert load_mask(tmp_path / "p.pgm").shape == (96, 96)


def test_config_file_bad_line(tmp_path, corpus_dir, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("just words\n")
    code, _, _ = run(capsys, "--config", cfg, "eval", corpus_dir / "frag_000_mask.pgm", corpus_dir / "frag_000_mask.pgm")
    assert code == cli.EXIT_USAGE


def test_detect_bg_refit_override(corpus_dir, trained, tmp_path, capsys):
    code, _, _ = run(capsys, "detect", corpus_dir / "frag_000_image.pgm", trained, tmp_path / "f.pgm", "--no-bg-refit")
    assert code == 0
