import json

import pytest

from pbdlearn.cli import main


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def spec(tmp_path):
    return write_json(tmp_path / "spec.json", {"type": "pbd", "probs": [0.2, 0.5, 0.9, 0.4, 0.7, 0.3]})


def test_sample_degenerate(tmp_path):
    s = write_json(tmp_path / "ones.json", {"type": "pbd", "probs": [1, 1]})
    out = tmp_path / "s.txt"
    assert main(["sample", "--spec", s, "--count", "3", "--seed", "0", "--out", str(out)]) == 0
    assert out.read_text() == "2\n2\n2\n"
    meta = json.loads((tmp_path / "s.txt.meta.json").read_text())
    assert meta["count"] == 3 and len(meta["spec_sha256"]) == 64


def test_reruns_are_byte_identical(tmp_path, spec):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    main(["sample", "--spec", spec, "--count", "500", "--seed", "11", "--out", str(a)])
    main(["sample", "--spec", spec, "--count", "500", "--seed", "11", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    for out in (tmp_path / "h1.json", tmp_path / "h2.json"):
        main(["learn", "unimodal", "--samples", str(a), "--n", "6", "--epsilon", "0.5", "--out", str(out)])
    assert (tmp_path / "h1.json").read_bytes() == (tmp_path / "h2.json").read_bytes()


def test_exit_codes(tmp_path, spec, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("# n=6\n1\nx\n")
    assert main(["learn", "unimodal", "--samples", str(bad), "--n", "6", "--epsilon", "0.5"]) == 3
    assert "line 3" in capsys.readouterr().err
    assert main(["learn", "unimodal", "--samples", str(tmp_path / "missing.txt"), "--n", "6", "--epsilon", "0.5"]) == 3
    assert main(["bench", "--scenario", "nope"]) == 2
    assert main(["cover", "stats", "--n", "8", "--epsilon", "1.5"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["learn"])
    assert exc.value.code == 2
    junk = write_json(tmp_path / "junk.json", {"type": "mystery"})
    assert main(["sample", "--spec", junk, "--count", "1", "--seed", "0", "--out", str(tmp_path / "o")]) == 3


def test_learn_tv_not_certified_at_desk_scale(tmp_path, spec):
    samples = tmp_path / "s.txt"
    main(["sample", "--spec", spec, "--count", "20000", "--seed", "1", "--out", str(samples)])
    out = tmp_path / "h.json"
    code = main(["learn", "tv", "--samples", str(samples), "--n", "6", "--epsilon", "0.5", "--k", "2",
                 "--delta-threshold", "0.12", "--h-threshold", "0.06", "--out", str(out)])
    assert code == 4
    doc = json.loads(out.read_text())
    assert doc["certified"] is False and doc["form"] in ("sparse", "heavy_binomial")
    ev = tmp_path / "ev.json"
    assert main(["eval", "--hypothesis", str(out), "--truth", spec, "--out", str(ev)]) == 0
    assert json.loads(ev.read_text())["d_tv"] < 0.6


def test_eval_identity_and_disjoint(tmp_path, spec):
    from pbdlearn.dist_core import pbd_pmf

    h = write_json(tmp_path / "h.json", {"mass": list(pbd_pmf([0.2, 0.5, 0.9, 0.4, 0.7, 0.3]).mass)})
    out = tmp_path / "e.json"
    assert main(["eval", "--hypothesis", h, "--truth", spec, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["d_tv"] == pytest.approx(0.0, abs=1e-15)
    zeros = write_json(tmp_path / "z.json", {"type": "pbd", "probs": [0, 0, 0]})
    top = write_json(tmp_path / "t.json", {"mass": [0, 0, 0, 1]})
    main(["eval", "--hypothesis", top, "--truth", zeros, "--out", str(out)])
    doc = json.loads(out.read_text())
    assert doc["d_tv"] == 1.0 and doc["d_k"] == 1.0


def test_bench_csv(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--scenario", "dp", "--trials", "1", "--base-seed", "5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# pbdlearn-bench v1") and len(lines) == 4
    cfg = write_json(tmp_path / "c.json", {"scenario": "dkw", "trials": 4, "n": 10, "base_seed": 1})
    a, b = tmp_path / "a.csv", tmp_path / "b2.csv"
    main(["bench", "--config", cfg, "--out", str(a)])
    main(["bench", "--config", cfg, "--threads", "2", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_weighted_hard_instance(tmp_path):
    out = tmp_path / "h.json"
    assert main(["weighted", "hard-instance", "--k", "200", "--seed", "3", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["support_set"]) == 2
    assert all(101 <= j <= 200 for j in doc["support_set"])
    assert main(["weighted", "hard-instance", "--k", "201"]) == 2


def test_select(tmp_path):
    cands = write_json(tmp_path / "c.json", {"candidates": [
        {"type": "pbd", "probs": [0.1, 0.1]},
        {"type": "pbd", "probs": [0.9, 0.9]},
    ]})
    samples = tmp_path / "s.txt"
    samples.write_text("".join("2\n" if i % 10 else "1\n" for i in range(400)))
    out = tmp_path / "w.json"
    main(["select", "--candidates", cands, "--samples", str(samples), "--delta", "0.1", "--out", str(out)])
    assert json.loads(out.read_text())["winner"] == 1
    # at delta = 0.2 the pair is within 5 delta, so it draws and index 0 is kept
    main(["select", "--candidates", cands, "--samples", str(samples), "--delta", "0.2", "--out", str(out)])
    assert json.loads(out.read_text())["winner"] == 0
