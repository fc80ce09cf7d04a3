from __future__ import annotations

import json

import pytest

from conjopt.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_and_solve_multilinear(tmp_path, capsys):
    path = str(tmp_path / "t.json")
    assert main(["gen", "--kind", "tensor", "--n", "2", "--d", "3", "--seed", "1", "--out", path]) == 0
    code, out, _ = run(capsys, "solve-multilinear", "--input", path, "--m", "3", "--trials", "20")
    assert code == 0
    rep = json.loads(out)
    assert rep["trials_run"] == 20 and len(rep["solution"]) == 3
    assert "elapsed" not in rep


def test_solve_multilinear_thread_invariant(tmp_path, capsys):
    path = str(tmp_path / "t.json")
    main(["gen", "--kind", "tensor", "--n", "3", "--d", "3", "--seed", "2", "--out", path])
    outs = []
    for w in ("1", "3"):
        code, out, _ = run(capsys, "solve-multilinear", "--input", path, "--m", "inf", "--trials", "12", "--workers", w)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]


def test_solve_form_modes(tmp_path, capsys):
    sf = str(tmp_path / "sf.json")
    main(["gen", "--kind", "form_squarefree", "--n", "3", "--d", "3", "--out", sf])
    code, out, _ = run(capsys, "solve-form", "--input", sf, "--m", "4", "--trials", "10")
    assert code == 0 and json.loads(out)["mode"] == "SquareFreeAbsolute"
    code, out, _ = run(capsys, "solve-form", "--input", sf, "--constraint", "sphere", "--trials", "10")
    assert code == 0 and json.loads(out)["mode"] == "SphereOdd"

    cv = str(tmp_path / "cv.json")
    main(["gen", "--kind", "form_convex", "--n", "2", "--d", "2", "--out", cv])
    code, out, _ = run(capsys, "solve-form", "--input", cv, "--constraint", "circle", "--trials", "5")
    assert code == 0 and json.loads(out)["mode"] == "Convex"


def test_solve_form_rejects_unsupported(tmp_path, capsys):
    path = str(tmp_path / "g.json")
    main(["gen", "--kind", "form_general", "--n", "2", "--d", "3", "--out", path])
    code, _, err = run(capsys, "solve-form", "--input", path)
    assert code == 2 and "error" in err


def test_oracle_command(tmp_path, capsys):
    path = str(tmp_path / "t.json")
    main(["gen", "--kind", "tensor", "--n", "2", "--d", "2", "--out", path])
    code, out, _ = run(capsys, "oracle", "--input", path, "--m", "4")
    res = json.loads(out)
    assert code == 0 and res["exact"] and res["v_max"] >= res["v_min"]
    code, out, _ = run(capsys, "oracle", "--input", path, "--constraint", "sphere", "--starts", "100")
    assert code == 0 and not json.loads(out)["exact"]


def test_verify_polarization(capsys):
    code, out, _ = run(capsys, "verify-polarization", "--n", "2", "--d", "3", "--m", "4", "--instances", "3")
    res = json.loads(out)
    assert code == 0 and res["all_pass"] and len(res["results"]) == 3


def test_verify_bounds(capsys):
    code, out, _ = run(capsys, "verify-bounds", "--n", "3", "--samples", "20000")
    assert code == 0
    assert json.loads(out)["report"]["violation"] is False


def test_bench_command(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "Lm", "n": 2, "d": 3, "m": 3, "seeds": 3}))
    prefix = str(tmp_path / "out")
    code, _, err = run(capsys, "bench", "--config", str(cfg), "--output", prefix)
    assert code == 0 and "3 rows" in err
    assert (tmp_path / "out.csv").exists() and (tmp_path / "out.json").exists()


def test_missing_input_is_reported(capsys):
    code, _, err = run(capsys, "solve-multilinear", "--input", "/nonexistent.json")
    assert code == 2 and err.startswith("conjopt: error:")


def test_bad_subcommand():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
