from __future__ import annotations

import json

import numpy as np
import pytest

from conjopt.bench import (
    CSV_COLUMNS,
    ExperimentConfig,
    generate_instance,
    row_passes,
    rows_to_csv,
    run_experiment,
    write_outputs,
)
from conjopt.conjugate_forms import ConjugateForm, form_to_tensor, is_square_free
from conjopt.conjugate_solvers import hessian_sample
from conjopt.errors import ParameterError
from conjopt.sampling import INF
from conjopt.tensor_core import is_conjugate_super_symmetric


def test_generate_tensor_shapes_and_density():
    F = generate_instance("tensor", 2, 3, rng=0)
    assert F.shape == (2, 2, 2) and F.dtype == np.complex128
    assert generate_instance("tensor", 2, 3, rng=0, dims=(4, 2, 3)).shape == (4, 2, 3)
    sparse = generate_instance("tensor", 6, 3, density=0.2, rng=1)
    assert 0 < np.count_nonzero(sparse) < sparse.size


def test_generate_is_seeded():
    a = generate_instance("form_general", 3, 3, rng=5)
    b = generate_instance("form_general", 3, 3, rng=5)
    assert a.coeffs == b.coeffs


def test_generate_form_kinds():
    g = generate_instance("form_squarefree", 3, 3, rng=0)
    assert isinstance(g, ConjugateForm) and is_square_free(g)
    G = form_to_tensor(generate_instance("form_general", 2, 3, rng=0))
    assert is_conjugate_super_symmetric(G, 2)


def test_convex_generator_has_nonnegative_curvature():
    rng = np.random.default_rng(0)
    for seed in range(5):
        g = generate_instance("form_convex", 3, 4, rng=seed)
        assert g.convex_asserted
        for _ in range(20):
            x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            y = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            assert hessian_sample(g, x, y) >= -1e-9


def test_generator_errors():
    with pytest.raises(ParameterError):
        generate_instance("form_convex", 2, 3)
    with pytest.raises(ParameterError):
        generate_instance("form_squarefree", 2, 3)
    with pytest.raises(ParameterError):
        generate_instance("cube", 2, 3)
    with pytest.raises(ParameterError):
        generate_instance("tensor", 2, 3, density=0.0)


def test_row_passes():
    assert row_passes(1.0, 2.0, -1.0, 0.5, False)
    assert not row_passes(0.9, 2.0, -1.0, 0.5, False)
    assert row_passes(0.5, 2.0, -1.0, 0.5, True)
    assert not row_passes(0.4, 2.0, -1.0, 0.5, True)


def test_config_normalisation():
    cfg = ExperimentConfig(model="Linf", m=4, seeds=3)
    assert cfg.m == INF and cfg.seeds == [0, 1, 2]
    assert cfg.to_dict()["m"] == "inf"
    with pytest.raises(ParameterError):
        ExperimentConfig(model="Lx")
    with pytest.raises(ParameterError):
        ExperimentConfig.from_dict({"model": "Lm", "colour": "red"})


def test_empty_seed_list():
    res = run_experiment({"model": "Lm", "n": 2, "d": 3, "m": 3, "seeds": []})
    assert res.rows == []
    assert res.summary["count"] == 0 and res.summary["pass_rate"] is None


def test_lm_experiment_rows():
    res = run_experiment({"model": "Lm", "n": 2, "d": 3, "m": 3, "seeds": [4, 1, 2]})
    assert [r.seed for r in res.rows] == [1, 2, 4]
    for r in res.rows:
        assert r.vmin <= r.value <= r.vmax
        assert r.passed
    assert res.summary["failures"] == 0 and res.summary["allowed_failures"] == 0


def test_experiment_thread_invariance():
    cfg = {"model": "Gm", "n": 3, "d": 2, "m": 3, "seeds": [0, 1, 2], "trials": 10}
    a = run_experiment(dict(cfg, workers=1))
    b = run_experiment(dict(cfg, workers=3))
    assert rows_to_csv(a.rows) == rows_to_csv(b.rows)
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)


def test_sphere_quadratic_quotient_is_one():
    res = run_experiment({"model": "GS", "n": 3, "d": 2, "form_kind": "form_general", "seeds": [0, 1]})
    for r in res.rows:
        assert r.quotient == pytest.approx(1.0, abs=1e-12)
        assert r.passed


def test_csv_layout_and_outputs(tmp_path):
    res = run_experiment({"model": "Lm", "n": 2, "d": 2, "m": 4, "seeds": [0, 1]})
    text = rows_to_csv(res.rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3 and lines[1].endswith(",1,")
    csv_path, json_path = write_outputs(res, str(tmp_path / "run"))
    with open(csv_path) as fh:
        first = fh.readline()
        assert first.startswith("# generated ")
        assert fh.read() == text
    with open(json_path) as fh:
        obj = json.load(fh)
    assert obj["summary"]["count"] == 2
    assert "elapsed_ms" not in obj["rows"][0]


def test_timing_column_when_enabled():
    res = run_experiment({"model": "Lm", "n": 2, "d": 2, "m": 4, "seeds": [0], "timing": True})
    assert res.rows[0].elapsed_ms is not None and res.rows[0].elapsed_ms >= 0
