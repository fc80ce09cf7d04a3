from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conjopt.bench import generate_instance
from conjopt.conjugate_forms import (
    eval_conjugate_tensor,
    eval_form,
    eval_form_batch,
    eval_form_complex,
    extract_linear_coefficient,
    form_from_coefficients,
    form_from_json,
    form_to_json,
    form_to_tensor,
    hermitian_quadratic_form,
    is_square_free,
    multiply_forms,
    norm_power_form,
    tensor_to_form,
)
from conjopt.errors import (
    FormIndexError,
    ImaginaryResidueError,
    NotConjugateSuperSymmetric,
    NotSquareFreeInVariable,
    ParameterError,
    RealValuednessError,
)
from conjopt.tensor_core import is_conjugate_super_symmetric

EXAMPLE_COEFFS = {
    ((1, 1), ()): 1j,
    ((), (1, 1)): -1j,
    ((1,), (1,)): 2,
    ((1,), (2,)): 4,
    ((2,), (1,)): 4,
}
EXAMPLE_G = np.array(
    [[1j, 0, 1, 2], [0, 0, 2, 0], [1, 2, -1j, 0], [2, 0, 0, 0]],
    dtype=np.complex128,
)


@pytest.fixture
def example_form():
    return form_from_coefficients(2, 2, EXAMPLE_COEFFS)


def cross_form():
    return form_from_coefficients(2, 2, {((1,), (2,)): 1, ((2,), (1,)): 1})


def test_example_form_builds(example_form):
    assert example_form.coeffs == {k: complex(v) for k, v in EXAMPLE_COEFFS.items()}


def test_missing_mirror_rejected():
    with pytest.raises(RealValuednessError) as err:
        form_from_coefficients(2, 2, {((1, 1), ()): 1j})
    assert err.value.key == ((1, 1), ())


def test_wrong_mirror_value_rejected():
    with pytest.raises(RealValuednessError):
        form_from_coefficients(2, 2, {((1,), (2,)): 1j, ((2,), (1,)): 1j})


def test_self_mirror_must_be_real():
    with pytest.raises(RealValuednessError):
        form_from_coefficients(1, 2, {((1,), (1,)): 1 + 1j})


def test_index_out_of_range():
    with pytest.raises(FormIndexError):
        form_from_coefficients(2, 2, {((3,), (1,)): 1, ((1,), (3,)): 1})


def test_wrong_degree_key():
    with pytest.raises(ParameterError):
        form_from_coefficients(2, 2, {((1,), ()): 1, ((), (1,)): 1})


def test_unsorted_duplicates_merge():
    g = form_from_coefficients(2, 3, {((2, 1), (1,)): 1, ((1, 2), (1,)): 2, ((1,), (1, 2)): 3})
    assert g.coeffs[((1, 2), (1,))] == 3


def test_empty_form_is_zero():
    g = form_from_coefficients(3, 2, {})
    assert eval_form(g, [1, 2, 3]) == 0.0
    assert not form_to_tensor(g).any()


def test_eval_example(example_form):
    assert eval_form(example_form, [1, 0]) == pytest.approx(2.0, abs=1e-14)
    assert eval_form(example_form, [1j, 0]) == pytest.approx(2.0, abs=1e-14)
    assert eval_form(example_form, [1, 1]) == pytest.approx(10.0, abs=1e-14)


def test_form_to_tensor_example(example_form):
    np.testing.assert_array_equal(form_to_tensor(example_form), EXAMPLE_G)


def test_tensor_to_form_example(example_form):
    assert tensor_to_form(EXAMPLE_G, 2).coeffs == example_form.coeffs


def test_tensor_to_form_rejects_non_css():
    G = EXAMPLE_G.copy()
    G[0, 0] = 1 + 1j
    with pytest.raises(NotConjugateSuperSymmetric):
        tensor_to_form(G, 2)


def test_single_variable_modulus_tensor():
    g = form_from_coefficients(1, 2, {((1,), (1,)): 2})
    np.testing.assert_array_equal(form_to_tensor(g), [[0, 1], [1, 0]])


def test_eval_conjugate_tensor_example():
    assert eval_conjugate_tensor(EXAMPLE_G, [1, 1]) == pytest.approx(10.0, abs=1e-14)
    assert eval_conjugate_tensor(np.zeros((4, 4)), [1, 1]) == 0.0


def test_norm_tensor_at_unit_vector():
    H = form_to_tensor(norm_power_form(2, 2))
    assert eval_conjugate_tensor(H, [0.6, 0.8j]) == pytest.approx(1.0, abs=1e-14)


def test_is_square_free(example_form):
    assert is_square_free(cross_form())
    assert not is_square_free(example_form)
    assert is_square_free(form_from_coefficients(2, 2, {}))


def test_extract_linear_coefficient_cases():
    lin = form_from_coefficients(1, 1, {((1,), ()): 1, ((), (1,)): 1})
    p1, p3 = extract_linear_coefficient(lin, [0.3 + 0.1j], 1)
    assert p1 == pytest.approx(1) and p3 == pytest.approx(0, abs=1e-15)
    p1, p3 = extract_linear_coefficient(cross_form(), [0.5, 1j], 1)
    assert p1 == pytest.approx(-1j) and p3 == pytest.approx(0, abs=1e-15)
    g = form_from_coefficients(2, 2, {((2,), (2,)): 2})
    p1, p3 = extract_linear_coefficient(g, [0.5, 1], 1)
    assert p1 == 0 and p3 == pytest.approx(2)


def test_extract_linear_coefficient_rejects_repeated_variable(example_form):
    with pytest.raises(NotSquareFreeInVariable):
        extract_linear_coefficient(example_form, [0, 0], 1)


def test_extract_linear_coefficient_reconstruction():
    rng = np.random.default_rng(0)
    g = generate_instance("form_squarefree", 3, 3, 1.0, rng)
    x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    for i in (1, 2, 3):
        p1, p3 = extract_linear_coefficient(g, x, i)
        for t in rng.standard_normal(10) + 1j * rng.standard_normal(10):
            y = x.copy()
            y[i - 1] = t
            assert eval_form(g, y) == pytest.approx(2 * (t * p1).real + p3, rel=1e-10, abs=1e-10)


def test_imaginary_residue_detected():
    from conjopt.conjugate_forms import ConjugateForm

    bad = ConjugateForm(1, 1, {((1,), ()): 1j})
    with pytest.raises(ImaginaryResidueError):
        eval_form(bad, [1.0])


def test_batch_matches_pointwise(example_form):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
    np.testing.assert_allclose(eval_form_batch(example_form, X), [eval_form(example_form, x) for x in X], rtol=1e-13)


def test_hermitian_and_products():
    Q = np.array([[2, 1 - 1j], [1 + 1j, 3]])
    g = hermitian_quadratic_form(Q)
    x = np.array([0.3 + 0.2j, -0.5j])
    assert eval_form(g, x) == pytest.approx(np.real(np.conj(x) @ Q @ x), rel=1e-13)
    sq = multiply_forms(g, g)
    assert eval_form(sq, x) == pytest.approx(eval_form(g, x) ** 2, rel=1e-12)


def test_json_round_trip(example_form):
    again = form_from_json(form_to_json(example_form))
    assert again.coeffs == example_form.coeffs


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 4), d=st.integers(1, 4), seed=st.integers(0, 2**31 - 1))
def test_round_trip_and_agreement(n, d, seed):
    rng = np.random.default_rng(seed)
    g = generate_instance("form_general", n, d, 0.6, rng)
    G = form_to_tensor(g)
    assert is_conjugate_super_symmetric(G, n)
    back = tensor_to_form(G, n)
    assert set(back.coeffs) == set(g.coeffs)
    for k, v in g.coeffs.items():
        assert abs(back.coeffs[k] - v) <= 1e-12 * (1 + abs(v))
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    a, b = eval_form(g, x), eval_conjugate_tensor(G, x)
    assert abs(a - b) <= 1e-9 * (1 + abs(a))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 4), d=st.integers(1, 4), seed=st.integers(0, 2**31 - 1))
def test_raw_evaluation_is_real(n, d, seed):
    rng = np.random.default_rng(seed)
    g = generate_instance("form_general", n, d, 1.0, rng)
    X = 3 * (rng.standard_normal((50, n)) + 1j * rng.standard_normal((50, n)))
    z = eval_form_batch(g, X, check=False)
    assert np.all(np.abs(z.imag) <= 1e-9 * (1 + np.abs(z.real)))
    assert abs(eval_form_complex(g, X[0]) - z[0]) <= 1e-9 * (1 + abs(z[0]))
