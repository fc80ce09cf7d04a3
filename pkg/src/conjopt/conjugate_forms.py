"""Real-valued general conjugate forms and their tensor representation.

A form of degree ``d`` in ``x in C^n`` is stored as a sparse map from a key
``(I, J)`` to a complex coefficient, where ``I`` is the sorted multiset of
indices that appear conjugated and ``J`` the sorted multiset of indices that
appear plain (both 1-based, ``len(I) + len(J) == d``)::

    g(x) = sum a[I, J] * conj(prod_{i in I} x_i) * prod_{j in J} x_j

The form is real-valued for every ``x`` exactly when ``a[I, J] == conj(a[J, I])``
for every key; that pairing is enforced on construction.

The tensor side stacks conjugated coordinates first: ``g(x) = G(s, ..., s)``
with ``s = (conj(x); x)``, so tensor position ``t < n`` (0-based) stands for
``conj(x_t)`` and ``t >= n`` for ``x_{t-n}``.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionError,
    FormIndexError,
    ImaginaryResidueError,
    NotConjugateSuperSymmetric,
    NotSquareFreeInVariable,
    ParameterError,
    RealValuednessError,
    ShapeError,
)
from .tensor_core import as_tensor, as_vector, distinct_permutations, eval_multilinear, is_conjugate_super_symmetric

Key = tuple[tuple[int, ...], tuple[int, ...]]

RESIDUE_TOL = 1e-9

__all__ = [
    "ConjugateForm",
    "FormFlags",
    "form_from_coefficients",
    "zero_form",
    "eval_form",
    "eval_form_complex",
    "eval_form_batch",
    "form_to_tensor",
    "tensor_to_form",
    "eval_conjugate_tensor",
    "stacked",
    "is_square_free",
    "extract_linear_coefficient",
    "add_forms",
    "scale_form",
    "multiply_forms",
    "power_form",
    "hermitian_quadratic_form",
    "norm_power_form",
    "form_to_json",
    "form_from_json",
    "load_form",
    "dump_form",
]


@dataclass(frozen=True)
class FormFlags:
    square_free: bool
    convex_asserted: bool


@dataclass(frozen=True)
class ConjugateForm:
    """Validated coefficient map of a real-valued general conjugate form.

    Build instances through :func:`form_from_coefficients`; the constructor
    does not re-validate.  ``convex_asserted`` is a user claim, never checked.
    """

    n: int
    d: int
    coeffs: Mapping[Key, complex] = field(default_factory=dict)
    convex_asserted: bool = False

    @property
    def flags(self) -> FormFlags:
        return FormFlags(square_free=is_square_free(self), convex_asserted=self.convex_asserted)

    def __call__(self, x) -> float:
        return eval_form(self, x)

    def with_convex_flag(self, flag: bool = True) -> "ConjugateForm":
        return ConjugateForm(self.n, self.d, dict(self.coeffs), convex_asserted=flag)

    def __repr__(self) -> str:
        return f"ConjugateForm(n={self.n}, d={self.d}, terms={len(self.coeffs)}, convex_asserted={self.convex_asserted})"


def _canonical_key(key, n: int, d: int) -> Key:
    try:
        I, J = key
    except (TypeError, ValueError):
        raise ParameterError(f"coefficient key must be a pair (I, J), got {key!r}") from None
    I = tuple(sorted(int(i) for i in I))
    J = tuple(sorted(int(j) for j in J))
    for i in I + J:
        if not 1 <= i <= n:
            raise FormIndexError(f"index {i} in key {(I, J)} outside 1..{n}")
    if len(I) + len(J) != d:
        raise ParameterError(f"key {(I, J)} has degree {len(I) + len(J)}, expected {d}")
    return I, J


def form_from_coefficients(
    n: int, d: int, coeffs: Mapping | Iterable = (), convex_asserted: bool = False
) -> ConjugateForm:
    """Validate a coefficient map and return a :class:`ConjugateForm`.

    ``coeffs`` maps ``(I, J)`` pairs (any iterables of 1-based indices) to
    complex numbers, or is an iterable of ``((I, J), value)`` items.  Keys that
    normalise to the same sorted pair are summed.  Exact zeros are dropped.

    Raises
    ------
    RealValuednessError
        At the first key (in sorted order) whose mirror ``(J, I)`` does not
        carry exactly the conjugate coefficient.
    FormIndexError
        If an index falls outside ``1..n``.
    """
    if n < 1 or d < 1:
        raise ParameterError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
    merged: dict[Key, complex] = {}
    for key, value in items:
        k = _canonical_key(key, n, d)
        merged[k] = merged.get(k, 0j) + complex(value)
    for key in sorted(merged):
        I, J = key
        mirror = (J, I)
        a = merged[key]
        b = merged.get(mirror, 0j)
        if a != b.conjugate():
            raise RealValuednessError(
                f"coefficient of {key} is {a}, but its mirror {mirror} has {b} (expected {a.conjugate()})",
                key=key,
                mirror=mirror,
            )
    clean = {k: v for k, v in sorted(merged.items()) if v != 0}
    return ConjugateForm(n, d, clean, convex_asserted=convex_asserted)


def zero_form(n: int, d: int) -> ConjugateForm:
    return ConjugateForm(n, d, {})


def _check_point(g: ConjugateForm, x) -> np.ndarray:
    x = as_vector(x)
    if x.shape[0] != g.n:
        raise DimensionError(f"form has n={g.n} variables, point has {x.shape[0]}")
    return x


def eval_form_complex(g: ConjugateForm, x) -> complex:
    """Raw complex sum of the monomials (imaginary part should be round-off only)."""
    x = _check_point(g, x)
    total = 0j
    for (I, J), a in g.coeffs.items():
        conj_part = np.prod(x[[i - 1 for i in I]]) if I else 1.0
        plain_part = np.prod(x[[j - 1 for j in J]]) if J else 1.0
        total += a * np.conj(conj_part) * plain_part
    return complex(total)


def _real_checked(z, what: str = "form"):
    re = np.real(z)
    im = np.imag(z)
    bad = np.abs(im) > RESIDUE_TOL * (1.0 + np.abs(re))
    if np.any(bad):
        worst = float(np.max(np.abs(im)))
        raise ImaginaryResidueError(f"{what} evaluation left imaginary residue {worst:.3e}")
    return re


def eval_form(g: ConjugateForm, x) -> float:
    return float(_real_checked(eval_form_complex(g, x)))


def eval_form_batch(g: ConjugateForm, X, check: bool = True) -> np.ndarray:
    """Evaluate ``g`` at every row of ``X`` (shape ``(B, n)``) from the coefficients."""
    X = np.atleast_2d(np.asarray(X, dtype=np.complex128))
    if X.shape[1] != g.n:
        raise DimensionError(f"form has n={g.n} variables, points have {X.shape[1]}")
    total = np.zeros(X.shape[0], dtype=np.complex128)
    conjX = np.conj(X)
    for (I, J), a in g.coeffs.items():
        term = np.full(X.shape[0], a, dtype=np.complex128)
        for i in I:
            term *= conjX[:, i - 1]
        for j in J:
            term *= X[:, j - 1]
        total += term
    return _real_checked(total) if check else total


def stacked(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    return np.concatenate([np.conj(x), x], axis=-1)


def form_to_tensor(g: ConjugateForm) -> np.ndarray:
    """Conjugate super-symmetric ``(2n)^d`` tensor with ``G(s, ..., s) == g(x)``.

    Each coefficient is split evenly over the distinct permutations of its
    index word (conjugated index ``i`` -> position ``i-1``, plain index ``j``
    -> position ``j-1+n``).
    """
    n, d = g.n, g.d
    G = np.zeros((2 * n,) * d, dtype=np.complex128)
    for (I, J), a in g.coeffs.items():
        word = [i - 1 for i in I] + [j - 1 + n for j in J]
        perms = distinct_permutations(word)
        share = a / len(perms)
        for p in perms:
            G[p] = share
    return G


def _orbit_size(word: tuple[int, ...]) -> int:
    size = math.factorial(len(word))
    for c in Counter(word).values():
        size //= math.factorial(c)
    return size


def tensor_to_form(G, n: int, tol: float | None = None) -> ConjugateForm:
    """Inverse of :func:`form_to_tensor`.

    Coefficients are read from the sorted representative of every index
    orbit; mirror pairs are written as exact conjugates so the result always
    passes validation.
    """
    G = as_tensor(G)
    if not is_conjugate_super_symmetric(G, n, tol):
        raise NotConjugateSuperSymmetric("tensor is not conjugate super-symmetric")
    d = G.ndim
    coeffs: dict[Key, complex] = {}
    for word in itertools.combinations_with_replacement(range(2 * n), d):
        v = complex(G[word])
        if v == 0:
            continue
        I = tuple(t + 1 for t in word if t < n)
        J = tuple(t - n + 1 for t in word if t >= n)
        key, mirror = (I, J), (J, I)
        if key in coeffs:
            continue
        a = v * _orbit_size(word)
        if key == mirror:
            coeffs[key] = complex(a.real)
        elif key < mirror:
            coeffs[key] = a
            coeffs[mirror] = a.conjugate()
        else:
            coeffs[mirror] = a.conjugate()
            coeffs[key] = a
    clean = {k: v for k, v in sorted(coeffs.items()) if v != 0}
    return ConjugateForm(n, d, clean)


def eval_conjugate_tensor(G, x) -> float:
    """``G((conj x; x), ..., (conj x; x))`` with the imaginary-residue check."""
    G = as_tensor(G)
    x = as_vector(x)
    n = x.shape[0]
    if any(s != 2 * n for s in G.shape):
        raise ShapeError(f"tensor shape {G.shape} does not match 2n = {2 * n}")
    s = stacked(x)
    z = eval_multilinear(G, [s] * G.ndim)
    return float(_real_checked(z, "tensor"))


def is_square_free(g: ConjugateForm) -> bool:
    for I, J in g.coeffs:
        word = I + J
        if len(set(word)) != len(word):
            return False
    return True


def extract_linear_coefficient(g: ConjugateForm, x, i: int) -> tuple[complex, float]:
    """Write ``g`` as ``2 Re(t p1) + p3`` in the single variable ``x_i = t``.

    Uses three evaluations at ``t = 0, 1, 1j``.  Requires ``x_i`` and its
    conjugate to appear at most once in every monomial.
    """
    x = _check_point(g, x)
    if not 1 <= i <= g.n:
        raise FormIndexError(f"variable index {i} outside 1..{g.n}")
    for I, J in g.coeffs:
        if I.count(i) + J.count(i) > 1:
            raise NotSquareFreeInVariable(f"variable {i} appears more than once in monomial {(I, J)}")
    y = x.copy()

    def p(t):
        y[i - 1] = t
        return eval_form(g, y)

    p3 = p(0.0)
    re = (p(1.0) - p3) / 2.0
    im = (p3 - p(1j)) / 2.0
    return complex(re, im), p3


# --------------------------------------------------------------------------
# algebra on forms, used to build structured instances


def add_forms(*forms: ConjugateForm) -> ConjugateForm:
    n, d = forms[0].n, forms[0].d
    acc: dict[Key, complex] = {}
    for f in forms:
        if (f.n, f.d) != (n, d):
            raise ParameterError("forms must share n and d")
        for k, v in f.coeffs.items():
            acc[k] = acc.get(k, 0j) + v
    return ConjugateForm(n, d, {k: v for k, v in sorted(acc.items()) if v != 0})


def scale_form(g: ConjugateForm, c: float) -> ConjugateForm:
    c = float(c)
    return ConjugateForm(g.n, g.d, {k: c * v for k, v in g.coeffs.items() if c != 0}, g.convex_asserted and c > 0)


def multiply_forms(f: ConjugateForm, h: ConjugateForm) -> ConjugateForm:
    """Product of two real-valued forms (again real-valued, degree adds)."""
    if f.n != h.n:
        raise ParameterError("forms must share n")
    acc: dict[Key, complex] = {}
    for (I1, J1), a in f.coeffs.items():
        for (I2, J2), b in h.coeffs.items():
            key = (tuple(sorted(I1 + I2)), tuple(sorted(J1 + J2)))
            acc[key] = acc.get(key, 0j) + a * b
    # summation order can break the exact conj pairing by one ulp; restore it
    out: dict[Key, complex] = {}
    for key in sorted(acc):
        I, J = key
        mirror = (J, I)
        if key == mirror:
            out[key] = complex(acc[key].real)
        elif key < mirror:
            out[key] = acc[key]
            out[mirror] = acc[key].conjugate()
    return ConjugateForm(f.n, f.d + h.d, {k: v for k, v in sorted(out.items()) if v != 0})


def power_form(g: ConjugateForm, p: int) -> ConjugateForm:
    out = g
    for _ in range(p - 1):
        out = multiply_forms(out, g)
    return out


def hermitian_quadratic_form(Q) -> ConjugateForm:
    """``x^H Q x`` for a Hermitian matrix ``Q``."""
    Q = np.asarray(Q, dtype=np.complex128)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ShapeError(f"Q must be square, got {Q.shape}")
    Q = (Q + Q.conj().T) / 2
    n = Q.shape[0]
    coeffs = {}
    for i in range(n):
        coeffs[((i + 1,), (i + 1,))] = complex(Q[i, i].real)
        for j in range(i + 1, n):
            coeffs[((i + 1,), (j + 1,))] = complex(Q[i, j])
            coeffs[((j + 1,), (i + 1,))] = complex(Q[i, j]).conjugate()
    return form_from_coefficients(n, 2, coeffs)


def norm_power_form(n: int, d: int) -> ConjugateForm:
    """``(conj(x)^T x)^(d/2) = ||x||_2^d`` for even ``d``."""
    if d % 2:
        raise ParameterError(f"norm power form needs even degree, got {d}")
    return power_form(hermitian_quadratic_form(np.eye(n)), d // 2)


# --------------------------------------------------------------------------
# JSON: {"n": int, "d": int, "terms": [{"conj": [...], "plain": [...], "re": f, "im": f}]}


def form_to_json(g: ConjugateForm) -> dict:
    terms = [
        {"conj": list(I), "plain": list(J), "re": float(a.real), "im": float(a.imag)}
        for (I, J), a in sorted(g.coeffs.items())
    ]
    out = {"n": g.n, "d": g.d, "terms": terms}
    if g.convex_asserted:
        out["convex"] = True
    return out


def form_from_json(obj: Mapping) -> ConjugateForm:
    items = [
        ((t.get("conj", []), t.get("plain", [])), complex(t.get("re", 0.0), t.get("im", 0.0)))
        for t in obj.get("terms", [])
    ]
    return form_from_coefficients(int(obj["n"]), int(obj["d"]), items, convex_asserted=bool(obj.get("convex", False)))


def load_form(path) -> ConjugateForm:
    with open(path) as fh:
        return form_from_json(json.load(fh))


def dump_form(g: ConjugateForm, path) -> None:
    with open(path, "w") as fh:
        json.dump(form_to_json(g), fh, indent=1)
