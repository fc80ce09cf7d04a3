"""Polarization vectors and exact/Monte-Carlo checks of the polarization identity.

For a conjugate super-symmetric ``G`` of order ``d`` and vectors
``x^1..x^d, y^1..y^d`` in ``C^n``, with ``xi_k`` i.i.d. uniform on Omega_m::

    E[ conj(prod xi_k) * g( sum_k conj(xi_k x^k) + xi_k y^k ) ]
        = d! * G((x^1; y^1), ..., (x^d; y^d))
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence

import numpy as np

from .conjugate_forms import ConjugateForm, form_to_tensor, stacked
from .errors import DimensionError, EnumerationTooLarge, ParameterError
from .sampling import as_generator, check_m, is_circle, root_table, sample_circle
from .tensor_core import as_tensor, eval_diagonal_batch, eval_multilinear

ENUMERATION_LOG_GUARD = 25.0

__all__ = [
    "build_u",
    "build_v",
    "build_v_batch",
    "in_conv_roots",
    "polarization_rhs",
    "polarization_residual",
    "polarization_sample",
    "xi_tuples",
]


def _stack_args(xs: Sequence, ys: Sequence) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(xs, dtype=np.complex128)
    Y = np.asarray(ys, dtype=np.complex128)
    if X.ndim != 2 or X.shape != Y.shape:
        raise DimensionError(f"xs and ys must be d vectors of equal length, got {X.shape} and {Y.shape}")
    return X, Y


def build_v(xs, ys, xi) -> np.ndarray:
    """``sum_k conj(xi_k x^k) + xi_k y^k`` (unscaled)."""
    X, Y = _stack_args(xs, ys)
    xi = np.asarray(xi, dtype=np.complex128).ravel()
    if xi.shape[0] != X.shape[0]:
        raise DimensionError(f"need {X.shape[0]} phases, got {xi.shape[0]}")
    return np.conj(xi) @ np.conj(X) + xi @ Y


def build_u(xs, ys, xi) -> np.ndarray:
    """``build_v(...) / (2d)``; stays in conv(Omega_m)^n when all inputs lie in Omega_m."""
    d = len(xs)
    return build_v(xs, ys, xi) / (2 * d)


def build_v_batch(X: np.ndarray, Y: np.ndarray, XI: np.ndarray) -> np.ndarray:
    """Vectorised :func:`build_v` over the rows of ``XI`` (shape ``(B, d)``)."""
    return np.conj(XI) @ np.conj(X) + XI @ Y


def in_conv_roots(z, m, tol: float = 1e-12) -> np.ndarray:
    """Elementwise membership in conv(Omega_m) (closed unit disc for m = inf).

    For finite m the hull is the regular m-gon; ``z`` is inside when it lies
    on the inner side of all m supporting lines ``Re(z e^{-i(2k+1)pi/m}) <= cos(pi/m)``.
    """
    m = check_m(m)
    z = np.asarray(z, dtype=np.complex128)
    if is_circle(m):
        return np.abs(z) <= 1.0 + tol
    normals = np.exp(-1j * np.pi * (2 * np.arange(m) + 1) / m)
    proj = np.real(z[..., None] * normals)
    return np.all(proj <= math.cos(math.pi / m) + tol, axis=-1)


def xi_tuples(m: int, d: int) -> np.ndarray:
    """All ``m^d`` tuples of m-th roots of unity, shape ``(m^d, d)``."""
    roots = root_table(m)
    idx = np.array(list(itertools.product(range(m), repeat=d)), dtype=np.intp).reshape(-1, d)
    return roots[idx]


def polarization_rhs(G, xs, ys) -> complex:
    G = as_tensor(G)
    X, Y = _stack_args(xs, ys)
    d = G.ndim
    Z = [np.concatenate([X[k], Y[k]]) for k in range(d)]
    return math.factorial(d) * eval_multilinear(G, Z)


def _as_tensor_arg(G) -> np.ndarray:
    if isinstance(G, ConjugateForm):
        return form_to_tensor(G)
    return as_tensor(G)


def polarization_residual(G, xs, ys, m: int) -> float:
    """Exact check of the identity by enumerating all ``m^d`` phase tuples.

    Returns ``|LHS - RHS| / (1 + |RHS|)``.
    """
    G = _as_tensor_arg(G)
    m = check_m(m)
    if is_circle(m):
        raise ParameterError("exact enumeration needs a finite m")
    d = G.ndim
    if d * math.log(m) > ENUMERATION_LOG_GUARD:
        raise EnumerationTooLarge(f"m^d = {m}^{d} exceeds the enumeration guard")
    X, Y = _stack_args(xs, ys)
    if X.shape[0] != d:
        raise DimensionError(f"tensor of order {d} needs {d} vector pairs, got {X.shape[0]}")
    XI = xi_tuples(m, d)
    V = build_v_batch(X, Y, XI)
    gv = eval_diagonal_batch(G, stacked(V))
    weights = np.prod(np.conj(XI), axis=1)
    lhs = complex(np.mean(weights * gv))
    rhs = polarization_rhs(G, X, Y)
    return abs(lhs - rhs) / (1.0 + abs(rhs))


def polarization_sample(G, xs, ys, m, samples: int, rng) -> float:
    """Monte Carlo version (any m, including inf); returns a standardized deviation.

    The statistic is the larger of the real- and imaginary-part z-scores of
    the sample mean against the exact right-hand side.
    """
    G = _as_tensor_arg(G)
    m = check_m(m)
    if samples < 10_000:
        raise ParameterError(f"need at least 10^4 samples, got {samples}")
    rng = as_generator(rng)
    X, Y = _stack_args(xs, ys)
    d = G.ndim
    if X.shape[0] != d:
        raise DimensionError(f"tensor of order {d} needs {d} vector pairs, got {X.shape[0]}")
    chunk = 1 << 14
    vals = []
    done = 0
    while done < samples:
        b = min(chunk, samples - done)
        if is_circle(m):
            XI = sample_circle(d, rng, size=b)
        else:
            XI = root_table(m)[rng.integers(m, size=(b, d))]
        V = build_v_batch(X, Y, XI)
        vals.append(np.prod(np.conj(XI), axis=1) * eval_diagonal_batch(G, stacked(V)))
        done += b
    w = np.concatenate(vals)
    rhs = polarization_rhs(G, X, Y)
    diff = np.mean(w) - rhs
    z = 0.0
    for part, comp in ((diff.real, w.real), (diff.imag, w.imag)):
        se = np.std(comp) / math.sqrt(samples)
        if se > 0:
            z = max(z, abs(part) / se)
        elif abs(part) > 1e-12 * (1.0 + abs(rhs)):
            return math.inf
    return float(z)
