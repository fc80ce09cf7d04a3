"""Reference optimizers used to certify approximation ratios at desk scale.

Enumeration over Omega_m is exact.  The continuous models (sphere, circle)
only get a multi-start local search, which yields a lower bound on v_max
and an upper bound on v_min.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conjugate_forms import ConjugateForm, eval_form, eval_form_batch, form_to_tensor, stacked
from .errors import EnumerationTooLarge, ParameterError
from .multilinear_solvers import best_response_roots, vector_to_json
from .sampling import Sphere, UnitCircle, as_generator, check_m, is_circle, root_table, sample_circle, sample_sphere
from .tensor_core import as_tensor, eval_multilinear

ORACLE_GUARD = 10**7
CHUNK = 1 << 15

__all__ = [
    "OracleResult",
    "brute_force_form_roots",
    "brute_force_multilinear_roots",
    "multistart_reference",
]


@dataclass
class OracleResult:
    v_max: float
    v_min: float
    argmax: object
    argmin: object
    exact: bool

    def to_dict(self) -> dict:
        def enc(sol):
            if isinstance(sol, list):
                return [vector_to_json(v) for v in sol]
            return vector_to_json(sol)

        return {
            "v_max": self.v_max,
            "v_min": self.v_min,
            "argmax": enc(self.argmax),
            "argmin": enc(self.argmin),
            "exact": self.exact,
        }


def _digits(start: int, stop: int, m: int, width: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, width), dtype=np.int64)
    for j in range(width - 1, -1, -1):
        out[:, j] = idx % m
        idx //= m
    return out


def _finite_m(m) -> int:
    m = check_m(m)
    if is_circle(m):
        raise ParameterError("enumeration needs a finite m")
    return int(m)


def brute_force_form_roots(g: ConjugateForm, m, guard: int = ORACLE_GUARD) -> OracleResult:
    """Exact max and min of ``g`` over Omega_m^n (first enumerated point wins ties)."""
    m = _finite_m(m)
    total = m**g.n
    if total > guard:
        raise EnumerationTooLarge(f"m^n = {m}^{g.n} exceeds the guard {guard}")
    roots = root_table(m)
    best = (-np.inf, None)
    worst = (np.inf, None)
    for start in range(0, total, CHUNK):
        X = roots[_digits(start, min(total, start + CHUNK), m, g.n)]
        vals = eval_form_batch(g, X)
        i, j = int(np.argmax(vals)), int(np.argmin(vals))
        if vals[i] > best[0]:
            best = (float(vals[i]), X[i])
        if vals[j] < worst[0]:
            worst = (float(vals[j]), X[j])
    return OracleResult(best[0], worst[0], best[1], worst[1], True)


def _kron_rows(parts: list[np.ndarray]) -> np.ndarray:
    P = parts[0]
    for Q in parts[1:]:
        P = (P[:, :, None] * Q[:, None, :]).reshape(P.shape[0], -1)
    return P


def brute_force_multilinear_roots(F, m, guard: int = ORACLE_GUARD) -> OracleResult:
    """Exact max and min of ``Re F`` over products of Omega_m.

    All slots but the last are enumerated; the last slot is optimised
    coordinate by coordinate in closed form.
    """
    m = _finite_m(m)
    F = as_tensor(F)
    dims = F.shape
    head = dims[:-1]
    width = sum(head)
    total = m**width
    if total > guard:
        raise EnumerationTooLarge(f"m^{width} enumerations exceed the guard {guard}")
    roots = root_table(m)
    Fmat = F.reshape(-1, dims[-1])
    cuts = np.cumsum((0,) + head)
    best = (-np.inf, None)
    worst = (np.inf, None)
    for start in range(0, total, CHUNK):
        stop = min(total, start + CHUNK)
        X = roots[_digits(start, stop, m, width)] if width else np.ones((1, 0), dtype=np.complex128)
        parts = [X[:, cuts[k] : cuts[k + 1]] for k in range(len(head))]
        W = _kron_rows(parts) @ Fmat if parts else np.repeat(Fmat, 1, axis=0)
        y_hi, v_hi = best_response_roots(W, m)
        y_lo, v_lo = best_response_roots(-W, m)
        v_lo = -v_lo
        i, j = int(np.argmax(v_hi)), int(np.argmin(v_lo))
        if v_hi[i] > best[0]:
            best = (float(v_hi[i]), [p[i] for p in parts] + [y_hi[i]])
        if v_lo[j] < worst[0]:
            worst = (float(v_lo[j]), [p[j] for p in parts] + [y_lo[j]])
    return OracleResult(best[0], worst[0], best[1], worst[1], True)


# --------------------------------------------------------------------------
# multi-start local search for the continuous models


def _constraint_kind(constraint) -> str:
    if isinstance(constraint, Sphere) or constraint == "sphere":
        return "sphere"
    if isinstance(constraint, UnitCircle) or constraint in ("circle", "inf"):
        return "circle"
    raise ParameterError(f"multistart_reference supports the sphere and the circle, got {constraint!r}")


def _project(X: np.ndarray, kind: str) -> np.ndarray:
    if kind == "sphere":
        return X / np.linalg.norm(X, axis=-1, keepdims=True)
    mag = np.abs(X)
    return np.where(mag > 0, X / np.where(mag > 0, mag, 1.0), 1.0 + 0j)


def _random_feasible(kind: str, n: int, rng, size: int) -> np.ndarray:
    if kind == "sphere":
        return sample_sphere(n, rng, size=size)
    return sample_circle(n, rng, size=size)


def _partial_batch(G: np.ndarray, S: np.ndarray) -> np.ndarray:
    """``G(s, ..., s, .)`` for every row ``s`` of ``S``; shape ``(B, 2n)``."""
    if G.ndim == 1:
        return np.broadcast_to(G, S.shape)
    T = np.tensordot(S, G, axes=([1], [0]))
    for _ in range(G.ndim - 2):
        T = np.einsum("bi,bi...->b...", S, T)
    return T


def _ascend_form(g: ConjugateForm, G: np.ndarray, X: np.ndarray, kind: str, iters: int, step: float):
    """Projected gradient ascent with per-start step halving; never accepts a decrease.

    A start retires once an accepted step gains less than ``1e-13`` relative
    or its step has collapsed.
    """
    n, d = g.n, g.d
    X = X.copy()
    vals = eval_form_batch(g, X, check=False).real
    steps = np.full(X.shape[0], step)
    active = np.arange(X.shape[0])
    for _ in range(iters):
        if active.size == 0:
            break
        Xa, va, sa = X[active], vals[active], steps[active]
        direction = 2 * d * _partial_batch(G, stacked(Xa))[:, :n]
        X_new = _project(Xa + sa[:, None] * direction, kind)
        new_vals = eval_form_batch(g, X_new, check=False).real
        ok = new_vals >= va
        X[active[ok]] = X_new[ok]
        vals[active[ok]] = new_vals[ok]
        steps[active[~ok]] = sa[~ok] / 2
        stalled = ok & (new_vals - va <= 1e-13 * (1 + np.abs(va)))
        active = active[~stalled & (steps[active] >= 1e-12)]
    return X, vals


def _form_reference(g: ConjugateForm, kind: str, starts: int, rng, iters: int, step: float) -> OracleResult:
    G = form_to_tensor(g)
    neg = ConjugateForm(g.n, g.d, {k: -v for k, v in g.coeffs.items()})
    X0 = _random_feasible(kind, g.n, rng, starts)
    Xmax, vmax = _ascend_form(g, G, X0, kind, iters, step)
    Xmin, vneg = _ascend_form(neg, -G, X0.copy(), kind, iters, step)
    i, j = int(np.argmax(vmax)), int(np.argmax(vneg))
    xmax, xmin = Xmax[i], Xmin[j]
    return OracleResult(eval_form(g, xmax), eval_form(g, xmin), xmax, xmin, False)


def _slot_update(W: np.ndarray, kind: str) -> np.ndarray:
    """Row-wise maximiser of ``Re(w^T x)`` over the slot's feasible set."""
    if kind == "sphere":
        nrm = np.linalg.norm(W, axis=1, keepdims=True)
        e1 = np.zeros_like(W)
        e1[:, 0] = 1.0
        return np.where(nrm > 0, np.conj(W) / np.where(nrm > 0, nrm, 1.0), e1)
    mag = np.abs(W)
    return np.where(mag > 0, np.conj(W) / np.where(mag > 0, mag, 1.0), 1.0 + 0j)


def _batch_values(F: np.ndarray, Xs: list[np.ndarray]) -> np.ndarray:
    d = F.ndim
    ops = [F, list(range(d))]
    for k, X in enumerate(Xs):
        ops += [X, [d, k]]
    return np.real(np.einsum(*ops, [d], optimize=True))


def _batch_partial(F: np.ndarray, Xs: list[np.ndarray], k: int) -> np.ndarray:
    """``F`` contracted with every slot except ``k``, one row per start."""
    d = F.ndim
    ops = [F, list(range(d))]
    for j, X in enumerate(Xs):
        if j != k:
            ops += [X, [d, j]]
    return np.einsum(*ops, [d, k], optimize=True)


def _ascend_tensor(F: np.ndarray, Xs: list[np.ndarray], kind: str, iters: int, tol: float = 1e-13):
    """Exact alternating slot updates for all starts at once; each sweep is monotone."""
    vals = _batch_values(F, Xs)
    for _ in range(iters):
        for k in range(F.ndim):
            Xs[k] = _slot_update(_batch_partial(F, Xs, k), kind)
        new = _batch_values(F, Xs)
        done = np.all(new - vals <= tol * (1 + np.abs(vals)))
        vals = np.maximum(vals, new)
        if done:
            break
    return Xs, vals


def _tensor_reference(F: np.ndarray, kind: str, starts: int, rng, iters: int) -> OracleResult:
    X0 = [_random_feasible(kind, n, rng, starts) for n in F.shape]
    Xhi, vhi = _ascend_tensor(F, [X.copy() for X in X0], kind, iters)
    Xlo, vlo = _ascend_tensor(-F, [X.copy() for X in X0], kind, iters)
    i, j = int(np.argmax(vhi)), int(np.argmax(vlo))
    best = [X[i] for X in Xhi]
    worst = [X[j] for X in Xlo]
    vmax = float(np.real(eval_multilinear(F, best)))
    vmin = float(np.real(eval_multilinear(F, worst)))
    return OracleResult(vmax, vmin, best, worst, False)


def multistart_reference(
    objective,
    constraint,
    starts: int = 100,
    rng=0,
    iters: int = 500,
    step: float = 0.1,
) -> OracleResult:
    """Best and worst values found by local search from ``starts`` random feasible points.

    ``objective`` is a :class:`ConjugateForm` (projected Wirtinger gradient
    ascent) or a tensor (exact alternating slot updates of ``Re F``).
    ``constraint`` is a :class:`Sphere` / :class:`UnitCircle` or the strings
    ``"sphere"`` / ``"circle"``.  For tensors the constraint applies to every slot.
    """
    if starts < 100:
        raise ParameterError(f"need at least 100 starts, got {starts}")
    kind = _constraint_kind(constraint)
    rng = as_generator(rng)
    if isinstance(objective, ConjugateForm):
        return _form_reference(objective, kind, starts, rng, iters, step)
    return _tensor_reference(as_tensor(objective), kind, starts, rng, min(iters, 200))
