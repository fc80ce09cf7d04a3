"""Dense complex tensors and the multilinear forms they induce.

Tensors are plain ``numpy`` arrays of dtype ``complex128``; an order-``d``
tensor over ``n_1 x ... x n_d`` is an array of that shape.  Everything the
public API exposes about *positions* (entry indices in JSON, slot numbers in
:func:`contract`) is 1-based.
"""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Mapping, Sequence

import numpy as np

from .errors import DimensionError, ShapeError

__all__ = [
    "as_tensor",
    "as_vector",
    "eval_multilinear",
    "eval_diagonal_batch",
    "symmetrize",
    "is_symmetric",
    "is_conjugate_super_symmetric",
    "contract",
    "distinct_permutations",
    "tensor_to_json",
    "tensor_from_json",
    "load_tensor",
    "dump_tensor",
]


def as_tensor(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.complex128)
    if arr.ndim < 1:
        raise ShapeError("a tensor needs order d >= 1")
    if any(n < 1 for n in arr.shape):
        raise ShapeError(f"all dimensions must be positive, got {arr.shape}")
    return arr


def as_vector(data) -> np.ndarray:
    vec = np.asarray(data, dtype=np.complex128)
    if vec.ndim != 1:
        raise DimensionError(f"expected a 1-d vector, got shape {vec.shape}")
    return vec


def _check_args(F: np.ndarray, xs: Sequence) -> list[np.ndarray]:
    if len(xs) != F.ndim:
        raise DimensionError(f"tensor of order {F.ndim} needs {F.ndim} vectors, got {len(xs)}")
    out = []
    for k, x in enumerate(xs, start=1):
        v = as_vector(x)
        if v.shape[0] != F.shape[k - 1]:
            raise DimensionError(
                f"slot {k}: expected dimension {F.shape[k - 1]}, got {v.shape[0]}", slot=k
            )
        out.append(v)
    return out


def eval_multilinear(F, xs: Sequence) -> complex:
    """Evaluate ``F(x^1, ..., x^d) = sum F[i1..id] x^1[i1] ... x^d[id]``.

    Raises
    ------
    DimensionError
        If the number of vectors or any vector length disagrees with ``F``;
        the offending 1-based slot is stored on ``err.slot``.
    """
    F = as_tensor(F)
    vecs = _check_args(F, xs)
    T = F
    for v in reversed(vecs):
        T = T @ v
    return complex(T)


def eval_diagonal_batch(F: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Evaluate ``F(s, s, ..., s)`` for every row ``s`` of ``S`` (shape ``(B, N)``).

    ``F`` must be cubical with side ``N``.  Returns a complex array of length ``B``.
    """
    S = np.atleast_2d(S)
    T = np.tensordot(S, F, axes=([1], [0]))
    for _ in range(F.ndim - 1):
        T = np.einsum("bi,bi...->b...", S, T)
    return T


def distinct_permutations(word: Sequence[int]) -> list[tuple[int, ...]]:
    """All distinct orderings of ``word`` (a multiset), in lexicographic order."""
    return sorted(set(itertools.permutations(word)))


def symmetrize(F) -> np.ndarray:
    """Average ``F`` over all ``d!`` permutations of its axes.

    Each entry becomes the mean of the entries at the permuted index tuples,
    so a coefficient placed at one position of a multiset orbit is spread
    evenly over the whole orbit.
    """
    F = as_tensor(F)
    if len(set(F.shape)) != 1:
        raise ShapeError(f"symmetrize needs a cubical tensor, got shape {F.shape}")
    d = F.ndim
    acc = np.zeros_like(F)
    for perm in itertools.permutations(range(d)):
        acc += np.transpose(F, perm)
    return acc / math.factorial(d)


def _default_tol(F: np.ndarray, tol: float | None) -> float:
    if tol is not None:
        return tol
    scale = float(np.max(np.abs(F))) if F.size else 0.0
    return 1e-9 * scale


def is_symmetric(F, tol: float | None = None) -> bool:
    F = as_tensor(F)
    if len(set(F.shape)) != 1:
        return False
    tol = _default_tol(F, tol)
    for perm in itertools.permutations(range(F.ndim)):
        if np.max(np.abs(F - np.transpose(F, perm))) > tol:
            return False
    return True


def is_conjugate_super_symmetric(G, n: int, tol: float | None = None) -> bool:
    """Check permutation symmetry plus the n-shift conjugation rule.

    The second condition pairs index ``t`` with ``t +/- n`` in every slot, i.e.
    ``G == conj(roll(G, n))`` along all axes simultaneously.  ``tol`` defaults
    to ``1e-9 * max|G|``.
    """
    G = as_tensor(G)
    if any(s != 2 * n for s in G.shape):
        raise ShapeError(f"expected every dimension equal to 2n = {2 * n}, got {G.shape}")
    tol = _default_tol(G, tol)
    if not is_symmetric(G, tol):
        return False
    shifted = np.roll(G, n, axis=tuple(range(G.ndim)))
    return bool(np.max(np.abs(G - np.conj(shifted))) <= tol)


def contract(F, fixed: Mapping[int, object]) -> np.ndarray:
    """Sum the slots listed in ``fixed`` (1-based) against the given vectors.

    The result has order ``d - len(fixed)``; the remaining slots keep their
    relative order.  Fixing every slot yields a 0-d array holding the value of
    :func:`eval_multilinear`.
    """
    F = as_tensor(F)
    d = F.ndim
    vecs = {}
    for slot, x in fixed.items():
        if not isinstance(slot, (int, np.integer)) or not 1 <= slot <= d:
            raise DimensionError(f"slot {slot} out of range 1..{d}", slot=slot)
        v = as_vector(x)
        if v.shape[0] != F.shape[slot - 1]:
            raise DimensionError(
                f"slot {slot}: expected dimension {F.shape[slot - 1]}, got {v.shape[0]}",
                slot=slot,
            )
        vecs[int(slot)] = v
    T = F
    # descending order keeps the remaining axis numbers valid
    for slot in sorted(vecs, reverse=True):
        T = np.tensordot(T, vecs[slot], axes=([slot - 1], [0]))
    return np.asarray(T)


# --------------------------------------------------------------------------
# JSON: {"dims": [...], "entries": [{"idx": [i1, ..., id], "re": f, "im": f}]}


def tensor_to_json(F) -> dict:
    F = as_tensor(F)
    entries = []
    for idx in zip(*np.nonzero(F)):
        z = F[idx]
        entries.append({"idx": [int(i) + 1 for i in idx], "re": float(z.real), "im": float(z.imag)})
    return {"dims": list(F.shape), "entries": entries}


def tensor_from_json(obj: Mapping) -> np.ndarray:
    dims = [int(n) for n in obj["dims"]]
    if not dims or any(n < 1 for n in dims):
        raise ShapeError(f"invalid dims {dims}")
    F = np.zeros(dims, dtype=np.complex128)
    seen = set()
    for e in obj.get("entries", []):
        idx = tuple(int(i) for i in e["idx"])
        if len(idx) != len(dims):
            raise DimensionError(f"entry index {list(idx)} has wrong length for dims {dims}")
        for k, (i, n) in enumerate(zip(idx, dims), start=1):
            if not 1 <= i <= n:
                raise DimensionError(f"entry index {list(idx)} out of range in slot {k}", slot=k)
        if idx in seen:
            raise ValueError(f"duplicate entry index {list(idx)}")
        seen.add(idx)
        F[tuple(i - 1 for i in idx)] = complex(e.get("re", 0.0), e.get("im", 0.0))
    return F


def load_tensor(path) -> np.ndarray:
    with open(path) as fh:
        return tensor_from_json(json.load(fh))


def dump_tensor(F, path) -> None:
    with open(path, "w") as fh:
        json.dump(tensor_to_json(F), fh, indent=1)
