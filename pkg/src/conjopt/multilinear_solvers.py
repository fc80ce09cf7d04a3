"""Randomized approximation of ``max Re F(x^1, ..., x^d)`` over products of
roots of unity, unit circles or unit spheres.

Both solvers follow the same recursion-free scheme: draw the first ``d - 2``
slots at random from the feasible set, solve the remaining bilinear problem,
and keep the best of many independent trials.  Slots are processed in
ascending order of dimension and the solution is returned in the caller's
slot order.
"""

from __future__ import annotations

import math
import time
import warnings
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EnumerationTooLarge, ParameterError, ZeroMatrix
from .sampling import (
    INF,
    RandomSource,
    as_generator,
    c1_log,
    c2,
    check_m,
    is_circle,
    root_table,
    sample_sphere,
    sample_unit_phases,
)
from .tensor_core import as_tensor, contract, eval_multilinear

DEFAULT_GUARD = 10**6
TRIALS_PER_UNIT = 50  # T0 in the practical trial-count rule

__all__ = [
    "ExactEnumeration",
    "AlternatingMaximization",
    "PowerSVD",
    "BaseCaseStrategy",
    "NoConvergenceWarning",
    "SolveReport",
    "c4",
    "ratio_Lm",
    "ratio_LS",
    "default_trials_Lm",
    "default_trials_LS",
    "theory_trials_log_Lm",
    "best_response_roots",
    "best_response_circle",
    "solve_bilinear_roots",
    "solve_bilinear_circle",
    "largest_singular_pair",
    "solve_Lm",
    "solve_LS",
]


class NoConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class ExactEnumeration:
    """Enumerate the smaller side of the bilinear problem; optimal."""

    guard: int = DEFAULT_GUARD


@dataclass(frozen=True)
class AlternatingMaximization:
    """Block-coordinate ascent from several starts; heuristic, no certified ratio.

    With ``svd_start`` the first start is the phase-rounded top singular pair.
    """

    starts: int = 8
    max_iters: int = 200
    tol: float = 1e-12
    svd_start: bool = True


@dataclass(frozen=True)
class PowerSVD:
    """Single start from the phase-rounded top singular pair, then alternating sweeps."""

    tol: float = 1e-12
    max_iters: int = 200


BaseCaseStrategy = ExactEnumeration | AlternatingMaximization | PowerSVD


def strategy_name(strategy) -> str:
    return type(strategy).__name__


@dataclass
class SolveReport:
    """Outcome of a multilinear solve.

    ``ratio_formula_value`` is the worst-case ratio the theory promises for
    this configuration; ``certified`` is true only when the base case was
    solved exactly, which is what the guarantee needs.
    """

    solution: list[np.ndarray]
    value: float
    ratio_formula_value: float
    trials_run: int
    seed: int
    model: str
    m: float | int | None = None
    base_case: str = ""
    certified: bool = False
    ratio_substituted: bool = False
    theory_trials_log: float | None = None
    best_trial: int = 0
    elapsed: float = field(default=0.0, compare=False)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "model": self.model,
            "m": _m_to_json(self.m),
            "value": self.value,
            "ratio_formula_value": self.ratio_formula_value,
            "ratio_substituted": self.ratio_substituted,
            "trials_run": self.trials_run,
            "best_trial": self.best_trial,
            "seed": self.seed,
            "base_case": self.base_case,
            "certified": self.certified,
            "theory_trials_log": self.theory_trials_log,
            "solution": [vector_to_json(x) for x in self.solution],
        }
        if include_timing:
            out["elapsed"] = self.elapsed
        return out


def _m_to_json(m):
    if m is None:
        return None
    return "inf" if is_circle(m) else int(m)


def vector_to_json(x) -> dict:
    x = np.asarray(x, dtype=np.complex128)
    return {"re": [float(v) for v in x.real], "im": [float(v) for v in x.imag]}


# --------------------------------------------------------------------------
# ratio formulas


def c4(m) -> float:
    """Constant ratio of the bilinear base case: ``0.7118 cos^2(pi/m)``."""
    m = check_m(m)
    if is_circle(m):
        return 0.7118
    return 0.7118 * math.cos(math.pi / m) ** 2


def _log_ratio_product(dims: Sequence[int]) -> tuple[float, bool]:
    """``prod_{k <= d-2} ln(n_k) / n_k`` over ascending dims, with n_k = 1 patched to ln 2."""
    dims = sorted(int(n) for n in dims)
    prod = 1.0
    substituted = False
    for n in dims[:-2]:
        if n < 2:
            substituted = True
        prod *= math.log(max(n, 2)) / n
    return prod, substituted


def _check_delta(delta):
    if not 0.0 < delta < 1.0 / 16.0:
        raise ParameterError(f"delta must lie in (0, 1/16), got {delta}")


def _gamma_upper(n1: int) -> float:
    return math.inf if n1 <= 1 else n1 / math.log(n1)


def _check_gamma(gamma, dims):
    n1 = min(dims)
    if not 0.0 < gamma < _gamma_upper(n1):
        raise ParameterError(f"gamma must lie in (0, n1/ln n1) = (0, {_gamma_upper(n1):.4g}), got {gamma}")


def ratio_Lm(dims: Sequence[int], m, delta: float) -> float:
    _check_delta(delta)
    d = len(dims)
    if d < 2:
        raise ParameterError("need d >= 2")
    prod, _ = _log_ratio_product(dims)
    return c4(m) * delta ** ((d - 2) / 2) * math.sqrt(prod)


def ratio_LS(dims: Sequence[int], gamma: float) -> float:
    d = len(dims)
    if d < 2:
        raise ParameterError("need d >= 2")
    _check_gamma(gamma, dims)
    prod, _ = _log_ratio_product(dims)
    return gamma ** ((d - 2) / 2) * math.sqrt(prod)


def default_trials_Lm(dims: Sequence[int], delta: float, epsilon: float) -> int:
    """``ceil(ln(1/eps) prod_{k<=d-2} n_k^(5 delta)) * T0``."""
    dims = sorted(dims)
    core = math.log(1.0 / epsilon) * math.prod(n ** (5 * delta) for n in dims[:-2])
    return max(1, math.ceil(core)) * TRIALS_PER_UNIT


def default_trials_LS(dims: Sequence[int], gamma: float, epsilon: float) -> int:
    """Sphere analogue without the unknown constant: ``ceil(ln(1/eps) prod n_k^(2 gamma) sqrt(ln n_k)) * T0``."""
    dims = sorted(dims)
    core = math.log(1.0 / epsilon) * math.prod(n ** (2 * gamma) * math.sqrt(math.log(max(n, 2))) for n in dims[:-2])
    return max(1, math.ceil(core)) * TRIALS_PER_UNIT


def theory_trials_log_Lm(dims: Sequence[int], m, delta: float, epsilon: float) -> float:
    """Natural log of the trial count the worst-case analysis asks for."""
    dims = sorted(dims)
    d = len(dims)
    return (
        math.log(math.log(1.0 / epsilon))
        + (d - 2) * (math.log(c2(m)) - c1_log(delta))
        + 5 * delta * sum(math.log(n) for n in dims[:-2])
    )


# --------------------------------------------------------------------------
# bilinear base cases:  max Re(x^T A y)


def best_response_roots(w: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate argmax of ``Re(w_j t)`` over the m-th roots (ties -> lowest root index).

    Works on the last axis; returns ``(choice, value)`` with ``value`` summed
    over that axis.
    """
    roots = root_table(m)
    scores = np.real(w[..., None] * roots)
    k = np.argmax(scores, axis=-1)
    return roots[k], np.take_along_axis(scores, k[..., None], axis=-1)[..., 0].sum(axis=-1)


def best_response_circle(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``t_j = exp(-i arg w_j)`` attains ``Re(w_j t_j) = |w_j|``; zero entries get 1."""
    mag = np.abs(w)
    choice = np.where(mag > 0, np.conj(w) / np.where(mag > 0, mag, 1.0), 1.0 + 0j)
    return choice, mag.sum(axis=-1)


def _best_response(w, m):
    return best_response_circle(w) if is_circle(m) else best_response_roots(w, m)


def _digits(start: int, stop: int, m: int, n: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, n), dtype=np.int64)
    for j in range(n - 1, -1, -1):
        out[:, j] = idx % m
        idx //= m
    return out


def _exact_bilinear(A: np.ndarray, m: int, guard: int):
    n1, n2 = A.shape
    if n1 > n2:
        y, x, v = _exact_bilinear(A.T, m, guard)
        return x, y, v
    total = m**n1
    if total > guard:
        raise EnumerationTooLarge(f"m^n = {m}^{n1} exceeds the enumeration guard {guard}")
    roots = root_table(m)
    chunk = max(1, (1 << 18) // max(1, n2 * m))
    best_v, best_x, best_y = -math.inf, None, None
    for start in range(0, total, chunk):
        X = roots[_digits(start, min(total, start + chunk), m, n1)]
        Y, vals = best_response_roots(X @ A, m)
        k = int(np.argmax(vals))
        if vals[k] > best_v:
            best_v, best_x, best_y = float(vals[k]), X[k], Y[k]
    return best_x, best_y, best_v


def _phase_round(z: np.ndarray, m) -> np.ndarray:
    """Nearest point of Omega_m (or the circle) in angle; zero maps to 1."""
    if is_circle(m):
        mag = np.abs(z)
        return np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), 1.0 + 0j)
    roots = root_table(m)
    return roots[np.argmax(np.real(np.conj(z)[:, None] * roots), axis=1)]


def _alternate(A: np.ndarray, m, x: np.ndarray, max_iters: int, tol: float):
    y, value = _best_response(x @ A, m)
    for _ in range(max_iters):
        x_new, _ = _best_response(A @ y, m)
        y_new, v_new = _best_response(x_new @ A, m)
        assert v_new >= value - 1e-12 * (1.0 + abs(value)), "alternating sweep decreased the objective"
        improved = v_new - value > tol * (1.0 + abs(value))
        if v_new > value:
            x, y, value = x_new, y_new, float(v_new)
        if not improved:
            break
    return x, y, float(value)


def _heuristic_bilinear(A: np.ndarray, m, strategy, rng):
    rng = as_generator(rng)
    n1, _ = A.shape
    starts = []
    use_svd = isinstance(strategy, PowerSVD) or strategy.svd_start
    if use_svd and np.any(A != 0):
        _, u, _ = largest_singular_pair(A, rng=rng)
        starts.append(_phase_round(u, m))
    if isinstance(strategy, AlternatingMaximization):
        for _ in range(strategy.starts):
            starts.append(sample_unit_phases(m, n1, rng))
    if not starts:
        starts.append(np.ones(n1, dtype=np.complex128))
    best = None
    for x0 in starts:
        res = _alternate(A, m, x0, strategy.max_iters, strategy.tol)
        if best is None or res[2] > best[2]:
            best = res
    return best


def solve_bilinear_roots(A, m: int, strategy: BaseCaseStrategy | None = None, rng=None):
    """Maximise ``Re(x^T A y)`` over ``x, y`` with entries in the m-th roots of unity.

    Returns ``(x, y, value)``.
    """
    m = check_m(m)
    if is_circle(m):
        raise ParameterError("solve_bilinear_roots needs finite m; use solve_bilinear_circle")
    A = as_tensor(A)
    if A.ndim != 2:
        raise ParameterError(f"A must be a matrix, got order {A.ndim}")
    strategy = strategy or ExactEnumeration()
    if isinstance(strategy, ExactEnumeration):
        return _exact_bilinear(A, m, strategy.guard)
    return _heuristic_bilinear(A, m, strategy, rng)


def solve_bilinear_circle(A, strategy: BaseCaseStrategy | None = None, rng=None):
    """Maximise ``Re(x^T A y)`` over unit-modulus ``x, y`` by alternating closed-form updates."""
    A = as_tensor(A)
    if A.ndim != 2:
        raise ParameterError(f"A must be a matrix, got order {A.ndim}")
    strategy = strategy or AlternatingMaximization()
    if isinstance(strategy, ExactEnumeration):
        raise ParameterError("exact enumeration is impossible on the unit circle")
    return _heuristic_bilinear(A, INF, strategy, rng)


def largest_singular_pair(A, tol: float = 1e-12, max_iters: int = 10_000, rng=None):
    """Top singular triple by power iteration on ``A^H A``.

    Returns ``(sigma, u, v)`` with unit ``u, v`` and ``u^T A v = sigma`` real
    and nonnegative (``u`` is the conjugate of the left singular vector, which
    is what the un-conjugated bilinear form needs).  Emits
    :class:`NoConvergenceWarning` and returns the last iterate when the
    residual test is not met within ``max_iters``.
    """
    A = as_tensor(A)
    if A.ndim != 2:
        raise ParameterError(f"A must be a matrix, got order {A.ndim}")
    if not np.any(A != 0):
        raise ZeroMatrix("largest_singular_pair needs a nonzero matrix")
    rng = as_generator(0 if rng is None else rng)
    M = A.conj().T @ A
    v = sample_sphere(A.shape[1], rng)
    converged = False
    for _ in range(max_iters):
        z = M @ v
        lam = float(np.real(np.vdot(v, z)))
        if np.linalg.norm(z - lam * v) <= tol * max(lam, 1e-300):
            converged = True
            break
        v = z / np.linalg.norm(z)
    if not converged:
        warnings.warn("power iteration did not reach the residual tolerance", NoConvergenceWarning, stacklevel=2)
    w = A @ v
    sigma = float(np.linalg.norm(w))
    u = np.conj(w) / sigma
    return sigma, u, v


# --------------------------------------------------------------------------
# trial loop shared by both models


def _run_trials(trial, trials: int, workers: int):
    if workers <= 1:
        results = [trial(k) for k in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(trial, range(trials)))
    best_k = 0
    for k in range(1, trials):
        # strict '>' keeps the first trial attaining the maximum
        if results[k][1] > results[best_k][1]:
            best_k = k
    return best_k, results[best_k]


def _prepare(F):
    F = as_tensor(F)
    if F.ndim < 2:
        raise ParameterError(f"need a tensor of order d >= 2, got {F.ndim}")
    order = sorted(range(F.ndim), key=lambda k: F.shape[k])
    return F, order, np.transpose(F, order)


def _restore(sol_sorted, order):
    sol = [None] * len(order)
    for pos, slot in enumerate(order):
        sol[slot] = sol_sorted[pos]
    return sol


def _seed_of(rng) -> tuple[RandomSource, int]:
    if isinstance(rng, RandomSource):
        return rng, rng.seed
    if rng is None:
        rng = 0
    if isinstance(rng, (int, np.integer)):
        return RandomSource(int(rng)), int(rng)
    raise ParameterError("pass an integer seed or a RandomSource")


def solve_Lm(
    F,
    m,
    delta: float = 0.05,
    epsilon: float = 0.05,
    trials: int | None = None,
    strategy: BaseCaseStrategy | None = None,
    rng=0,
    workers: int = 1,
) -> SolveReport:
    """Randomized sampling + bilinear base case for the roots-of-unity / circle model.

    Each trial ``k`` draws the first ``d - 2`` (ascending-dimension) slots
    uniformly from Omega_m using substream ``(seed, k)``, solves the bilinear
    remainder with ``strategy`` and evaluates ``Re F``.  The best trial wins,
    ties going to the earliest.
    """
    t0 = time.perf_counter()
    m = check_m(m)
    _check_delta(delta)
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    F, order, Fs = _prepare(F)
    dims = Fs.shape
    d = len(dims)
    source, seed = _seed_of(rng)
    if strategy is None:
        small = min(dims[-2:])
        if not is_circle(m) and m**small <= DEFAULT_GUARD:
            strategy = ExactEnumeration()
        else:
            strategy = AlternatingMaximization()
    if is_circle(m) and isinstance(strategy, ExactEnumeration):
        raise ParameterError("exact enumeration is impossible on the unit circle")
    if trials is None:
        trials = 1 if d == 2 and isinstance(strategy, ExactEnumeration) else default_trials_Lm(dims, delta, epsilon)
    if trials < 1:
        raise ParameterError("trials must be >= 1")

    def trial(k):
        g = source.substream(k)
        head = [sample_unit_phases(m, n, g) for n in dims[:-2]]
        A = contract(Fs, {i + 1: v for i, v in enumerate(head)}) if head else Fs
        if is_circle(m):
            x, y, _ = solve_bilinear_circle(A, strategy, g)
        else:
            x, y, _ = solve_bilinear_roots(A, m, strategy, g)
        sol = head + [x, y]
        return sol, float(np.real(eval_multilinear(Fs, sol)))

    best_k, (sol_sorted, _) = _run_trials(trial, trials, workers)
    solution = _restore(sol_sorted, order)
    value = float(np.real(eval_multilinear(F, solution)))
    ratio = ratio_Lm(dims, m, delta)
    _, substituted = _log_ratio_product(dims)
    return SolveReport(
        solution=solution,
        value=value,
        ratio_formula_value=ratio,
        trials_run=trials,
        seed=seed,
        model="circle" if is_circle(m) else "roots",
        m=m,
        base_case=strategy_name(strategy),
        certified=isinstance(strategy, ExactEnumeration),
        ratio_substituted=substituted,
        theory_trials_log=theory_trials_log_Lm(dims, m, delta, epsilon) if d > 2 else 0.0,
        best_trial=best_k,
        elapsed=time.perf_counter() - t0,
    )


def solve_LS(
    F,
    gamma: float = 1.0,
    epsilon: float = 0.05,
    trials: int | None = None,
    rng=0,
    workers: int = 1,
) -> SolveReport:
    """Sphere model: sample ``d - 2`` slots on their spheres, finish with the top singular pair."""
    t0 = time.perf_counter()
    F, order, Fs = _prepare(F)
    dims = Fs.shape
    d = len(dims)
    _check_gamma(gamma, dims)
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    source, seed = _seed_of(rng)
    if trials is None:
        trials = 1 if d == 2 else default_trials_LS(dims, gamma, epsilon)
    if trials < 1:
        raise ParameterError("trials must be >= 1")

    def trial(k):
        g = source.substream(k)
        head = [sample_sphere(n, g) for n in dims[:-2]]
        A = contract(Fs, {i + 1: v for i, v in enumerate(head)}) if head else Fs
        if np.any(A != 0):
            _, x, y = largest_singular_pair(A, rng=g)
        else:
            x = sample_sphere(dims[-2], g)
            y = sample_sphere(dims[-1], g)
        sol = head + [x, y]
        return sol, float(np.real(eval_multilinear(Fs, sol)))

    best_k, (sol_sorted, _) = _run_trials(trial, trials, workers)
    solution = _restore(sol_sorted, order)
    value = float(np.real(eval_multilinear(F, solution)))
    _, substituted = _log_ratio_product(dims)
    return SolveReport(
        solution=solution,
        value=value,
        ratio_formula_value=ratio_LS(dims, gamma),
        trials_run=trials,
        seed=seed,
        model="sphere",
        m=None,
        base_case="PowerSVD",
        certified=True,
        ratio_substituted=substituted,
        theory_trials_log=None,
        best_trial=best_k,
        elapsed=time.perf_counter() - t0,
    )
