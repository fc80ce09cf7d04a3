"""Approximation algorithms for real-valued conjugate forms over Omega_m^n,
the unit circle and the unit sphere.

Every solver follows the same route: relax ``g`` to the multilinear form of
its conjugate super-symmetric tensor, solve the relaxation with
:mod:`conjopt.multilinear_solvers`, pull the slot vectors back through a
polarization search over phase tuples ``xi``, and finally make the point
feasible (vertex rounding on Omega_m, normalisation on the sphere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conjugate_forms import (
    ConjugateForm,
    eval_form,
    eval_form_batch,
    extract_linear_coefficient,
    form_to_tensor,
    is_square_free,
    norm_power_form,
    stacked,
)
from .errors import ConvexHullViolation, ConvexNotAsserted, NotSquareFree, OddDegree, ParameterError
from .multilinear_solvers import TRIALS_PER_UNIT, _m_to_json, _seed_of, c4, solve_LS, solve_Lm, vector_to_json
from .polarization import build_v_batch, in_conv_roots, xi_tuples
from .sampling import RandomSource, check_m, is_circle, root_table, sample_sphere, sample_unit_phases
from .tensor_core import eval_multilinear

XI_GUARD = 10**6
CIRCLE_SAMPLES_PER_SLOT = 1000
PHASE_GRID = 360
CIRCLE_ROUNDING_GRID = 720
SPHERE_XI_M = 4
AUX_STREAM = 2**32 - 1  # substream for draws outside the trial loop

__all__ = [
    "GSolveReport",
    "round_to_vertices",
    "hessian_sample",
    "build_h_tensor",
    "ratio_Gm",
    "ratio_GS",
    "solve_Gm_convex",
    "solve_Gm_squarefree",
    "solve_GS",
]


@dataclass
class GSolveReport:
    solution: np.ndarray
    value: float
    mode: str
    ratio_formula_value: float
    relative: bool
    m: float | int | None = None
    trials_run: int = 0
    seed: int = 0
    base_case: str = ""
    certified: bool = False

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "m": _m_to_json(self.m),
            "value": self.value,
            "ratio_formula_value": self.ratio_formula_value,
            "relative": self.relative,
            "trials_run": self.trials_run,
            "seed": self.seed,
            "base_case": self.base_case,
            "certified": self.certified,
            "solution": vector_to_json(self.solution),
        }


# --------------------------------------------------------------------------
# ratio formulas


def _tau(n: int, d: int, scale: float) -> float:
    return (scale * math.log(2 * n) / (2 * n)) ** ((d - 2) / 2)


def ratio_Gm(n: int, d: int, m, delta: float) -> float:
    """``c4(m) d!/(2d)^d (delta ln(2n)/(2n))^((d-2)/2)``; shared by the convex and square-free paths."""
    return c4(m) * math.factorial(d) / (2 * d) ** d * _tau(n, d, delta)


def ratio_GS(n: int, d: int, gamma: float) -> float:
    """Relative ratio ``d!/(2d)^d tau`` for even d, absolute ``d!/(sqrt2 d)^d tau`` for odd d."""
    base = 2 * d if d % 2 == 0 else math.sqrt(2) * d
    return math.factorial(d) / base**d * _tau(n, d, gamma)


# --------------------------------------------------------------------------
# rounding and curvature


def _choose_phase(p1: complex, m, up: bool) -> complex:
    if is_circle(m):
        if p1 == 0:
            return 1.0 + 0j
        phase = np.conj(p1) / abs(p1)
        return complex(phase if up else -phase)
    roots = root_table(m)
    scores = np.real(roots * p1)
    k = int(np.argmax(scores)) if up else int(np.argmin(scores))
    return complex(roots[k])


def round_to_vertices(g: ConjugateForm, x, m, direction: str = "up") -> np.ndarray:
    """Move every coordinate of ``x`` to a point of Omega_m without lowering (``up``)
    or raising (``down``) the value of the square-free form ``g``.

    ``g`` is affine in each ``x_i`` separately, ``g = 2 Re(x_i p1) + p3``, so
    the best vertex is the root maximising (or minimising) ``Re(omega p1)``.
    Ties, including ``p1 = 0``, go to root index 0.
    """
    m = check_m(m)
    if direction not in ("up", "down"):
        raise ParameterError(f"direction must be 'up' or 'down', got {direction!r}")
    if not is_square_free(g):
        raise NotSquareFree("vertex rounding needs a square-free form")
    z = np.array(x, dtype=np.complex128).ravel()
    if z.shape[0] != g.n:
        raise ParameterError(f"point has {z.shape[0]} coordinates, form has n={g.n}")
    inside = in_conv_roots(z, m)
    if not np.all(inside):
        bad = int(np.argmin(inside)) + 1
        raise ConvexHullViolation(f"coordinate {bad} lies outside conv(Omega_m)")
    for i in range(1, g.n + 1):
        p1, _ = extract_linear_coefficient(g, z, i)
        z[i - 1] = _choose_phase(p1, m, direction == "up")
    return z


def hessian_sample(g: ConjugateForm, x, y) -> float:
    """Second derivative of ``t -> g(x + t y)`` at ``t = 0``; negative values refute convexity."""
    d = g.d
    if d < 2:
        return 0.0
    G = form_to_tensor(g)
    sx, sy = stacked(x), stacked(y)
    return float(d * (d - 1) * np.real(eval_multilinear(G, [sy, sy] + [sx] * (d - 2))))


def build_h_tensor(n: int, d: int) -> np.ndarray:
    """Tensor of ``h(x) = ||x||_2^d`` for even ``d``."""
    if d % 2:
        raise OddDegree(f"the norm-power tensor needs even degree, got {d}")
    return form_to_tensor(norm_power_form(n, d))


# --------------------------------------------------------------------------
# polarization search over phase tuples


def _xi_candidates(m, d: int, rng) -> tuple[np.ndarray, bool]:
    """Phase tuples to search: all of Omega_m^d when small enough, else a sample.

    The flag tells whether the best tuple should be refined on a phase grid.
    """
    if not is_circle(m) and m**d <= XI_GUARD:
        return xi_tuples(m, d), False
    count = CIRCLE_SAMPLES_PER_SLOT * d
    return sample_unit_phases(m, d, rng, size=count), is_circle(m)


def _refine_phases(xi: np.ndarray, score, passes: int = 2) -> np.ndarray:
    """Coordinate-wise phase alignment of ``xi`` on a uniform grid."""
    grid = np.exp(2j * np.pi * np.arange(PHASE_GRID) / PHASE_GRID)
    xi = xi.copy()
    best = score(xi[None, :])[0]
    for _ in range(passes):
        for k in range(xi.shape[0]):
            trial = np.repeat(xi[None, :], PHASE_GRID, axis=0)
            trial[:, k] = grid
            s = score(trial)
            j = int(np.argmax(s))
            if s[j] > best:
                best, xi = s[j], trial[j]
    return xi


def _search(score, m, d, rng):
    """Return the tuple maximising ``score`` (a batch function of tuples)."""
    XI, refine = _xi_candidates(m, d, rng)
    s = score(XI)
    xi = XI[int(np.argmax(s))]
    if refine:
        xi = _refine_phases(xi, score)
    return xi


def _split(solution, n):
    Z = np.asarray(solution)
    return Z[:, :n], Z[:, n:]


def _weights(XI):
    return np.real(np.prod(np.conj(XI), axis=1))


# --------------------------------------------------------------------------
# (G_m) and (G_inf)


def _relax(g: ConjugateForm, m, delta, epsilon, trials, strategy, rng, workers):
    if g.d < 2:
        raise ParameterError("forms of degree d < 2 are not supported")
    G = form_to_tensor(g)
    rep = solve_Lm(G, m, delta, epsilon, trials=trials, strategy=strategy, rng=rng, workers=workers)
    X, Y = _split(rep.solution, g.n)
    return rep, X, Y


def _vertex_sweep_convex(g: ConjugateForm, u: np.ndarray, m) -> np.ndarray:
    """Coordinate sweep maximising ``g`` over the vertices by direct evaluation.

    For m = inf the candidates are a fine phase grid plus the two ends of the
    horizontal chord through the current coordinate; convexity along that
    chord guarantees one end does not lose value.
    """
    z = u.copy()
    if is_circle(m):
        base = np.exp(2j * np.pi * np.arange(CIRCLE_ROUNDING_GRID) / CIRCLE_ROUNDING_GRID)
    else:
        base = root_table(m)
    for i in range(g.n):
        cands = base
        if is_circle(m):
            b = float(np.clip(z[i].imag, -1.0, 1.0))
            a = math.sqrt(max(0.0, 1.0 - b * b))
            cands = np.concatenate([base, [complex(a, b), complex(-a, b)]])
        P = np.repeat(z[None, :], cands.shape[0], axis=0)
        P[:, i] = cands
        vals = eval_form_batch(g, P)
        z = P[int(np.argmax(vals))]
    return z


def solve_Gm_convex(
    g: ConjugateForm,
    m,
    delta: float = 0.05,
    epsilon: float = 0.05,
    rng=0,
    trials: int | None = None,
    strategy=None,
    workers: int = 1,
) -> GSolveReport:
    """Maximise a convex (user-asserted) form over Omega_m^n."""
    if not g.convex_asserted:
        raise ConvexNotAsserted("solve_Gm_convex needs a form flagged convex_asserted")
    m = check_m(m)
    rep, X, Y = _relax(g, m, delta, epsilon, trials, strategy, rng, workers)
    d = g.d

    def score(XI):
        U = build_v_batch(X, Y, XI) / (2 * d)
        return _weights(XI) * eval_form_batch(g, U)

    xi = _search(score, m, d, RandomSource(rep.seed).substream(AUX_STREAM))
    u = (np.conj(xi) @ np.conj(X) + xi @ Y) / (2 * d)
    z = _vertex_sweep_convex(g, u, m)
    return GSolveReport(
        solution=z,
        value=eval_form(g, z),
        mode="Convex",
        ratio_formula_value=ratio_Gm(g.n, d, m, delta),
        relative=False,
        m=m,
        trials_run=rep.trials_run,
        seed=rep.seed,
        base_case=rep.base_case,
        certified=rep.certified,
    )


def solve_Gm_squarefree(
    g: ConjugateForm,
    m,
    delta: float = 0.05,
    epsilon: float = 0.05,
    rng=0,
    trials: int | None = None,
    strategy=None,
    workers: int = 1,
) -> GSolveReport:
    """Square-free forms over Omega_m^n.

    Odd ``d`` with even (or infinite) ``m`` gives an absolute guarantee, since
    ``-u`` stays in the hull and ``g(-u) = -g(u)``.  All other cases give a
    relative guarantee and also consider the rounded origin.
    """
    if not is_square_free(g):
        raise NotSquareFree("solve_Gm_squarefree needs a square-free form")
    m = check_m(m)
    rep, X, Y = _relax(g, m, delta, epsilon, trials, strategy, rng, workers)
    d = g.d
    absolute = d % 2 == 1 and (is_circle(m) or m % 2 == 0)
    search_rng = RandomSource(rep.seed).substream(AUX_STREAM)

    def u_of(XI):
        return build_v_batch(X, Y, XI) / (2 * d)

    if absolute:
        xi = _search(lambda XI: np.abs(eval_form_batch(g, u_of(XI))), m, d, search_rng)
        u = u_of(xi[None, :])[0]
        if eval_form(g, u) < 0:
            u = -u
        z = round_to_vertices(g, u, m, "up")
    else:

        def score(XI):
            vals = eval_form_batch(g, u_of(XI))
            return np.where(_weights(XI) > 0, vals, -np.inf)

        xi = _search(score, m, d, search_rng)
        u = u_of(xi[None, :])[0]
        z_u = round_to_vertices(g, u, m, "up")
        z_0 = round_to_vertices(g, np.zeros(g.n), m, "up")
        z = z_u if eval_form(g, z_u) >= eval_form(g, z_0) else z_0
    return GSolveReport(
        solution=z,
        value=eval_form(g, z),
        mode="SquareFreeAbsolute" if absolute else "SquareFreeRelative",
        ratio_formula_value=ratio_Gm(g.n, d, m, delta),
        relative=not absolute,
        m=m,
        trials_run=rep.trials_run,
        seed=rep.seed,
        base_case=rep.base_case,
        certified=rep.certified,
    )


# --------------------------------------------------------------------------
# (G_S)


def _real_quadratic(g: ConjugateForm) -> np.ndarray:
    """Real symmetric ``M`` with ``g(a + ib) = [a; b]^T M [a; b]`` for degree-2 ``g``."""
    n = g.n
    G = form_to_tensor(g)
    I = np.eye(n)
    T = np.block([[I, -1j * I], [I, 1j * I]])
    M = np.real(T.T @ G @ T)
    return (M + M.T) / 2


def _normalise_rows(V):
    norms = np.linalg.norm(V, axis=1)
    ok = norms >= 1e-14
    W = np.zeros_like(V)
    W[ok] = V[ok] / norms[ok, None]
    return W, ok


def solve_GS(
    g: ConjugateForm,
    gamma: float = 1.0,
    epsilon: float = 0.05,
    rng=0,
    trials: int | None = None,
    workers: int = 1,
) -> GSolveReport:
    """Maximise ``g`` over the complex unit sphere.

    ``d = 2`` is solved exactly as a real symmetric eigenproblem.  Larger even
    degrees shift the objective by ``g(y) ||x||^d`` around an anchor ``y`` and
    report a relative ratio; odd degrees use the sign symmetry and report an
    absolute ratio.
    """
    n, d = g.n, g.d
    if d < 2:
        raise ParameterError("forms of degree d < 2 are not supported")
    upper = 2 * n / math.log(2 * n)
    if not 0.0 < gamma < upper:
        raise ParameterError(f"gamma must lie in (0, 2n/ln 2n) = (0, {upper:.4g}), got {gamma}")
    source, seed = _seed_of(rng)
    ratio = ratio_GS(n, d, gamma)

    if d == 2:
        w, V = np.linalg.eigh(_real_quadratic(g))
        ab = V[:, -1]
        z = ab[:n] + 1j * ab[n:]
        z = z / np.linalg.norm(z)
        return GSolveReport(z, eval_form(g, z), "SphereEven", ratio, True, None, 1, seed, "eigh", True)

    if trials is None:
        trials = math.ceil(math.log(1.0 / epsilon)) * TRIALS_PER_UNIT
    G = form_to_tensor(g)
    XI = xi_tuples(SPHERE_XI_M, d)
    weights = _weights(XI)

    def pull_back(solution, restrict):
        X, Y = _split(solution, n)
        W, ok = _normalise_rows(build_v_batch(X, Y, XI))
        vals = np.where(ok, eval_form_batch(g, W), -np.inf)
        if restrict:
            vals = np.where(weights > 0, vals, -np.inf)
            k = int(np.argmax(vals))
            return (W[k] if np.isfinite(vals[k]) else None), vals[k]
        mags = np.where(ok, np.abs(vals), -np.inf)
        k = int(np.argmax(mags))
        if not np.isfinite(mags[k]):
            return None, -np.inf
        return (W[k] if vals[k] >= 0 else -W[k]), abs(vals[k])

    if d % 2 == 0:
        H = build_h_tensor(n, d)
        anchors = [sample_sphere(n, source.substream(AUX_STREAM)), np.eye(n, dtype=np.complex128)[0]]
        best = None
        for y in anchors:
            rep = solve_LS(G - eval_form(g, y) * H, gamma, epsilon, trials=trials, rng=source, workers=workers)
            cand, _ = pull_back(rep.solution, restrict=True)
            for z in ([y] if cand is None else [y, cand]):
                val = eval_form(g, z)
                if best is None or val > best[1]:
                    best = (z, val)
        z = best[0]
        mode, relative = "SphereEven", True
    else:
        rep = solve_LS(G, gamma, epsilon, trials=trials, rng=source, workers=workers)
        z, _ = pull_back(rep.solution, restrict=False)
        if z is None:
            z = sample_sphere(n, source.substream(AUX_STREAM))
        mode, relative = "SphereOdd", False
    return GSolveReport(z, eval_form(g, z), mode, ratio, relative, None, trials, seed, "PowerSVD", True)
