"""Random draws on the three feasible sets, moment formulas and tail bounds.

``m`` is either an integer ``>= 3`` (the m-th roots of unity) or the sentinel
:data:`INF` (the whole unit circle).  Every sampler takes an explicit
``numpy.random.Generator``; :class:`RandomSource` derives reproducible
per-trial substreams from one 64-bit seed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import ConstraintError, ParameterError

INF = math.inf

# worst case of the Berry-Esseen constant range (0.4097, 0.56)
BERRY_ESSEEN_C0 = 0.56

_CHUNK = 1 << 16

__all__ = [
    "INF",
    "RootsOfUnity",
    "UnitCircle",
    "Sphere",
    "ConstraintSet",
    "RandomSource",
    "TailBoundReport",
    "is_circle",
    "check_m",
    "parse_m",
    "as_generator",
    "root_table",
    "sample_roots",
    "sample_circle",
    "sample_sphere",
    "sample_unit_phases",
    "moments_formula",
    "c2",
    "n1_log",
    "n2_log",
    "n0_log",
    "c1_log",
    "tail_bound_roots",
    "tail_bound_sphere",
]


def is_circle(m) -> bool:
    return m == INF


def check_m(m):
    """Return ``m`` normalised to ``int`` or ``INF``; reject ``m < 3``."""
    if is_circle(m):
        return INF
    if isinstance(m, float) and not m.is_integer():
        raise ConstraintError(f"m must be an integer >= 3 or inf, got {m}")
    m = int(m)
    if m < 3:
        raise ConstraintError(f"m must be >= 3, got {m}")
    return m


def parse_m(text: str):
    if str(text).strip().lower() in {"inf", "infinity", "circle", "oo"}:
        return INF
    return check_m(int(text))


@dataclass(frozen=True)
class RootsOfUnity:
    m: int
    n: int

    def __post_init__(self):
        check_m(self.m)


@dataclass(frozen=True)
class UnitCircle:
    n: int

    @property
    def m(self):
        return INF


@dataclass(frozen=True)
class Sphere:
    n: int


ConstraintSet = RootsOfUnity | UnitCircle | Sphere


@dataclass(frozen=True)
class RandomSource:
    """Seeded source of independent, reproducible substreams.

    ``substream(k)`` depends only on ``(seed, k)``, so trial ``k`` draws the
    same numbers regardless of how trials are scheduled across threads.
    """

    seed: int

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed))

    def substream(self, k: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(int(k),)))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomSource):
        return rng.generator()
    return np.random.default_rng(rng)


@lru_cache(maxsize=None)
def _root_table(m: int) -> np.ndarray:
    table = np.exp(2j * np.pi * np.arange(m) / m)
    # snap cos/sin round-off at multiples of pi/2 so 1, i, -1, -i are exact
    re, im = table.real.copy(), table.imag.copy()
    re[np.abs(re) < 1e-15] = 0.0
    im[np.abs(im) < 1e-15] = 0.0
    table = re + 1j * im
    table.setflags(write=False)
    return table


def root_table(m: int) -> np.ndarray:
    """The m-th roots of unity ``exp(2 pi i k / m)``, ``k = 0..m-1``."""
    return _root_table(check_m(m))


def _shape(n: int, size):
    return (n,) if size is None else (int(size), n)


def sample_roots(m: int, n: int, rng, size: int | None = None) -> np.ndarray:
    """I.i.d. uniform entries from the m-th roots of unity (table lookup)."""
    m = check_m(m)
    if is_circle(m):
        raise ConstraintError("sample_roots needs a finite m; use sample_circle")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = as_generator(rng)
    return _root_table(m)[rng.integers(m, size=_shape(n, size))]


def sample_circle(n: int, rng, size: int | None = None) -> np.ndarray:
    rng = as_generator(rng)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=_shape(n, size))
    return np.exp(1j * theta)


def sample_unit_phases(m, n: int, rng, size: int | None = None) -> np.ndarray:
    """Uniform draws from Omega_m (finite m) or Omega_inf."""
    m = check_m(m)
    if is_circle(m):
        return sample_circle(n, rng, size)
    return sample_roots(m, n, rng, size)


def sample_sphere(n: int, rng, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on the complex unit sphere via a normalised complex Gaussian."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = as_generator(rng)
    shape = _shape(n, size)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


# --------------------------------------------------------------------------
# moments of eta = Re(a^T xi)


def moments_formula(a, m) -> tuple[float, float, float]:
    """Closed-form ``(E eta, E eta^2, E eta^4)`` for ``eta = Re(a^T xi)``.

    ``m == 4`` carries the extra term ``(1/16) sum(a_i^4 + conj(a_i)^4)``
    because ``xi^4 == 1`` on the fourth roots of unity.
    """
    m = check_m(m)
    a = np.asarray(a, dtype=np.complex128).ravel()
    sq = np.abs(a) ** 2
    s2 = float(np.sum(sq))
    s4 = float(np.sum(sq**2))
    e2 = 0.5 * s2
    cross = 0.5 * (s2 * s2 - s4)  # sum_{i<j} |a_i|^2 |a_j|^2
    e4 = 0.375 * s4 + 1.5 * cross
    if m == 4:
        e4 += float(np.sum(a**4 + np.conj(a) ** 4).real) / 16.0
    return 0.0, e2, e4


def c2(m) -> int:
    """Smallest divisor ``k >= 2`` of ``m``; 2 for the unit circle."""
    m = check_m(m)
    if is_circle(m):
        return 2
    k = 2
    while k * k <= m:
        if m % k == 0:
            return k
        k += 1
    return m


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not 0.0 < delta < 1.0 / 16.0:
        raise ParameterError(f"delta must lie in (0, 1/16), got {delta}")
    return delta


def _ceil_log(L: float) -> float:
    """ln(ceil(e^L)); above ~1e15 the ceiling is below float resolution."""
    if L <= 0.0:
        return 0.0
    if L < 34.0:
        return math.log(math.ceil(math.exp(L)))
    return L


def _n1_condition(L: float, delta: float) -> float:
    # ln(8 delta ln n / n^(1/2 - 8 delta)) - ln(1/2); <= 0 means satisfied
    return math.log(8.0 * delta) + math.log(L) - (0.5 - 8.0 * delta) * L + math.log(2.0)


def n1_log(delta: float) -> float:
    """ln n_1(delta), the point after which ``8 delta ln n / n^(1/2-8delta) <= 1/2`` holds for good.

    Taken literally the defining minimum is always n = 1 (ln 1 = 0), so the
    threshold is searched on the decreasing branch of the left-hand side.
    """
    delta = _check_delta(delta)
    a = 0.5 - 8.0 * delta
    peak = 1.0 / a
    if _n1_condition(peak, delta) <= 0.0:
        return 0.0
    hi = 2.0 * peak
    while _n1_condition(hi, delta) > 0.0:
        hi *= 2.0
    L = brentq(lambda t: _n1_condition(t, delta), peak, hi, xtol=1e-12, rtol=1e-14)
    return _ceil_log(L)


def _n2_conditions(L: float, delta: float, c0: float = BERRY_ESSEEN_C0) -> bool:
    first = (math.sqrt(8.0 * delta * L) + 1.0) ** 2 / 2.0 <= 5.0 * delta * L
    # 1/(sqrt(2 pi) n^(5d)) - 8 sqrt2 c0 / n^(8d) >= 1/(3 n^(5d)), multiplied through by n^(5d)
    second = 1.0 / math.sqrt(2.0 * math.pi) - 8.0 * math.sqrt(2.0) * c0 * math.exp(-3.0 * delta * L) >= 1.0 / 3.0
    return first and second


def n2_log(delta: float, c0: float = BERRY_ESSEEN_C0) -> float:
    """ln n_2(delta): smallest n meeting both Berry-Esseen side conditions.

    Both conditions are monotone in n, so bisection on ln n is exact.
    """
    delta = _check_delta(delta)
    lo, hi = 0.0, 1.0
    while not _n2_conditions(hi, delta, c0):
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _n2_conditions(mid, delta, c0):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return _ceil_log(hi)


def n0_log(delta: float) -> float:
    return max(n1_log(delta), n2_log(delta))


def c1_log(delta: float) -> float:
    """``ln c_1(delta) = -ln 36 - n_0(delta) ln 5``.

    ``n_0`` is astronomically large for every admissible delta; when it
    exceeds the float range the result is ``-inf``.
    """
    L0 = n0_log(delta)
    try:
        n0 = math.exp(L0)
    except OverflowError:
        return -math.inf
    return -math.log(36.0) - n0 * math.log(5.0)


# --------------------------------------------------------------------------
# tail bounds


@dataclass
class TailBoundReport:
    empirical_prob: float
    theoretical_bound_log: float
    samples: int
    threshold: float
    sigma: float
    violation: bool
    constant_known: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def _count_event(a: np.ndarray, threshold: float, samples: int, draw) -> int:
    hits = 0
    done = 0
    while done < samples:
        b = min(_CHUNK, samples - done)
        xi = draw(b)
        hits += int(np.count_nonzero((xi @ a).real >= threshold))
        done += b
    return hits


def tail_bound_roots(a, m, delta: float, samples: int, rng) -> TailBoundReport:
    """Monte Carlo estimate of ``P{Re(a^T xi) >= sqrt(delta ln n / n) ||a||_1}``.

    Flags a violation only when ``p_hat + 3 sigma`` falls below the
    theoretical lower bound ``c1(delta) / (c2(m) n^(5 delta))``.
    """
    delta = _check_delta(delta)
    m = check_m(m)
    if samples < 10_000:
        raise ParameterError(f"need at least 10^4 samples, got {samples}")
    a = np.asarray(a, dtype=np.complex128).ravel()
    n = a.shape[0]
    rng = as_generator(rng)
    threshold = math.sqrt(delta * math.log(n) / n) * float(np.sum(np.abs(a)))
    hits = _count_event(a, threshold, samples, lambda b: sample_unit_phases(m, n, rng, size=b))
    p = hits / samples
    sigma = math.sqrt(p * (1.0 - p) / samples)
    bound_log = c1_log(delta) - math.log(c2(m)) - 5.0 * delta * math.log(n)
    violation = p + 3.0 * sigma < math.exp(bound_log)
    return TailBoundReport(p, bound_log, samples, threshold, sigma, bool(violation))


def tail_bound_sphere(a, gamma: float, samples: int, rng) -> TailBoundReport:
    """Monte Carlo estimate of ``P{Re(a^T xi) >= sqrt(gamma ln n / n) ||a||_2}`` on S^n.

    The constant of the sphere bound is not known explicitly, so only the
    shape ``-2 gamma ln n - (1/2) ln ln n`` is reported (NaN for n = 1) and no
    violation is ever flagged.
    """
    a = np.asarray(a, dtype=np.complex128).ravel()
    n = a.shape[0]
    gamma = float(gamma)
    if gamma <= 0.0 or gamma * math.log(n) >= n:
        raise ParameterError(f"need gamma > 0 and gamma ln n < n, got gamma={gamma}, n={n}")
    if samples < 10_000:
        raise ParameterError(f"need at least 10^4 samples, got {samples}")
    rng = as_generator(rng)
    threshold = math.sqrt(gamma * math.log(n) / n) * float(np.linalg.norm(a))
    hits = _count_event(a, threshold, samples, lambda b: sample_sphere(n, rng, size=b))
    p = hits / samples
    sigma = math.sqrt(p * (1.0 - p) / samples)
    shape = -2.0 * gamma * math.log(n) - 0.5 * math.log(math.log(n)) if n >= 2 else math.nan
    return TailBoundReport(p, shape, samples, threshold, sigma, False, constant_known=False)
