"""Random instances and seeded certification experiments.

An experiment solves one random instance per seed, compares the achieved
value with an oracle, and writes one :class:`RatioRow` per seed to CSV and
JSON.  Rows depend only on the seeds, never on scheduling.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from .conjugate_forms import (
    ConjugateForm,
    form_from_coefficients,
    hermitian_quadratic_form,
    power_form,
)
from .conjugate_solvers import _real_quadratic, solve_Gm_convex, solve_Gm_squarefree, solve_GS
from .errors import ParameterError
from .multilinear_solvers import solve_LS, solve_Lm
from .oracle import OracleResult, brute_force_form_roots, brute_force_multilinear_roots, multistart_reference
from .sampling import INF, RandomSource, as_generator, parse_m

MODELS = ("Lm", "Linf", "LS", "Gm", "Ginf", "GS")
KINDS = ("tensor", "form_squarefree", "form_convex", "form_general")
PASS_TOL = 1e-9
CSV_COLUMNS = ("seed", "value", "vmax", "vmin", "ratio", "quotient", "pass", "elapsed_ms")
INSTANCE_STREAM = 2**32 - 2  # kept apart from the solver trial substreams
ORACLE_STREAM = 2**32 - 3

__all__ = [
    "ExperimentConfig",
    "RatioRow",
    "ExperimentResult",
    "generate_instance",
    "run_experiment",
    "row_passes",
    "rows_to_csv",
]


# --------------------------------------------------------------------------
# instances


def _gaussian(rng, size=None):
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


def _random_form(n: int, d: int, density: float, rng, square_free: bool) -> ConjugateForm:
    coeffs = {}
    for word in itertools.combinations_with_replacement(range(2 * n), d):
        I = tuple(t + 1 for t in word if t < n)
        J = tuple(t - n + 1 for t in word if t >= n)
        if (J, I) in coeffs or (I, J) in coeffs:
            continue
        if square_free and len(set(I + J)) != d:
            continue
        if rng.random() >= density:
            continue
        a = complex(_gaussian(rng))
        if I == J:
            coeffs[(I, J)] = complex(a.real)
        else:
            coeffs[(I, J)] = a
            coeffs[(J, I)] = a.conjugate()
    return form_from_coefficients(n, d, coeffs)


def generate_instance(kind: str, n: int, d: int, density: float = 1.0, rng=0, dims=None):
    """Random problem data with complex Gaussian coefficients.

    ``tensor`` returns an array of shape ``dims`` (default ``(n,) * d``); the
    form kinds return a :class:`ConjugateForm` whose mirrored coefficients
    are exact conjugates.  ``form_convex`` is ``(x^H Q x)^(d/2)`` with
    ``Q = B^H B``; it ignores ``density`` and carries ``convex_asserted``.
    """
    if kind not in KINDS:
        raise ParameterError(f"unknown instance kind {kind!r}; expected one of {KINDS}")
    if not 0.0 < density <= 1.0:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    if n < 1 or d < 1:
        raise ParameterError("n and d must be positive")
    rng = as_generator(rng)
    if kind == "tensor":
        shape = tuple(dims) if dims is not None else (n,) * d
        F = _gaussian(rng, shape)
        if density < 1.0:
            F = F * (rng.random(shape) < density)
        return F
    if kind == "form_convex":
        if d % 2:
            raise ParameterError(f"convex instances need even d, got {d}")
        B = _gaussian(rng, (n, n))
        g = power_form(hermitian_quadratic_form(B.conj().T @ B), d // 2)
        return g.with_convex_flag()
    if kind == "form_squarefree" and d > n:
        raise ParameterError(f"no nonzero square-free form of degree {d} in {n} variables")
    return _random_form(n, d, density, rng, square_free=kind == "form_squarefree")


# --------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentConfig:
    model: str
    n: int = 2
    d: int = 3
    dims: list[int] | None = None
    m: int | float = 4
    delta: float = 0.05
    gamma: float = 1.0
    epsilon: float = 0.05
    trials: int | None = None
    seeds: list[int] = field(default_factory=list)
    oracle: bool = True
    oracle_starts: int = 1000
    form_kind: str = "form_squarefree"
    density: float = 1.0
    workers: int = 1
    timing: bool = False
    output: str | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if isinstance(self.m, str):
            self.m = parse_m(self.m)
        if self.model in ("Linf", "Ginf"):
            self.m = INF
        if isinstance(self.seeds, int):
            self.seeds = list(range(self.seeds))
        self.seeds = [int(s) for s in self.seeds]

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise ParameterError(f"unknown config keys: {sorted(extra)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["m"] = "inf" if math.isinf(self.m) else int(self.m)
        out.pop("output")
        out.pop("workers")
        return out

    @property
    def tensor_dims(self) -> tuple[int, ...]:
        return tuple(self.dims) if self.dims is not None else (self.n,) * self.d


@dataclass
class RatioRow:
    seed: int
    value: float
    vmax: float | None
    vmin: float | None
    ratio: float
    relative: bool
    quotient: float | None
    passed: bool | None
    elapsed_ms: float | None = None
    report: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    rows: list[RatioRow]
    summary: dict

    def to_dict(self) -> dict:
        return {
            "summary": self.summary,
            "rows": [
                {k: v for k, v in asdict(r).items() if k != "elapsed_ms" or v is not None} for r in self.rows
            ],
        }


def row_passes(value: float, vmax: float, vmin: float, ratio: float, relative: bool) -> bool:
    """Absolute: ``value >= ratio * vmax``.  Relative: ``value - vmin >= ratio * (vmax - vmin)``."""
    if relative:
        return value - vmin >= ratio * (vmax - vmin) - PASS_TOL * (1 + abs(vmax) + abs(vmin))
    return value >= ratio * vmax - PASS_TOL * (1 + abs(vmax))


def _quotient(value, vmax, vmin, relative):
    if relative:
        spread = vmax - vmin
        return (value - vmin) / spread if spread > 0 else 1.0
    return value / vmax if vmax > 0 else None


def _sphere_quadratic_oracle(g: ConjugateForm) -> OracleResult:
    w, V = np.linalg.eigh(_real_quadratic(g))
    n = g.n
    hi = V[:, -1][:n] + 1j * V[:, -1][n:]
    lo = V[:, 0][:n] + 1j * V[:, 0][n:]
    return OracleResult(float(w[-1]), float(w[0]), hi / np.linalg.norm(hi), lo / np.linalg.norm(lo), True)


def _solve_one(cfg: ExperimentConfig, seed: int) -> RatioRow:
    inst_rng = RandomSource(seed).substream(INSTANCE_STREAM)
    oracle_rng = RandomSource(seed).substream(ORACLE_STREAM)
    t0 = time.perf_counter()
    oracle = None
    if cfg.model in ("Lm", "Linf", "LS"):
        F = generate_instance("tensor", cfg.n, cfg.d, cfg.density, inst_rng, dims=cfg.tensor_dims)
        if cfg.model == "LS":
            rep = solve_LS(F, cfg.gamma, cfg.epsilon, trials=cfg.trials, rng=seed)
        else:
            rep = solve_Lm(F, cfg.m, cfg.delta, cfg.epsilon, trials=cfg.trials, rng=seed)
        relative = False
        elapsed = time.perf_counter() - t0
        if cfg.oracle:
            if cfg.model == "Lm":
                oracle = brute_force_multilinear_roots(F, cfg.m)
            else:
                kind = "sphere" if cfg.model == "LS" else "circle"
                oracle = multistart_reference(F, kind, cfg.oracle_starts, oracle_rng)
        report = rep.to_dict()
    else:
        g = generate_instance(cfg.form_kind, cfg.n, cfg.d, cfg.density, inst_rng)
        if cfg.model == "GS":
            rep = solve_GS(g, cfg.gamma, cfg.epsilon, rng=seed, trials=cfg.trials)
        elif g.convex_asserted:
            rep = solve_Gm_convex(g, cfg.m, cfg.delta, cfg.epsilon, rng=seed, trials=cfg.trials)
        else:
            rep = solve_Gm_squarefree(g, cfg.m, cfg.delta, cfg.epsilon, rng=seed, trials=cfg.trials)
        relative = rep.relative
        elapsed = time.perf_counter() - t0
        if cfg.oracle:
            if cfg.model == "Gm":
                oracle = brute_force_form_roots(g, cfg.m)
            elif cfg.model == "GS" and g.d == 2:
                oracle = _sphere_quadratic_oracle(g)
            else:
                kind = "sphere" if cfg.model == "GS" else "circle"
                oracle = multistart_reference(g, kind, cfg.oracle_starts, oracle_rng)
        report = rep.to_dict()
    value, ratio = rep.value, rep.ratio_formula_value
    vmax = vmin = quotient = passed = None
    if oracle is not None:
        # a local-search reference can fall short of a solver's value
        vmax = max(oracle.v_max, value)
        vmin = min(oracle.v_min, value)
        quotient = _quotient(value, vmax, vmin, relative)
        passed = row_passes(value, vmax, vmin, ratio, relative)
    return RatioRow(
        seed=seed,
        value=value,
        vmax=vmax,
        vmin=vmin,
        ratio=ratio,
        relative=relative,
        quotient=quotient,
        passed=passed,
        elapsed_ms=elapsed * 1e3 if cfg.timing else None,
        report=report,
    )


def _summary(cfg: ExperimentConfig, rows: list[RatioRow]) -> dict:
    checked = [r for r in rows if r.passed is not None]
    quotients = [r.quotient for r in rows if r.quotient is not None]
    failures = sum(1 for r in checked if not r.passed)
    return {
        "config": cfg.to_dict(),
        "count": len(rows),
        "checked": len(checked),
        "failures": failures,
        "allowed_failures": math.floor(cfg.epsilon * len(checked)),
        "pass_rate": (len(checked) - failures) / len(checked) if checked else None,
        "mean_quotient": float(np.mean(quotients)) if quotients else None,
        "ratio_formula_value": rows[0].ratio if rows else None,
    }


def run_experiment(config: ExperimentConfig | dict) -> ExperimentResult:
    """Solve one instance per seed; rows come back sorted by seed."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    seeds = sorted(cfg.seeds)
    if cfg.workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(lambda s: _solve_one(cfg, s), seeds))
    else:
        rows = [_solve_one(cfg, s) for s in seeds]
    result = ExperimentResult(rows, _summary(cfg, rows))
    if cfg.output:
        write_outputs(result, cfg.output)
    return result


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    return repr(float(v)) if isinstance(v, float) else str(v)


def rows_to_csv(rows: list[RatioRow], timestamp: str | None = None) -> str:
    buf = io.StringIO()
    if timestamp is not None:
        buf.write(f"# generated {timestamp}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(x) for x in (r.seed, r.value, r.vmax, r.vmin, r.ratio, r.quotient, r.passed, r.elapsed_ms)])
    return buf.getvalue()


def write_outputs(result: ExperimentResult, prefix: str) -> tuple[str, str]:
    """Write ``<prefix>.csv`` (timestamp in a leading comment line) and ``<prefix>.json``."""
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    csv_path, json_path = f"{prefix}.csv", f"{prefix}.json"
    with open(csv_path, "w") as fh:
        fh.write(rows_to_csv(result.rows, stamp))
    with open(json_path, "w") as fh:
        json.dump(result.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path
