"""Command-line entry point: ``conjopt <command> ...``.

Every command writes a JSON payload (sorted keys, no timings) to
``--output`` or stdout, so runs with a fixed seed are byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench
from .conjugate_forms import ConjugateForm, dump_form, form_from_json, is_square_free
from .conjugate_solvers import solve_Gm_convex, solve_Gm_squarefree, solve_GS
from .errors import ConjoptError, ParameterError
from .multilinear_solvers import (
    AlternatingMaximization,
    ExactEnumeration,
    PowerSVD,
    solve_LS,
    solve_Lm,
)
from .oracle import brute_force_form_roots, brute_force_multilinear_roots, multistart_reference
from .polarization import polarization_residual, polarization_sample
from .sampling import INF, RandomSource, parse_m, sample_circle, tail_bound_roots, tail_bound_sphere
from .tensor_core import dump_tensor, tensor_from_json

POLARIZATION_TOL = 1e-10
POLARIZATION_Z_LIMIT = 5.0

STRATEGIES = {
    "auto": None,
    "exact": ExactEnumeration(),
    "alternating": AlternatingMaximization(),
    "power-svd": PowerSVD(),
}


def _emit(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=1, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _load_problem(path: str):
    obj = _load_json(path)
    if "terms" in obj:
        return form_from_json(obj)
    if "entries" in obj:
        return tensor_from_json(obj)
    raise ParameterError(f"{path}: neither a form ('terms') nor a tensor ('entries')")


def _gaussian_vector(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


# --------------------------------------------------------------------------
# commands


def cmd_verify_bounds(args) -> int:
    rng_a = RandomSource(args.seed).substream(0)
    a = _gaussian_vector(rng_a, args.n)
    rng = RandomSource(args.seed).substream(1)
    if args.model == "sphere":
        rep = tail_bound_sphere(a, args.gamma, args.samples, rng)
    else:
        rep = tail_bound_roots(a, parse_m(args.m), args.delta, args.samples, rng)
    payload = {"model": args.model, "n": args.n, "seed": args.seed, "report": rep.to_dict()}
    _emit(payload, args.output)
    return 1 if rep.violation else 0


def cmd_verify_polarization(args) -> int:
    m = parse_m(args.m)
    results = []
    ok = True
    for k in range(args.instances):
        rng = RandomSource(args.seed).substream(k)
        g = bench.generate_instance("form_general", args.n, args.d, 1.0, rng)
        xs = sample_circle(args.n, rng, size=args.d)
        ys = sample_circle(args.n, rng, size=args.d)
        if m == INF:
            stat = polarization_sample(g, xs, ys, m, args.samples, rng)
            passed = stat <= POLARIZATION_Z_LIMIT
            results.append({"instance": k, "z_score": stat, "pass": passed})
        else:
            res = polarization_residual(g, xs, ys, m)
            passed = res <= POLARIZATION_TOL
            results.append({"instance": k, "residual": res, "pass": passed})
        ok &= passed
    m_out = "inf" if m == INF else int(m)
    payload = {"n": args.n, "d": args.d, "m": m_out, "seed": args.seed, "all_pass": ok, "results": results}
    _emit(payload, args.output)
    return 0 if ok else 1


def cmd_solve_multilinear(args) -> int:
    F = tensor_from_json(_load_json(args.input))
    if args.model == "sphere":
        rep = solve_LS(F, args.gamma, args.epsilon, trials=args.trials, rng=args.seed, workers=args.workers)
    else:
        m = INF if args.model == "circle" else parse_m(args.m)
        strategy = STRATEGIES[args.strategy]
        rep = solve_Lm(
            F, m, args.delta, args.epsilon, trials=args.trials, strategy=strategy, rng=args.seed, workers=args.workers
        )
    _emit(rep.to_dict(), args.output)
    return 0


def cmd_solve_form(args) -> int:
    g = form_from_json(_load_json(args.input))
    common = dict(rng=args.seed, trials=args.trials, workers=args.workers)
    if args.constraint == "sphere":
        rep = solve_GS(g, args.gamma, args.epsilon, **common)
    else:
        m = INF if args.constraint == "circle" else parse_m(args.m)
        mode = args.mode
        if mode == "auto":
            if is_square_free(g):
                mode = "squarefree"
            elif g.convex_asserted:
                mode = "convex"
            else:
                raise ParameterError("form is neither square-free nor flagged convex; pass a supported form")
        if mode == "convex":
            if not g.convex_asserted:
                g = g.with_convex_flag()
            rep = solve_Gm_convex(g, m, args.delta, args.epsilon, **common)
        else:
            rep = solve_Gm_squarefree(g, m, args.delta, args.epsilon, **common)
    _emit(rep.to_dict(), args.output)
    return 0


def cmd_oracle(args) -> int:
    problem = _load_problem(args.input)
    if args.constraint == "roots":
        m = parse_m(args.m)
        if isinstance(problem, ConjugateForm):
            res = brute_force_form_roots(problem, m)
        else:
            res = brute_force_multilinear_roots(problem, m)
    else:
        res = multistart_reference(problem, args.constraint, args.starts, RandomSource(args.seed).generator())
    _emit(res.to_dict(), args.output)
    return 0


def cmd_bench(args) -> int:
    cfg = dict(_load_json(args.config))
    if args.workers is not None:
        cfg["workers"] = args.workers
    if args.output is not None:
        cfg["output"] = args.output
    result = bench.run_experiment(cfg)
    s = result.summary
    if not cfg.get("output"):
        _emit(result.to_dict(), None)
    else:
        sys.stderr.write(f"{s['count']} rows, {s['failures']} failures (allowed {s['allowed_failures']})\n")
    return 1 if s["failures"] > s["allowed_failures"] else 0


def cmd_gen(args) -> int:
    rng = RandomSource(args.seed).generator()
    dims = [int(x) for x in args.dims.split(",")] if args.dims else None
    problem = bench.generate_instance(args.kind, args.n, args.d, args.density, rng, dims=dims)
    if isinstance(problem, np.ndarray):
        dump_tensor(problem, args.out)
    else:
        dump_form(problem, args.out)
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conjopt", description="Approximation algorithms for complex forms.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, workers=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--output", default=None, help="write JSON here instead of stdout")
        if workers:
            sp.add_argument("--workers", type=int, default=1, help="threads for independent trials")

    sp = sub.add_parser("verify-bounds", help="Monte Carlo check of the tail bounds")
    sp.add_argument("--model", choices=("roots", "sphere"), default="roots")
    sp.add_argument("--m", default="4")
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--samples", type=int, default=100_000)
    add_common(sp, workers=False)
    sp.set_defaults(func=cmd_verify_bounds)

    sp = sub.add_parser("verify-polarization", help="check the polarization identity on random forms")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--m", default="4")
    sp.add_argument("--instances", type=int, default=20)
    sp.add_argument("--samples", type=int, default=100_000, help="Monte Carlo samples when m = inf")
    add_common(sp, workers=False)
    sp.set_defaults(func=cmd_verify_polarization)

    sp = sub.add_parser("solve-multilinear", help="maximise Re F over roots, circle or sphere")
    sp.add_argument("--model", choices=("roots", "circle", "sphere"), default="roots")
    sp.add_argument("--m", default="4")
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--epsilon", type=float, default=0.05)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--strategy", choices=tuple(STRATEGIES), default="auto")
    sp.add_argument("--input", required=True)
    add_common(sp)
    sp.set_defaults(func=cmd_solve_multilinear)

    sp = sub.add_parser("solve-form", help="maximise a real-valued conjugate form")
    sp.add_argument("--constraint", choices=("roots", "circle", "sphere"), default="roots")
    sp.add_argument("--m", default="4")
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--epsilon", type=float, default=0.05)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--mode", choices=("auto", "convex", "squarefree"), default="auto")
    sp.add_argument("--input", required=True)
    add_common(sp)
    sp.set_defaults(func=cmd_solve_form)

    sp = sub.add_parser("oracle", help="exact enumeration or multi-start reference values")
    sp.add_argument("--input", required=True)
    sp.add_argument("--constraint", choices=("roots", "circle", "sphere"), default="roots")
    sp.add_argument("--m", default="4")
    sp.add_argument("--starts", type=int, default=1000)
    add_common(sp, workers=False)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("bench", help="run a seeded certification experiment")
    sp.add_argument("--config", required=True)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--output", default=None, help="prefix for <prefix>.csv and <prefix>.json")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("gen", help="write a random instance as JSON")
    sp.add_argument("--kind", choices=bench.KINDS, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--dims", default=None, help="comma-separated tensor dims (tensor kind only)")
    sp.add_argument("--density", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConjoptError, OSError, ValueError, KeyError) as exc:
        sys.stderr.write(f"conjopt: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
