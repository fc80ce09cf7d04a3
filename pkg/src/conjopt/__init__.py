"""Randomized approximation algorithms for complex multilinear and conjugate forms."""

from __future__ import annotations

from .conjugate_forms import (
    ConjugateForm,
    eval_form,
    eval_form_batch,
    extract_linear_coefficient,
    form_from_coefficients,
    form_to_tensor,
    is_square_free,
    tensor_to_form,
)
from .conjugate_solvers import (
    GSolveReport,
    build_h_tensor,
    hessian_sample,
    round_to_vertices,
    solve_Gm_convex,
    solve_Gm_squarefree,
    solve_GS,
)
from .multilinear_solvers import (
    AlternatingMaximization,
    ExactEnumeration,
    PowerSVD,
    SolveReport,
    largest_singular_pair,
    ratio_LS,
    ratio_Lm,
    solve_bilinear_circle,
    solve_bilinear_roots,
    solve_LS,
    solve_Lm,
)
from .oracle import OracleResult, brute_force_form_roots, brute_force_multilinear_roots, multistart_reference
from .polarization import build_u, build_v, polarization_residual
from .sampling import INF, RandomSource, RootsOfUnity, Sphere, UnitCircle
from .tensor_core import contract, eval_multilinear, is_conjugate_super_symmetric, symmetrize

__version__ = "0.1.0"
