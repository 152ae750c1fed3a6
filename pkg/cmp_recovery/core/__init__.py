"""
核心模块
"""
from .error_handler import CMPError, ErrorCategory, handle_error, handle_exception
from .linalg import (
    MeasurementMatrix, gram, counterexample_matrix, extended_counterexample, load_matrix_csv,
    load_vector_csv, random_unit_matrix
)
from .constraint import (
    BoxProduct, WeightedSimplex, NonconvexDemo, Hyperplane, ConeClassification,
    classify_cone, decompose, conic_hull, parse_constraint, load_constraint
)
from .lp import motzkin_alternative, feasible_eq_nonneg, positive_dual_solution
from .restricted_solver import solve_restricted, nnls, bvls
from .oracle import nonconvex_restricted_solve, l0_brute, omp_reference
from .pursuit import (
    PursuitConfig, PursuitTrace, TieRule, cmp_run, cmp_run_all_branches, verify_exact_recovery,
    coordinate_score, replay_trace
)
from .certify import (
    Verdict, erc_norm, motzkin_dominance, check_fixed_support, condition_H_falsify, condition_H_margin,
    instance_certificate, recovery_constants, perturbation_stability, verify_counterexample
)
from .experiment import ExperimentConfig, MonteCarloRunner, plant_sparse_vector, write_csv

__all__ = [
    'CMPError',
    'ErrorCategory',
    'handle_error',
    'handle_exception',
    'MeasurementMatrix',
    'gram',
    'counterexample_matrix',
    'extended_counterexample',
    'load_matrix_csv',
    'load_vector_csv',
    'random_unit_matrix',
    'BoxProduct',
    'WeightedSimplex',
    'NonconvexDemo',
    'Hyperplane',
    'ConeClassification',
    'classify_cone',
    'decompose',
    'conic_hull',
    'parse_constraint',
    'load_constraint',
    'motzkin_alternative',
    'feasible_eq_nonneg',
    'positive_dual_solution',
    'solve_restricted',
    'nnls',
    'bvls',
    'nonconvex_restricted_solve',
    'l0_brute',
    'omp_reference',
    'PursuitConfig',
    'PursuitTrace',
    'TieRule',
    'cmp_run',
    'cmp_run_all_branches',
    'verify_exact_recovery',
    'coordinate_score',
    'replay_trace',
    'Verdict',
    'erc_norm',
    'motzkin_dominance',
    'check_fixed_support',
    'condition_H_falsify',
    'condition_H_margin',
    'instance_certificate',
    'recovery_constants',
    'perturbation_stability',
    'verify_counterexample',
    'ExperimentConfig',
    'MonteCarloRunner',
    'plant_sparse_vector',
    'write_csv'
]
