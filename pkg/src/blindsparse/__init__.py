"""Sparse recovery under a bilinear forward model with unknown channel weights.

The package pairs an l1-ball spectral projected gradient solver with
closed-form elimination of per-channel complex source weights, and wraps
both in a safeguarded Newton iteration on the misfit value function so a
noise threshold can be targeted directly. A synthetic instance generator,
brute-force oracles and an experiment CLI round out the toolkit.
"""

from .linops import (LinearOperator, adjoint_test, compose, from_matrix,
                     identity, make_fourier_restriction,
                     make_sparsifying_transform, materialize)
from .pareto import (ParetoConfig, ParetoStep, ParetoTrace, solve_bpdn,
                     solve_fixed_weights, value_function)
from .projections import project_l1, project_l1_oracle
from .spg import (SpgConfig, SubproblemResult, projected_gradient_residual,
                  solve_lasso)
from .synth import (GroundTruth, ProblemSpec, RecoveryMetrics, generate,
                    generate_record, instantiate, joint_oracle,
                    recovery_metrics)
from .varpro import (Instance, ObjectiveEval, eval_fixed_weight_objective,
                     eval_projected_objective, normalize_pair, solve_weights)

__version__ = "0.1.0"

__all__ = [
    "LinearOperator", "adjoint_test", "compose", "from_matrix", "identity",
    "make_fourier_restriction", "make_sparsifying_transform", "materialize",
    "project_l1", "project_l1_oracle",
    "Instance", "ObjectiveEval", "eval_fixed_weight_objective",
    "eval_projected_objective", "normalize_pair", "solve_weights",
    "SpgConfig", "SubproblemResult", "projected_gradient_residual", "solve_lasso",
    "ParetoConfig", "ParetoStep", "ParetoTrace", "solve_bpdn",
    "solve_fixed_weights", "value_function",
    "GroundTruth", "ProblemSpec", "RecoveryMetrics", "generate",
    "generate_record", "instantiate", "joint_oracle", "recovery_metrics",
    "__version__",
]
