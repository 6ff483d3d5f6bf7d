"""Newton root finding on the value function of the l1-constrained misfit.

The value function ``v(tau)`` is the optimal misfit of the radius-``tau``
subproblem; driving ``v(tau) = sigma^2`` solves the threshold-constrained
formulation. The slope comes from the frozen-weight approximation

    v'(tau) ~= -||Re(sum_i conj(alpha_i) B_i^H r_i)||_inf

evaluated at the subproblem solution. The formula is approximate (the
weights are treated as fixed) and is implemented without the factor 2 a
squared residual would contribute; both effects only rescale the Newton
step, and the bracket-plus-bisection safeguard keeps the iteration
convergent regardless.

Since the eliminated weights give a zero slope at ``tau = 0``, the first
radius comes from one unit-weight evaluation,
``tau_0 = (v(0) - sigma^2) / ||Re(sum_i B_i^H d_i)||_inf``.

With ``sigma = 0`` and a finite iteration budget the driver degrades into
the fixed-budget mode: it keeps taking Newton steps, solving each
subproblem inexactly, until the cumulative inner-iteration budget runs out,
and returns the last iterate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .projections import project_l1
from .spg import STATUS_CONVERGED, SpgConfig, solve_lasso
from .varpro import eval_fixed_weight_objective

STATUS_ROOT_FOUND = "root-found"
STATUS_BUDGET_EXHAUSTED = "budget-exhausted"
STATUS_INFEASIBLE_SIGMA = "infeasible-sigma"

_FLAT_SLOPE = -1e-30


@dataclass
class ParetoConfig:
    """Outer-loop knobs.

    ``root_tol`` is relative: the rooting stops when
    ``|v(tau) - sigma^2| <= root_tol * max(1, sigma^2)``.
    ``total_iteration_budget`` caps cumulative inner iterations across all
    subproblems, which is the whole stopping rule in the ``sigma = 0`` mode.
    """

    sigma: float = 0.0
    root_tol: float = 1e-4
    max_newton_steps: int = 30
    total_iteration_budget: int = 150
    subproblem_cfg: SpgConfig = field(default_factory=SpgConfig)
    bracket_expansion: float = 2.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.root_tol <= 0:
            raise ValueError("root_tol must be positive")
        if self.total_iteration_budget < 1:
            raise ValueError("total_iteration_budget must be >= 1")
        if self.max_newton_steps < 1:
            raise ValueError("max_newton_steps must be >= 1")
        if self.bracket_expansion <= 1:
            raise ValueError("bracket_expansion must exceed 1")


@dataclass
class ParetoStep:
    """One evaluated radius: ``(tau, v(tau), v'(tau), inner iterations)``."""

    tau: float
    value: float
    derivative: float
    inner_iterations: int
    history: list[tuple[float, float, float]] = field(default_factory=list, repr=False)


@dataclass
class ParetoTrace:
    steps: list[ParetoStep]
    final_x: np.ndarray
    final_weights: np.ndarray
    status: str

    @property
    def final_tau(self):
        return self.steps[-1].tau if self.steps else 0.0

    @property
    def final_value(self):
        return self.steps[-1].value if self.steps else float("nan")

    @property
    def total_inner_iterations(self):
        return sum(s.inner_iterations for s in self.steps)


def value_function(inst, tau, warm_start=None, cfg=None, alpha=None):
    """Evaluate ``(v(tau), v'(tau))`` by solving the subproblem at ``tau``.

    Returns the triple ``(v, v_prime, result)``; ``v_prime <= 0`` always
    (it is the negated dual quantity of the subproblem solution, with the
    weights frozen at their values there).
    """
    result = solve_lasso(inst, tau, x0=warm_start, cfg=cfg, alpha=alpha)
    return result.value, -result.dual_quantity, result


def _unit_weight_slope(inst, alpha):
    if alpha is None:
        alpha = np.ones(inst.n_channels, dtype=complex)
    grad0 = eval_fixed_weight_objective(inst, np.zeros(inst.domain_dim), alpha).gradient
    return float(np.max(np.abs(grad0))) / 2.0


def _solve_root(inst, cfg, alpha=None):
    sig2 = cfg.sigma ** 2
    tol = cfg.root_tol * max(1.0, sig2)
    v0 = inst.data_energy
    zero_weights = (np.zeros(inst.n_channels, dtype=complex) if alpha is None
                    else np.asarray(alpha, dtype=complex))

    if v0 - sig2 <= tol:
        # the origin already meets the threshold
        step = ParetoStep(0.0, v0, 0.0, 0)
        return ParetoTrace([step], np.zeros(inst.domain_dim), zero_weights,
                           STATUS_ROOT_FOUND)

    slope0 = _unit_weight_slope(inst, alpha)
    steps = [ParetoStep(0.0, v0, -slope0, 0)]
    if slope0 == 0.0:
        # data orthogonal to the model range: no radius can reduce the misfit
        return ParetoTrace(steps, np.zeros(inst.domain_dim), zero_weights,
                           STATUS_INFEASIBLE_SIGMA)

    tau_lo, tau_hi = 0.0, float("inf")
    tau_next = (v0 - sig2) / slope0
    used = 0
    x = np.zeros(inst.domain_dim)
    weights = zero_weights
    prev_x = None
    status = STATUS_BUDGET_EXHAUSTED

    for _ in range(cfg.max_newton_steps):
        remaining = cfg.total_iteration_budget - used
        if remaining <= 0:
            break
        sub_cfg = replace(cfg.subproblem_cfg,
                          max_iters=min(cfg.subproblem_cfg.max_iters, remaining))
        warm = None if prev_x is None else project_l1(prev_x, tau_next)
        v, vp, result = value_function(inst, tau_next, warm_start=warm,
                                       cfg=sub_cfg, alpha=alpha)
        used += result.iterations
        steps.append(ParetoStep(tau_next, v, vp, result.iterations,
                                history=result.history))
        x, weights, prev_x = result.x, result.weights, result.x

        if abs(v - sig2) <= tol:
            status = STATUS_ROOT_FOUND
            break
        if v > sig2:
            tau_lo = tau_next
        else:
            tau_hi = tau_next
        if (vp >= _FLAT_SLOPE and v > sig2 + tol
                and result.status == STATUS_CONVERGED):
            # solved subproblem with a vanishing dual quantity: v has
            # flattened above the target, the threshold is unreachable
            status = STATUS_INFEASIBLE_SIGMA
            break

        proposal = tau_next - (v - sig2) / vp if vp < _FLAT_SLOPE else None
        if proposal is not None and tau_lo < proposal < tau_hi:
            tau_next = proposal
        elif np.isfinite(tau_hi):
            tau_next = 0.5 * (tau_lo + tau_hi)
        else:
            tau_next = max(tau_lo, tau_next) * cfg.bracket_expansion

    return ParetoTrace(steps, x, weights, status)


def solve_bpdn(inst, cfg):
    """Threshold-constrained solve with weights estimated on the fly."""
    return _solve_root(inst, cfg, alpha=None)


def solve_fixed_weights(inst, alpha, cfg):
    """Same pipeline with the channel weights held at ``alpha`` throughout."""
    alpha = np.asarray(alpha, dtype=complex)
    if alpha.shape != (inst.n_channels,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({inst.n_channels},)")
    return _solve_root(inst, cfg, alpha=alpha)
