"""Spectral projected gradient solver for the l1-constrained subproblem.

Solves ``min_x misfit(x) s.t. ||x||_1 <= tau`` where the misfit either
eliminates the channel weights at every evaluation (including line-search
trial points, which is the full variable-projection scheme rather than
alternation) or keeps them fixed for the baseline modes.

The iteration is ``x+ = P(x - t * grad)`` with the BB1 spectral step,
safeguarded by a nonmonotone backtracking line search against the largest
of the last ``memory`` objective values. The solver is deterministic: no
randomness, and per-channel reductions run in a fixed order.

Because the eliminated weights vanish at ``x = 0``, the origin is always a
stationary point of the projected objective; when no starting point is
supplied the solver therefore bootstraps from a projected matched-filter
point (phase-aligned across channels when the weights are unknown), never
from 0 itself.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .projections import project_l1
from .varpro import eval_fixed_weight_objective, eval_projected_objective

STATUS_CONVERGED = "converged"
STATUS_ITERATION_LIMIT = "iteration-limit"
STATUS_STALLED = "stalled"


@dataclass
class SpgConfig:
    """Inner-solver knobs.

    ``opt_tol`` bounds the projected-gradient residual
    ``||P(x - grad) - x||_2`` at exit; ``memory`` is the nonmonotone
    line-search history length (1 gives a monotone method).
    """

    max_iters: int = 300
    opt_tol: float = 1e-6
    step_min: float = 1e-10
    step_max: float = 1e10
    memory: int = 3
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 30

    def __post_init__(self):
        if not (0 < self.step_min <= self.step_max):
            raise ValueError("need 0 < step_min <= step_max")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if not (0 < self.sufficient_decrease < 1):
            raise ValueError("sufficient_decrease must lie in (0, 1)")
        if self.max_iters < 0 or self.max_backtracks < 1:
            raise ValueError("max_iters must be >= 0 and max_backtracks >= 1")


@dataclass
class SubproblemResult:
    """Outcome of one l1-constrained solve.

    ``history`` holds one ``(value, projected_gradient_norm, step)`` triple
    per accepted iterate, starting with the initial point. ``dual_quantity``
    is ``||Re(sum_i conj(alpha_i) B_i^H r_i)||_inf`` at the final point; the
    root-finding driver uses its negative as the value-function slope.
    """

    x: np.ndarray
    weights: np.ndarray
    value: float
    dual_quantity: float
    iterations: int
    history: list[tuple[float, float, float]] = field(repr=False)
    status: str = STATUS_CONVERGED


def _make_objective(inst, alpha):
    if alpha is None:
        return lambda x: eval_projected_objective(inst, x)
    alpha = np.asarray(alpha, dtype=complex)
    return lambda x: eval_fixed_weight_objective(inst, x, alpha)


def default_start(inst, tau, alpha=None):
    """Bootstrap point: one projected step along a matched-filter direction.

    With fixed weights the direction is the exact steepest descent of the
    misfit at the origin. With eliminated weights the origin offers no
    usable gradient (the optimal weights vanish there), and summing raw
    backprojections is badly biased when the true weights carry phase, so
    each channel's backprojection is first rotated by the conjugate phase it
    shows at the strongest joint-energy index (a weight-phase estimate off
    the dominant spike) and then summed. Returns the zero vector only when
    the data are identically zero.
    """
    if tau == 0.0:
        return np.zeros(inst.domain_dim)
    backprojections = [ch.adjoint(d) for ch, d in zip(inst.channels, inst.data)]
    if alpha is not None:
        alpha = np.asarray(alpha, dtype=complex)
        descent = 2.0 * sum(np.real(np.conj(a) * bp)
                            for a, bp in zip(alpha, backprojections))
    else:
        energy = sum(np.abs(bp) ** 2 for bp in backprojections)
        anchor = int(np.argmax(energy))
        descent = np.zeros(inst.domain_dim)
        for bp in backprojections:
            phase = bp[anchor]
            if abs(phase) > 0.0:
                descent += np.real(np.conj(phase / abs(phase)) * bp)
            else:
                descent += np.real(bp)
    nrm = np.linalg.norm(descent)
    if nrm == 0.0:
        return np.zeros(inst.domain_dim)
    return project_l1(descent * (tau / nrm), tau)


def solve_lasso(inst, tau, x0=None, cfg=None, alpha=None):
    """Solve the l1-constrained misfit minimization for one radius.

    Parameters
    ----------
    inst : Instance
        The multichannel problem.
    tau : float
        l1-ball radius, >= 0.
    x0 : ndarray, optional
        Starting point; it is projected onto the ball first. Defaults to
        the fixed-weight bootstrap point (see :func:`default_start`).
    cfg : SpgConfig, optional
    alpha : ndarray, optional
        Fixed channel weights. When omitted the weights are re-eliminated
        at every objective evaluation.

    Returns
    -------
    SubproblemResult
        Non-convergence is reported through ``status``, never raised.
    """
    cfg = cfg or SpgConfig()
    if not np.isfinite(tau) or tau < 0:
        raise ValueError(f"tau must be finite and nonnegative, got {tau}")
    evaluate = _make_objective(inst, alpha)

    if tau == 0.0:
        x = np.zeros(inst.domain_dim)
        ev = evaluate(x)
        return SubproblemResult(x=x, weights=ev.weights, value=ev.value,
                                dual_quantity=float(np.max(np.abs(ev.gradient))) / 2.0,
                                iterations=0, history=[(ev.value, 0.0, 0.0)],
                                status=STATUS_CONVERGED)

    if x0 is None:
        x = default_start(inst, tau, alpha=alpha)
    else:
        x = project_l1(x0, tau)

    ev = evaluate(x)
    f, g = ev.value, ev.gradient
    pg_res = np.linalg.norm(project_l1(x - g, tau) - x)
    history = [(f, pg_res, 0.0)]
    last_f = deque([f], maxlen=cfg.memory)
    status = STATUS_ITERATION_LIMIT
    iterations = 0

    # initial spectral step from the scaled projected gradient direction
    dx = project_l1(x - g, tau) - x
    dx_inf = np.max(np.abs(dx)) if dx.size else 0.0
    if dx_inf < 1.0 / cfg.step_max:
        t = cfg.step_max
    else:
        t = min(cfg.step_max, max(cfg.step_min, 1.0 / dx_inf))

    if pg_res <= cfg.opt_tol:
        status = STATUS_CONVERGED
        return SubproblemResult(x=x, weights=ev.weights, value=f,
                                dual_quantity=float(np.max(np.abs(g))) / 2.0,
                                iterations=0, history=history, status=status)

    for _ in range(cfg.max_iters):
        f_ref = max(last_f)
        scale = 1.0
        accepted = None
        for _ in range(cfg.max_backtracks):
            x_try = project_l1(x - scale * t * g, tau)
            step_dir = x_try - x
            gtd = float(np.dot(g, step_dir))
            if gtd >= 0.0:
                break  # projection arc gave no descent direction: stalled
            ev_try = evaluate(x_try)
            if ev_try.value <= f_ref + cfg.sufficient_decrease * gtd:
                accepted = (x_try, ev_try, scale * t)
                break
            scale *= 0.5
        if accepted is None:
            status = STATUS_STALLED
            break

        x_new, ev_new, step_used = accepted
        delta_x = x_new - x
        delta_g = ev_new.gradient - g
        x, ev = x_new, ev_new
        f, g = ev.value, ev.gradient
        last_f.append(f)
        iterations += 1

        sts = float(np.dot(delta_x, delta_x))
        sty = float(np.dot(delta_x, delta_g))
        t = cfg.step_max if sty <= 0.0 else min(cfg.step_max, max(cfg.step_min, sts / sty))

        pg_res = np.linalg.norm(project_l1(x - g, tau) - x)
        history.append((f, pg_res, step_used))
        if pg_res <= cfg.opt_tol:
            status = STATUS_CONVERGED
            break

    return SubproblemResult(x=x, weights=ev.weights, value=f,
                            dual_quantity=float(np.max(np.abs(g))) / 2.0,
                            iterations=iterations, history=history, status=status)


def projected_gradient_residual(inst, x, tau, alpha=None):
    """Stationarity measure ``||P(x - grad(x)) - x||_2`` at a feasible x."""
    x = np.asarray(x, dtype=float)
    if np.abs(x).sum() > tau * (1.0 + 1e-10):
        raise ValueError("x is infeasible for the given radius")
    ev = _make_objective(inst, alpha)(x)
    return float(np.linalg.norm(project_l1(x - ev.gradient, tau) - x))
