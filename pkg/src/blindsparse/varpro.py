"""Variable projection of per-channel source weights.

The data model is ``d_i = alpha_i * B_i x + noise`` with real coefficients
``x``, complex data ``d_i`` and one unknown complex scalar weight per
channel. For fixed ``x`` the optimal weights have the closed form

    alpha_i(x) = <u_i, d_i> / ||u_i||^2,   u_i = B_i x,

with the inner product conjugate-linear in ``u_i``. Substituting them into
the misfit gives the projected objective; its gradient equals the partial
x-gradient of the fixed-weight misfit evaluated at the projected weights,
which is what makes the elimination cheap.

The gradient uses the conjugated weight and a real-part extraction,
``-2 sum_i Re(B_i^H (conj(alpha_i) r_i))``: for complex data and a real
coefficient vector this is the actual derivative of the real-valued misfit,
and the finite-difference tests enforce it. The factor 2 from the squared
norm is kept explicitly for the same reason.

Per-channel work is independent; the gradient is accumulated in channel
order so results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linops import LinearOperator


@dataclass(frozen=True)
class Instance:
    """A multichannel measurement problem.

    ``channels[i]`` is the composed measurement map ``B_i`` for channel
    ``i`` (all sharing one domain dimension), ``data[i]`` the corresponding
    complex data vector, and ``sigma`` the noise threshold used by the
    root-finding driver.
    """

    channels: tuple[LinearOperator, ...]
    data: tuple[np.ndarray, ...]
    sigma: float = 0.0

    def __post_init__(self):
        channels = tuple(self.channels)
        data = tuple(np.asarray(d, dtype=complex) for d in self.data)
        if len(channels) < 1 or len(channels) != len(data):
            raise ValueError("need an equal, nonzero number of channels and data vectors")
        dim = channels[0].domain_dim
        for i, (ch, d) in enumerate(zip(channels, data)):
            if ch.domain_dim != dim:
                raise ValueError(f"channel {i} domain dim {ch.domain_dim} != {dim}")
            if d.shape != (ch.range_dim,):
                raise ValueError(f"data vector {i} has shape {d.shape}, "
                                 f"expected ({ch.range_dim},)")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "data", data)

    @property
    def n_channels(self):
        return len(self.channels)

    @property
    def domain_dim(self):
        return self.channels[0].domain_dim

    @property
    def data_energy(self):
        """Total squared data norm, the misfit value at x = 0."""
        return float(sum(np.vdot(d, d).real for d in self.data))


@dataclass
class ObjectiveEval:
    """Misfit value, gradient, weights and residuals at one point."""

    value: float
    gradient: np.ndarray
    weights: np.ndarray
    residuals: tuple[np.ndarray, ...] = field(repr=False, default=())


def _check_x(inst, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.domain_dim,):
        raise ValueError(f"x has shape {x.shape}, expected ({inst.domain_dim},)")
    return x


def solve_weights(inst, x):
    """Closed-form per-channel weights minimizing ``||d_i - alpha u_i||^2``.

    A channel whose prediction ``u_i = B_i x`` vanishes gets weight 0, the
    minimum-norm member of its minimizer set; this keeps gradients bounded.
    """
    x = _check_x(inst, x)
    alpha = np.zeros(inst.n_channels, dtype=complex)
    for i, (ch, d) in enumerate(zip(inst.channels, inst.data)):
        u = ch.forward(x)
        denom = np.vdot(u, u).real
        if denom > 0.0:
            alpha[i] = np.vdot(u, d) / denom
    return alpha


def eval_fixed_weight_objective(inst, x, alpha):
    """Misfit and x-gradient for externally supplied weights."""
    x = _check_x(inst, x)
    alpha = np.asarray(alpha, dtype=complex)
    if alpha.shape != (inst.n_channels,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({inst.n_channels},)")
    value = 0.0
    gradient = np.zeros(inst.domain_dim)
    residuals = []
    for ch, d, a in zip(inst.channels, inst.data, alpha):
        u = ch.forward(x)
        r = d - a * u
        residuals.append(r)
        value += np.vdot(r, r).real
        gradient -= 2.0 * np.real(ch.adjoint(np.conj(a) * r))
    return ObjectiveEval(value=value, gradient=gradient, weights=alpha,
                         residuals=tuple(residuals))


def eval_projected_objective(inst, x):
    """Misfit and gradient with the weights eliminated at ``x``.

    Same code path as the fixed-weight evaluation, called at the projected
    weights; the gradient identity of variable projection says that is the
    full derivative of the projected objective.
    """
    return eval_fixed_weight_objective(inst, x, solve_weights(inst, x))


def normalize_pair(x, alpha, target_norm=1.0):
    """Rescale ``(x, alpha)`` along the gauge direction.

    Returns ``(x * c, alpha / c)`` with ``c > 0`` chosen so that the
    rescaled weights have l2 norm ``target_norm``. The products
    ``alpha_i * B_i x`` are unchanged up to roundoff, so every misfit value
    is preserved.
    """
    if target_norm <= 0:
        raise ValueError("target_norm must be positive")
    x = np.asarray(x, dtype=float)
    alpha = np.asarray(alpha, dtype=complex)
    nrm = np.linalg.norm(alpha)
    if nrm == 0.0:
        raise ValueError("cannot normalize an all-zero weight vector")
    c = nrm / target_norm
    return x * c, alpha / c
