"""Matrix-free linear operators with verified adjoints.

An operator maps a (usually real) coefficient space to a (usually complex)
data space through explicit forward/adjoint callables. The adjoint is always
the full conjugate-transpose action, so the dot-product identity
``<A u, w> == <u, A^H w>`` (inner product conjugating its second argument)
holds exactly even when the domain is real and the range complex. Real-part
extraction, where the model needs it, is the caller's job; see the gradient
code in :mod:`blindsparse.varpro`.

Operators are immutable after construction and safe to apply concurrently.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dct, idct

_TINY = np.finfo(np.float64).tiny

TRANSFORM_KINDS = ("identity", "orthonormal-wavelet", "dct")


class LinearOperator:
    """Linear map defined by a forward/adjoint pair of callables.

    Parameters
    ----------
    domain_dim, range_dim : int
        Input and output lengths of the forward map.
    forward, adjoint : callable
        ``forward(u)`` maps a length-``domain_dim`` vector to a
        length-``range_dim`` vector; ``adjoint(w)`` applies the
        conjugate-transpose action.
    domain_field, range_field : {"real", "complex"}
        Field of the intended inputs/outputs. A real-domain operator may
        still return complex vectors from ``adjoint``; that is deliberate
        (see the module docstring).

    Notes
    -----
    Input lengths are checked on every application; a mismatch raises
    ``ValueError`` rather than truncating silently.
    """

    def __init__(self, domain_dim, range_dim, forward, adjoint,
                 domain_field="real", range_field="complex"):
        if domain_dim < 1 or range_dim < 1:
            raise ValueError("operator dimensions must be positive")
        for field in (domain_field, range_field):
            if field not in ("real", "complex"):
                raise ValueError(f"unknown field {field!r}")
        self.domain_dim = int(domain_dim)
        self.range_dim = int(range_dim)
        self.domain_field = domain_field
        self.range_field = range_field
        self._forward = forward
        self._adjoint = adjoint

    def forward(self, u):
        """Apply the operator: returns ``A u``."""
        u = np.asarray(u)
        if u.shape != (self.domain_dim,):
            raise ValueError(
                f"forward input has shape {u.shape}, expected ({self.domain_dim},)")
        return self._forward(u)

    def adjoint(self, w):
        """Apply the conjugate-transpose: returns ``A^H w``."""
        w = np.asarray(w)
        if w.shape != (self.range_dim,):
            raise ValueError(
                f"adjoint input has shape {w.shape}, expected ({self.range_dim},)")
        return self._adjoint(w)

    def __repr__(self):
        return (f"LinearOperator({self.domain_dim}->{self.range_dim}, "
                f"{self.domain_field}->{self.range_field})")


def identity(n, field="real"):
    """Identity operator on length-``n`` vectors."""
    return LinearOperator(n, n,
                          lambda u: np.array(u, copy=True),
                          lambda w: np.array(w, copy=True),
                          domain_field=field, range_field=field)


def from_matrix(a, domain_field=None, range_field=None):
    """Wrap a dense matrix as an operator; adjoint is the conjugate transpose."""
    a = np.atleast_2d(np.asarray(a))
    inferred = "complex" if np.iscomplexobj(a) else "real"
    ah = a.conj().T
    return LinearOperator(a.shape[1], a.shape[0],
                          lambda u: a @ u, lambda w: ah @ w,
                          domain_field=domain_field or inferred,
                          range_field=range_field or inferred)


def compose(outer, inner):
    """Composition ``outer @ inner``; adjoint is ``inner^H @ outer^H``."""
    if inner.range_dim != outer.domain_dim:
        raise ValueError(
            f"cannot compose: inner range {inner.range_dim} != outer domain {outer.domain_dim}")
    return LinearOperator(inner.domain_dim, outer.range_dim,
                          lambda u: outer.forward(inner.forward(u)),
                          lambda w: inner.adjoint(outer.adjoint(w)),
                          domain_field=inner.domain_field,
                          range_field=outer.range_field)


def make_fourier_restriction(n, rows, spectrum):
    """Restricted DFT measurement operator.

    Maps a real length-``n`` vector to the DFT coefficients selected by
    ``rows``, each multiplied by its ``spectrum`` entry. The DFT convention
    is the unnormalized forward transform, ``X_k = sum_t u_t e^(-2*pi*i*k*t/n)``;
    the adjoint embeds conjugated entries and applies ``n * ifft``, which
    makes the dot-product test exact.

    Duplicate row indices are allowed; the adjoint accumulates them.
    """
    rows = np.asarray(rows, dtype=int)
    spectrum = np.asarray(spectrum, dtype=complex)
    if rows.ndim != 1 or spectrum.shape != rows.shape:
        raise ValueError("rows and spectrum must be 1-d and of equal length")
    if rows.size == 0:
        raise ValueError("at least one row is required")
    if np.any((rows < 0) | (rows >= n)):
        raise ValueError(f"row indices must lie in [0, {n})")

    def _fwd(u):
        return np.fft.fft(u)[rows] * spectrum

    def _adj(w):
        z = np.zeros(n, dtype=complex)
        np.add.at(z, rows, np.conj(spectrum) * w)
        return n * np.fft.ifft(z)

    return LinearOperator(n, rows.size, _fwd, _adj,
                          domain_field="real", range_field="complex")


def _work_dtype(v):
    return complex if np.iscomplexobj(v) else float


def _haar_forward(u):
    # analysis: averages/differences with 1/sqrt(2) scaling, Mallat ordering
    out = np.array(u, dtype=_work_dtype(u))
    length = out.size
    while length > 1:
        half = length // 2
        even = out[0:length:2].copy()
        odd = out[1:length:2].copy()
        out[:half] = (even + odd) / np.sqrt(2.0)
        out[half:length] = (even - odd) / np.sqrt(2.0)
        length = half
    return out


def _haar_inverse(w):
    out = np.array(w, dtype=_work_dtype(w))
    length = 1
    while length < out.size:
        approx = out[:length].copy()
        detail = out[length:2 * length].copy()
        out[0:2 * length:2] = (approx + detail) / np.sqrt(2.0)
        out[1:2 * length:2] = (approx - detail) / np.sqrt(2.0)
        length *= 2
    return out


def _dct_forward(u):
    if np.iscomplexobj(u):
        return dct(u.real, type=2, norm="ortho") + 1j * dct(u.imag, type=2, norm="ortho")
    return dct(np.asarray(u, dtype=float), type=2, norm="ortho")


def _dct_adjoint(w):
    if np.iscomplexobj(w):
        return idct(w.real, type=2, norm="ortho") + 1j * idct(w.imag, type=2, norm="ortho")
    return idct(np.asarray(w, dtype=float), type=2, norm="ortho")


def make_sparsifying_transform(kind, n):
    """Real orthonormal transform of length ``n``.

    ``kind`` is one of ``identity``, ``dct`` (orthonormal DCT-II) or
    ``orthonormal-wavelet`` (Haar; ``n`` must be a power of two). The
    forward direction is the analysis transform, so a constant vector maps
    to a pure DC coefficient; the adjoint equals the inverse. The transforms
    have real matrices but accept complex vectors, which composed adjoints
    rely on.
    """
    if kind == "identity":
        return LinearOperator(n, n,
                              lambda u: np.array(u, copy=True),
                              lambda w: np.array(w, copy=True),
                              domain_field="real", range_field="real")
    if kind == "dct":
        return LinearOperator(n, n, _dct_forward, _dct_adjoint,
                              domain_field="real", range_field="real")
    if kind == "orthonormal-wavelet":
        if n < 1 or (n & (n - 1)) != 0:
            raise ValueError(f"wavelet transform needs a power-of-two length, got {n}")
        return LinearOperator(n, n, _haar_forward, _haar_inverse,
                              domain_field="real", range_field="real")
    raise ValueError(f"unknown transform kind {kind!r}; choose from {TRANSFORM_KINDS}")


def materialize(op):
    """Densify an operator column by column (intended for small oracle tests)."""
    dtype = complex if "complex" in (op.domain_field, op.range_field) else float
    mat = np.empty((op.range_dim, op.domain_dim), dtype=dtype)
    basis = np.zeros(op.domain_dim)
    for j in range(op.domain_dim):
        basis[j] = 1.0
        mat[:, j] = op.forward(basis)
        basis[j] = 0.0
    return mat


def _draw(rng, n, field):
    if field == "complex":
        return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    return rng.standard_normal(n)


def adjoint_test(op, trials=20, seed=0):
    """Randomized dot-product test.

    Returns the maximum over ``trials`` of
    ``|<A u, w> - <u, A^H w>| / (||A u|| * ||w|| + tiny)`` with ``u`` and
    ``w`` drawn from a seeded standard (complex) normal. A correct
    forward/adjoint pair scores at roundoff level; a corrupted one scores
    order one.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = _draw(rng, op.domain_dim, op.domain_field)
        w = _draw(rng, op.range_dim, op.range_field)
        au = op.forward(u)
        ahw = op.adjoint(w)
        lhs = np.vdot(w, au)        # <A u, w> with conjugation on w
        rhs = np.vdot(ahw, u)       # <u, A^H w>
        denom = np.linalg.norm(au) * np.linalg.norm(w) + _TINY
        worst = max(worst, abs(lhs - rhs) / denom)
    return worst
