"""Synthetic instances with known ground truth, plus brute-force oracles.

Instances place ``k`` spikes in the coefficient domain, measure them
through per-channel restricted DFT operators over disjoint frequency bands
(composed with an orthonormal sparsifying transform), weight each channel
by an unknown complex scalar, and optionally add complex Gaussian noise of
a prescribed relative size. Disjoint bands keep the per-channel weights
identifiable up to the single global real gauge factor.

Generation is a pure function of a ``ProblemSpec``: the same spec yields a
bit-identical instance. ``generate_record`` emits a plain-dict description
(the textual interchange format of the ``generate`` CLI subcommand) and
``instantiate`` rebuilds operators and data from it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .linops import (TRANSFORM_KINDS, compose, make_fourier_restriction,
                     make_sparsifying_transform, materialize)
from .projections import project_l1
from .spg import STATUS_CONVERGED, SubproblemResult
from .varpro import Instance, normalize_pair

WEIGHT_MODELS = ("flat", "random-phase", "ricker-spectrum")

RECORD_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ProblemSpec:
    """Parameters of one synthetic problem.

    The default sizes give ``channels * rows_per_channel = 120`` complex
    measurements against 256 unknowns, an underdetermined system with a
    row/column ratio close to one half.
    """

    n: int = 256
    k: int = 8
    channels: int = 6
    rows_per_channel: int = 20
    weight_model: str = "ricker-spectrum"
    noise_level: float = 0.0
    seed: int = 0
    transform: str = "identity"

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("signal length must be at least 4")
        if not (1 <= self.k <= self.n):
            raise ValueError("need 1 <= k <= n")
        if self.channels < 1 or self.rows_per_channel < 1:
            raise ValueError("channels and rows_per_channel must be >= 1")
        if self.weight_model not in WEIGHT_MODELS:
            raise ValueError(f"unknown weight model {self.weight_model!r}; "
                             f"choose from {WEIGHT_MODELS}")
        if self.transform not in TRANSFORM_KINDS:
            raise ValueError(f"unknown transform {self.transform!r}; "
                             f"choose from {TRANSFORM_KINDS}")
        if self.noise_level < 0:
            raise ValueError("noise_level must be nonnegative")


@dataclass(frozen=True)
class GroundTruth:
    """True coefficients, channel weights and the synthesized signal."""

    x_true: np.ndarray
    alpha_true: np.ndarray
    y_true: np.ndarray


def _channel_bands(spec, rng):
    # Bands over frequencies 0..n/2 (DC and Nyquist included; leaving them
    # unmeasured would add null directions beyond the scale gauge). When the
    # requested rows fit, each channel samples a disjoint contiguous block.
    # When they do not (dense sampling makes the bilinear model identifiable
    # up to its scale gauge), channels take equispaced overlapping windows
    # instead; overlap changes nothing about per-channel weight recovery,
    # each channel still owns a single scalar against its own data.
    available = np.arange(0, spec.n // 2 + 1)
    if spec.rows_per_channel > available.size:
        raise ValueError(
            f"rows_per_channel={spec.rows_per_channel} exceeds the "
            f"{available.size} usable frequencies for n={spec.n}")
    if spec.channels * spec.rows_per_channel <= available.size:
        blocks = np.array_split(available, spec.channels)
        return [np.sort(rng.choice(b, size=spec.rows_per_channel, replace=False))
                for b in blocks]
    if spec.channels == 1:
        starts = np.array([0])
    else:
        starts = np.round(np.linspace(0, available.size - spec.rows_per_channel,
                                      spec.channels)).astype(int)
    return [available[s:s + spec.rows_per_channel] for s in starts]


def _ricker_amplitude(f, peak):
    return (2.0 / math.sqrt(math.pi)) * (f ** 2 / peak ** 3) * np.exp(-(f / peak) ** 2)


def _draw_weights(spec, rng, bands):
    if spec.weight_model == "flat":
        return np.ones(spec.channels, dtype=complex)
    if spec.weight_model == "random-phase":
        return np.exp(1j * rng.uniform(-np.pi, np.pi, spec.channels))
    # ricker-spectrum: smooth amplitude and linear-in-frequency phase, like a
    # delayed band-limited wavelet sampled at the channel centre frequencies;
    # the peak frequency equalizes the endpoint amplitudes so no channel
    # weight collapses toward zero
    centers = np.array([b.mean() / spec.n for b in bands])
    c_lo, c_hi = centers.min(), centers.max()
    if c_hi > c_lo:
        peak = math.sqrt((c_hi ** 2 - c_lo ** 2) / (2.0 * math.log(c_hi / c_lo)))
    else:
        peak = c_hi
    delay = 1.5  # samples
    alpha = _ricker_amplitude(centers, peak) * np.exp(-2j * np.pi * centers * delay)
    return alpha * (math.sqrt(spec.channels) / np.linalg.norm(alpha))


def generate_record(spec):
    """Build the portable description of one instance.

    The returned dict is JSON-serializable and self-contained: channel row
    indices, per-row spectra, complex data (stored as ``[re, im]`` pairs),
    the noise threshold implied by the drawn noise, and the ground truth.
    """
    rng = np.random.default_rng(spec.seed)

    positions = np.sort(rng.choice(spec.n, size=spec.k, replace=False))
    magnitudes = rng.uniform(0.5, 1.5, size=spec.k)
    signs = rng.choice((-1.0, 1.0), size=spec.k)
    x_true = np.zeros(spec.n)
    x_true[positions] = signs * magnitudes

    bands = _channel_bands(spec, rng)
    alpha_true = _draw_weights(spec, rng, bands)

    transform = make_sparsifying_transform(spec.transform, spec.n)
    y_true = transform.forward(x_true)

    channels = []
    noise_energy = 0.0
    for rows, a in zip(bands, alpha_true):
        spectrum = np.ones(rows.size, dtype=complex)
        fop = make_fourier_restriction(spec.n, rows, spectrum)
        clean = a * fop.forward(y_true)
        if spec.noise_level > 0:
            raw = (rng.standard_normal(rows.size)
                   + 1j * rng.standard_normal(rows.size)) / math.sqrt(2.0)
            eta = raw * (spec.noise_level * np.linalg.norm(clean)
                         / np.linalg.norm(raw))
            noise_energy += float(np.vdot(eta, eta).real)
            data = clean + eta
        else:
            data = clean
        channels.append({
            "rows": [int(r) for r in rows],
            "spectrum": [[s.real, s.imag] for s in spectrum],
            "data": [[d.real, d.imag] for d in data],
        })

    return {
        "schema_version": RECORD_SCHEMA_VERSION,
        "n": spec.n,
        "transform": spec.transform,
        "sigma": math.sqrt(noise_energy),
        "spec": asdict(spec),
        "truth": {
            "x_true": x_true.tolist(),
            "alpha_true": [[a.real, a.imag] for a in alpha_true],
        },
        "channels": channels,
    }


def _from_pairs(pairs):
    arr = np.asarray(pairs, dtype=float)
    return arr[:, 0] + 1j * arr[:, 1]


def instantiate(record):
    """Rebuild ``(Instance, GroundTruth)`` from a portable record."""
    if record.get("schema_version") != RECORD_SCHEMA_VERSION:
        raise ValueError(f"unsupported instance schema {record.get('schema_version')!r}")
    n = record["n"]
    transform = make_sparsifying_transform(record["transform"], n)
    ops = []
    data = []
    for ch in record["channels"]:
        fop = make_fourier_restriction(n, np.asarray(ch["rows"], dtype=int),
                                       _from_pairs(ch["spectrum"]))
        ops.append(compose(fop, transform))
        data.append(_from_pairs(ch["data"]))
    inst = Instance(channels=tuple(ops), data=tuple(data),
                    sigma=float(record["sigma"]))
    x_true = np.asarray(record["truth"]["x_true"], dtype=float)
    alpha_true = _from_pairs(record["truth"]["alpha_true"])
    truth = GroundTruth(x_true=x_true, alpha_true=alpha_true,
                        y_true=transform.forward(x_true))
    return inst, truth


def generate(spec):
    """Generate ``(Instance, GroundTruth)`` for a spec; deterministic in the seed."""
    return instantiate(generate_record(spec))


def joint_oracle(inst, tau, restarts=50, seed=0):
    """Brute-force reference for the joint subproblem at small dimensions.

    Multi-start alternating minimization: exact weight elimination
    alternated with a dense projected-gradient solve (step ``1/L``, run to
    tolerance 1e-12) of the convex fixed-weight problem, from ``restarts``
    seeded initial points. Returns the best run as a
    :class:`~blindsparse.spg.SubproblemResult`.
    """
    n = inst.domain_dim
    if n > 16:
        raise ValueError("joint oracle is limited to domain dimension <= 16")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    mats = [materialize(ch) for ch in inst.channels]
    mats_h = [m.conj().T for m in mats]
    gram = [np.real(mh @ m) for mh, m in zip(mats_h, mats)]

    def _weights(x):
        alpha = np.zeros(inst.n_channels, dtype=complex)
        for i, (m, d) in enumerate(zip(mats, inst.data)):
            u = m @ x
            denom = np.vdot(u, u).real
            if denom > 0.0:
                alpha[i] = np.vdot(u, d) / denom
        return alpha

    def _value(x, alpha):
        return float(sum(np.vdot(d - a * (m @ x), d - a * (m @ x)).real
                         for m, d, a in zip(mats, inst.data, alpha)))

    def _pg_fixed(x, alpha):
        # convex: quadratic with curvature matrix 2 * sum |a|^2 Re(M^H M)
        quad = sum((abs(a) ** 2) * g for a, g in zip(alpha, gram))
        lin = sum(np.real(np.conj(a) * (mh @ d))
                  for a, mh, d in zip(alpha, mats_h, inst.data))
        lip = 2.0 * max(np.linalg.eigvalsh(quad).max(), 1e-300)
        step = 1.0 / lip
        for _ in range(20000):
            grad = 2.0 * (quad @ x - lin)
            x_new = project_l1(x - step * grad, tau)
            if np.max(np.abs(x_new - x)) <= 1e-12 * max(1.0, np.max(np.abs(x))):
                return x_new
            x = x_new
        return x

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        x = project_l1(rng.standard_normal(n), tau)
        value = math.inf
        alpha = _weights(x)
        for _ in range(100):
            x = _pg_fixed(x, alpha)
            alpha = _weights(x)
            new_value = _value(x, alpha)
            if value - new_value <= 1e-14 * max(1.0, abs(value)):
                value = new_value
                break
            value = new_value
        if best is None or value < best[0]:
            best = (value, x, alpha)

    value, x, alpha = best
    return SubproblemResult(x=x, weights=alpha, value=value, dual_quantity=0.0,
                            iterations=0, history=[(value, 0.0, 0.0)],
                            status=STATUS_CONVERGED)


@dataclass
class RecoveryMetrics:
    """Gauge-normalized comparison of a reconstruction against the truth."""

    model_error: float
    weight_amplitude_ratio: np.ndarray
    weight_phase_error: np.ndarray
    support_precision: float
    support_recall: float

    def as_dict(self):
        return {
            "model_error": self.model_error,
            "weight_amplitude_ratio": self.weight_amplitude_ratio.tolist(),
            "weight_phase_error": self.weight_phase_error.tolist(),
            "support_precision": self.support_precision,
            "support_recall": self.support_recall,
        }


def _support(v, threshold_factor=0.01):
    top = np.max(np.abs(v))
    if top == 0.0:
        return np.zeros(v.size, dtype=bool)
    return np.abs(v) > threshold_factor * top


def recovery_metrics(x, alpha, truth, target_norm=1.0):
    """Compare ``(x, alpha)`` against the ground truth.

    Both pairs are first normalized to the same weight norm; the leftover
    real sign ambiguity (the gauge group allows negative factors) is
    resolved by aligning ``x`` with the truth. An all-zero reconstruction is
    compared as-is and scores worst-case weight errors.
    """
    x = np.asarray(x, dtype=float)
    alpha = np.asarray(alpha, dtype=complex)
    if np.linalg.norm(truth.alpha_true) == 0.0 or np.linalg.norm(truth.x_true) == 0.0:
        raise ValueError("ground truth must be nonzero")
    xt, at = normalize_pair(truth.x_true, truth.alpha_true, target_norm)
    degenerate = np.linalg.norm(alpha) == 0.0
    if not degenerate:
        x, alpha = normalize_pair(x, alpha, target_norm)
        if np.dot(x, xt) < 0.0:
            x, alpha = -x, -alpha

    model_error = float(np.linalg.norm(x - xt) / np.linalg.norm(xt))
    with np.errstate(divide="ignore", invalid="ignore"):
        amp_ratio = np.abs(alpha) / np.abs(at)
    if degenerate:
        phase_err = np.full(alpha.size, np.pi)
    else:
        phase_err = np.abs(np.angle(alpha * np.conj(at)))

    est = _support(x)
    true = _support(xt)
    hits = int(np.sum(est & true))
    precision = hits / max(int(np.sum(est)), 1)
    recall = hits / max(int(np.sum(true)), 1)
    return RecoveryMetrics(model_error=model_error,
                           weight_amplitude_ratio=amp_ratio,
                           weight_phase_error=phase_err,
                           support_precision=float(precision),
                           support_recall=float(recall))
