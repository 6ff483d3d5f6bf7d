"""Figure rendering for experiment reports.

Renders the three standard views of a run to PNG files next to the CSV/JSON
output: convergence histories, weight amplitude/phase against the truth,
and the reconstructed coefficient vectors. The CSV remains the canonical
machine-readable record; these files are the human-readable companion.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_MODE_COLORS = {
    "true-weights": "tab:green",
    "unit-weights": "tab:red",
    "estimated-weights": "tab:blue",
}

_SAVE_KW = {"dpi": 150, "bbox_inches": "tight", "metadata": {"Software": None}}


def _color(mode):
    return _MODE_COLORS.get(mode, "tab:gray")


def render_convergence(traces, sigma, path):
    """Objective vs cumulative inner iterations, one line per mode."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for mode, trace in traces.items():
        xs, ys = [], []
        cumulative = 0
        for step in trace.steps:
            for j, (value, _, _) in enumerate(step.history):
                if j > 0:
                    cumulative += 1
                xs.append(cumulative)
                ys.append(max(value, 1e-300))
        ax.semilogy(xs, ys, label=mode, color=_color(mode))
    if sigma > 0:
        ax.axhline(sigma ** 2, color="k", linestyle=":", linewidth=1,
                   label=r"$\sigma^2$")
    ax.set_xlabel("cumulative inner iterations")
    ax.set_ylabel("objective")
    ax.legend()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_weights(weights, alpha_true, path):
    """Amplitude and phase of the recovered weights per channel."""
    idx = np.arange(alpha_true.size)
    fig, (ax_amp, ax_ph) = plt.subplots(2, 1, figsize=(6.0, 5.0), sharex=True)
    ax_amp.plot(idx, np.abs(alpha_true), "k--", label="true")
    ax_ph.plot(idx, np.angle(alpha_true), "k--", label="true")
    for mode, alpha in weights.items():
        ax_amp.plot(idx, np.abs(alpha), "o-", color=_color(mode), label=mode)
        ax_ph.plot(idx, np.angle(alpha), "o-", color=_color(mode), label=mode)
    ax_amp.set_ylabel("amplitude")
    ax_ph.set_ylabel("phase [rad]")
    ax_ph.set_xlabel("channel")
    ax_amp.legend(fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_models(solutions, x_true, path):
    """Recovered coefficient vectors against the truth, one panel per mode."""
    modes = list(solutions)
    fig, axes = plt.subplots(len(modes), 1, figsize=(6.0, 2.2 * len(modes)),
                             sharex=True, squeeze=False)
    for ax, mode in zip(axes[:, 0], modes):
        ax.plot(x_true, "k.", markersize=4, label="true")
        ax.plot(solutions[mode], color=_color(mode), linewidth=1, label=mode)
        ax.set_ylabel(mode, fontsize=8)
        ax.legend(fontsize=7, loc="upper right")
    axes[-1, 0].set_xlabel("coefficient index")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
