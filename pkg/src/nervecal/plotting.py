"""PNG figures rendered next to the CSV outputs (headless backend)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .damage import PARAM_NAMES, TIME_POINTS  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def cap_vs_time(sim, path, reference=None, title="%CAP after stretch"):
    """One panel per loading case: simulated %CAP (and reference) over relaxation time."""
    fig, axes = plt.subplots(2, 3, figsize=(11, 6), sharex=True, sharey=True)
    for i, ax in enumerate(axes.ravel()):
        ax.plot(TIME_POINTS, sim.values[i], "o-", label="simulated")
        if reference is not None:
            ax.plot(TIME_POINTS, reference.values[i], "s--", label="reference")
        ax.set_title(f"case {i + 1}")
        ax.grid(alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("relaxation time (min)")
    for ax in axes[:, 0]:
        ax.set_ylabel("%CAP")
    axes[0, 0].legend(fontsize=8)
    fig.suptitle(title)
    return _save(fig, path)


def fitness_scatter(log, path, names=PARAM_NAMES):
    """Fitness against every parameter, coloured by evaluation index.

    ``log`` holds ``(eval_index, x, fitness, best_so_far)`` entries in
    search coordinates; infinite fitness values are left out.
    """
    idx = np.array([e[0] for e in log])
    X = np.array([e[1] for e in log])
    f = np.array([e[2] for e in log])
    ok = np.isfinite(f)
    fig, axes = plt.subplots(2, 3, figsize=(11, 6))
    for j, ax in enumerate(axes.ravel()[: X.shape[1]]):
        sc = ax.scatter(X[ok, j], f[ok], c=idx[ok], s=8, cmap="viridis")
        label = names[j]
        ax.set_xlabel(f"log10 {label}" if label in ("E", "k", "eta_eq") else label)
        ax.set_ylabel("fitness")
    fig.colorbar(sc, ax=axes.ravel().tolist(), label="evaluation")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def convergence(histories, path, labels=None):
    """Best-so-far fitness against evaluation count for one or more runs."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for k, hist in enumerate(histories):
        h = np.array(hist, dtype=float)
        ax.plot(h[:, 0], h[:, 1], label=labels[k] if labels else None)
    ax.set_xlabel("evaluations")
    ax.set_ylabel("best fitness")
    ax.set_yscale("symlog")
    if labels:
        ax.legend(fontsize=8)
    return _save(fig, path)


def strategy_boxplot(finals, path):
    """Distribution of final best fitness per strategy."""
    names = list(finals)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.boxplot([finals[n] for n in names])
    ax.set_xticks(range(1, len(names) + 1), names)
    ax.set_ylabel("best fitness")
    return _save(fig, path)


def trace_panel(traces, path, case_id):
    """Measured potentials of one loading case, one line per relaxation time."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for (c, t), tr in sorted(traces.items()):
        if c == case_id:
            ax.plot(tr.time, tr.samples, lw=0.8, label=f"{t} min")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("potential (mV)")
    ax.legend(fontsize=7)
    return _save(fig, path)
