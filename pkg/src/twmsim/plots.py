"""Optional figures (needs matplotlib). Numeric files remain the reference output."""

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_jsa(path, jsa_abs, omega_s, omega_i, config_hash=""):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ext = [(omega_i[0] - omega_i.mean()) * 1e-12, (omega_i[-1] - omega_i.mean()) * 1e-12,
           (omega_s[0] - omega_s.mean()) * 1e-12, (omega_s[-1] - omega_s.mean()) * 1e-12]
    ax.imshow(jsa_abs, origin="lower", extent=ext, cmap="gray_r", aspect="auto")
    ax.set_xlabel("idler detuning (rad/ps)")
    ax.set_ylabel("signal detuning (rad/ps)")
    ax.set_title(f"|JSA|  [{config_hash}]", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def plot_sweep(path, rows, param, columns):
    plt = _pyplot()
    agg = [r for r in rows if r["row"].startswith("aggregate")]
    x = np.arange(len(agg))
    fig, axes = plt.subplots(len(columns), 1, figsize=(5, 1.6 * len(columns)), sharex=True)
    for ax, c in zip(np.atleast_1d(axes), columns):
        ax.plot(x, [r[c] for r in agg], "o-")
        ax.set_ylabel(c, fontsize=8)
    np.atleast_1d(axes)[-1].set_xticks(x, [str(r["value"]) for r in agg])
    np.atleast_1d(axes)[-1].set_xlabel(param)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def plot_spm_scan(path, rows, thresholds):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.semilogx([r["pump_photons"] for r in rows], [r["overlap_fom"] for r in rows], "o-")
    for t in thresholds:
        ax.axhline(t, color="0.6", lw=0.8, ls="--")
    ax.set_xlabel("pump photons")
    ax.set_ylabel("SPM overlap FOM")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
