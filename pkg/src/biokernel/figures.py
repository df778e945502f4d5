"""PNG figures written next to the CLI's data files."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {"figure.figsize": (6.0, 4.0), "font.size": 10, "axes.grid": True,
         "grid.alpha": 0.3, "savefig.dpi": 120}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def kernel_figure(xs, xps, values, path, title):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        xs, xps = np.asarray(xs), np.asarray(xps)
        vals = np.asarray(values).real.reshape(len(xs), len(xps))
        if len(xps) == 1 or len(xs) == 1:
            if len(xps) == 1:
                ax.plot(xs, vals[:, 0], lw=1.5)
                ax.set_xlabel("x")
            else:
                ax.plot(xps, vals[0], lw=1.5)
                ax.set_xlabel("x'")
            ax.set_ylabel("Re K")
        else:
            im = ax.pcolormesh(xps, xs, vals, shading="nearest", cmap="viridis")
            fig.colorbar(im, ax=ax, label="Re K")
            ax.set_xlabel("x'")
            ax.set_ylabel("x")
        ax.set_title(title)
        _save(fig, path)


def density_figure(xs, density, path, title, samples=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if samples is not None:
            ax.hist(np.ravel(samples), bins=120, density=True, color="#9bb7d4",
                    alpha=0.7, label="samples")
        ax.plot(xs, density, color="#1f3b73", lw=1.6, label="K(x, x)/N")
        ax.set_xlabel("x")
        ax.set_ylabel("density")
        ax.set_title(title)
        ax.legend(frameon=False)
        _save(fig, path)


def scan_figure(Ns, errors, path, title):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(Ns, errors, "o-", color="#8b1e3f", lw=1.5)
        Ns = np.asarray(Ns, dtype=float)
        ref = errors[0] * Ns[0] / Ns
        ax.loglog(Ns, ref, "--", color="0.5", lw=1, label="slope -1")
        ax.set_xlabel("N")
        ax.set_ylabel("sup error")
        ax.set_title(title)
        ax.legend(frameon=False)
        _save(fig, path)


def verify_figure(reports, path, title):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 0.35 * len(reports) + 1.5))
        ratio = [max(r.discrepancy, 1e-300) / r.tolerance for r in reports]
        colors = ["#2e7d32" if r.passed else "#c62828" for r in reports]
        y = np.arange(len(reports))
        ax.barh(y, np.log10(ratio), color=colors)
        ax.axvline(0.0, color="k", lw=0.8)
        ax.set_yticks(y)
        ax.set_yticklabels([r.check_name for r in reports], fontsize=8)
        ax.set_xlabel("log10(discrepancy / tolerance)")
        ax.set_title(title)
        _save(fig, path)
