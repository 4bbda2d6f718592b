"""Report figures rendered to files next to the delimited output.

Every function takes plain data plus a target path and writes one PNG;
nothing here opens a window (Agg backend only).
"""

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 120


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI, metadata={"Software": "empclt"})
    plt.close(fig)


def path_figure(data, path):
    """First coordinate of a simulated path as a line plot."""
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(np.arange(1, data.shape[0] + 1), data[:, 0], lw=0.7)
    ax.set_xlabel("i")
    ax.set_ylabel("X_i (coordinate 1)")
    ax.set_title("simulated path")
    _finish(fig, path)


def delta_figure(lags, est, se, bound, path):
    """Coupling coefficients with error bars against the analytic bound."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(lags, est, yerr=3.0 * np.asarray(se), fmt="o", label="delta-hat (3 SE)")
    if bound is not None:
        ax.plot(lags, bound, "k--", label="linear bound")
    positive = [v for v in est if v > 0]
    if positive and min(positive) > 0:
        ax.set_yscale("log")
    ax.set_xlabel("lag")
    ax.set_ylabel("delta")
    ax.legend()
    ax.set_title("physical dependence profile")
    _finish(fig, path)


def mixing_figure(reports, path):
    """Fitted mixing constants across the scanned gap tuples."""
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = ["+".join(str(g) for g in r.gaps) for r in reports]
    ax.bar(range(len(reports)), [r.fitted_kp for r in reports])
    ax.set_xticks(range(len(reports)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("fitted K_p")
    ax.set_title("mixing constant stability")
    _finish(fig, path)


def moment_figure(report, exact, path):
    """Estimated central moments against the layered bound."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ns = report.n_list
    ax.errorbar(ns, report.moments, yerr=3.0 * np.asarray(report.moment_ses),
                fmt="o-", label="Monte Carlo moment")
    ax.plot(ns, report.bounds, "k--", label="unit-constant bound")
    if exact:
        xs = sorted(exact)
        ax.plot(xs, [exact[x] for x in xs], "s", label="enumerated")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("E|sum|^(2p)")
    ax.legend()
    ax.set_title("moment bound check (p=%d)" % report.p)
    _finish(fig, path)


def projections_figure(check, path):
    """Histogram of the worst projection with the fitted normal density."""
    worst = max(check.reports, key=lambda r: r.ks_stat)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    axes[0].hist(worst.samples, bins=40, density=True, alpha=0.7)
    if worst.sigma2_hat > 0:
        sd = math.sqrt(worst.sigma2_hat)
        xs = np.linspace(worst.samples.min(), worst.samples.max(), 200)
        axes[0].plot(xs, np.exp(-0.5 * (xs / sd) ** 2) / (sd * math.sqrt(2 * math.pi)), "k-")
    axes[0].set_title("worst projection (KS %.3f)" % worst.ks_stat)
    axes[1].bar(range(len(check.reports)), [r.ks_stat for r in check.reports])
    axes[1].axhline(check.threshold, color="k", ls="--", label="threshold")
    axes[1].set_xlabel("projection")
    axes[1].set_ylabel("KS statistic")
    axes[1].legend()
    _finish(fig, path)


def kernel_figure(kernel, path):
    """Heatmap of the estimated limit covariance kernel."""
    fig, ax = plt.subplots(figsize=(5, 4))
    img = ax.imshow(kernel.matrix, origin="lower", cmap="viridis")
    fig.colorbar(img, ax=ax, label="cov")
    ax.set_xlabel("grid index")
    ax.set_ylabel("grid index")
    ax.set_title("limit covariance kernel")
    _finish(fig, path)


def sup_figure(samples, path):
    """Distribution of the grid-sup statistic."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(samples, bins=50, density=True, alpha=0.8)
    q95 = float(np.quantile(samples, 0.95))
    ax.axvline(q95, color="k", ls="--", label="95th pct = %.3f" % q95)
    ax.set_xlabel("sup |U_n|")
    ax.set_ylabel("density")
    ax.legend()
    ax.set_title("grid-sup statistic")
    _finish(fig, path)


def approx_figure(report, path):
    """Exceedance frequency of the smoothing error versus m."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ses = np.asarray(report.ses)
    ax.errorbar(report.m_list, report.frequencies, yerr=2.0 * ses, fmt="o-")
    ax.set_xlabel("m")
    ax.set_ylabel("P(sup error > %.3g)" % report.epsilon)
    ax.set_xscale("log")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title("smoothing approximation quality (n=%d)" % report.n)
    _finish(fig, path)


def chain_figure(terms, remainder, path):
    """Per-level telescoping contributions."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ks = list(range(1, len(terms) + 1))
    ax.bar(ks, terms, label="level terms")
    ax.bar([len(terms) + 1], [remainder], color="darkorange", label="remainder")
    ax.set_xticks(ks + [len(terms) + 1])
    ax.set_xticklabels([str(k) for k in ks] + ["rem"])
    ax.set_xlabel("refinement level k")
    ax.set_ylabel("mean increment")
    ax.legend()
    ax.set_title("telescoping decomposition")
    _finish(fig, path)


def conditions_figure(gamma_scan, decay_scan, ratio, path):
    """Feasibility threshold and decay exponent curves over p."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    if gamma_scan:
        ps, vals = zip(*gamma_scan)
        axes[0].plot(ps, vals, "o-")
        axes[0].axhline(ratio, color="k", ls="--", label="theta/alpha")
        axes[0].legend()
    axes[0].set_xlabel("p")
    axes[0].set_ylabel("r p / (p - r d)")
    axes[0].set_title("feasibility threshold")
    if decay_scan:
        ps, vals = zip(*decay_scan)
        axes[1].plot(ps, vals, "o-")
        best = min(decay_scan, key=lambda item: item[1])
        axes[1].plot([best[0]], [best[1]], "rs", label="b* = %.3g" % best[1])
        axes[1].legend()
    axes[1].set_xlabel("p")
    axes[1].set_ylabel("decay exponent")
    axes[1].set_title("linear-process threshold")
    _finish(fig, path)
