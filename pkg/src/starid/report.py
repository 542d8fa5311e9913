"""CSV bundles and figures for benchmark results."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import benchmark as bench

__all__ = [
    "write_query_stats",
    "read_query_stats",
    "write_pivot_stats",
    "read_pivot_stats",
    "write_aggregates",
    "emit_report",
    "plot_verification",
    "plot_gaussian_accuracy",
    "plot_spike_accuracy",
    "plot_pivot_accesses",
]

_METHOD_ORDER = ("ang", "int", "sph", "pln", "pyr", "com")


def write_query_stats(stats, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "n", "f", "singles", "mean_ms"])
        for method in sorted(stats):
            s = stats[method]
            writer.writerow([s.method, s.n, repr(s.f), s.singles, f"{s.mean_ms:.3f}"])


def read_query_stats(path) -> dict:
    out = {}
    with Path(path).open("r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        next(reader)
        for row in reader:
            out[row[0]] = bench.QueryStats(method=row[0], n=int(row[1]),
                                           f=float(row[2]), singles=int(row[3]),
                                           mean_ms=float(row[4]))
    return out


def write_pivot_stats(stats, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "n", "mean_accesses"])
        for method in sorted(stats):
            s = stats[method]
            writer.writerow([s.method, s.n, repr(s.mean_accesses)])


def read_pivot_stats(path) -> dict:
    out = {}
    with Path(path).open("r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        next(reader)
        for row in reader:
            out[row[0]] = bench.PivotStats(method=row[0], n=int(row[1]),
                                           mean_accesses=float(row[2]))
    return out


def write_aggregates(records, path, keys=("method", "rho", "omega")) -> None:
    """Aggregate table: one row per (method, rho, omega) group."""
    agg = bench.aggregate(records, keys)
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(keys) + ["n", "h_accuracy", "r_accuracy",
                                      "identified", "mean_acc_query",
                                      "mean_acc_total", "mean_ms"])
        for group_key, row in agg.items():
            writer.writerow(list(group_key)
                            + [row["n"], repr(row["h_accuracy"]),
                               repr(row["r_accuracy"]), repr(row["identified"]),
                               repr(row["mean_acc_query"]),
                               repr(row["mean_acc_total"]), f"{row['mean_ms']:.3f}"])


def _method_order(tags):
    def key(tag):
        base = tag.replace("-n", "")
        rank = _METHOD_ORDER.index(base) if base in _METHOD_ORDER else len(_METHOD_ORDER)
        return (rank, tag)
    return sorted(tags, key=key)


def plot_verification(records, path) -> None:
    """Grouped accuracy bars, one cluster per noise level (verify figure)."""
    agg = bench.aggregate(records, keys=("method", "rho"))
    rhos = sorted({k[1] for k in agg})
    methods = _method_order({k[0] for k in agg})
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(len(methods), 1)
    for mi, method in enumerate(methods):
        ys = [agg.get((method, rho), {"h_accuracy": 0.0})["h_accuracy"] for rho in rhos]
        xs = [ri + mi * width for ri in range(len(rhos))]
        ax.bar(xs, ys, width=width, label=method.upper())
    ax.set_xticks([ri + width * (len(methods) - 1) / 2 for ri in range(len(rhos))])
    ax.set_xticklabels([f"{rho:g}" for rho in rhos])
    ax.set_xlabel("Gaussian noise deviation (degrees)")
    ax.set_ylabel("correct-bijection frequency")
    ax.set_ylim(0, 1.15)
    ax.legend(ncol=len(methods), fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_gaussian_accuracy(records, path, fits=None) -> None:
    """Accuracy vs noise on a log axis with optional fitted trend lines."""
    agg = bench.aggregate(records, keys=("method", "rho"))
    methods = _method_order({k[0] for k in agg})
    fig, ax = plt.subplots(figsize=(7, 4))
    for method in methods:
        pts = sorted((rho, row["h_accuracy"]) for (m, rho), row in agg.items()
                     if m == method and rho > 0)
        if not pts:
            continue
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=method.upper())
        if fits and method in fits and fits[method].c is not None:
            import numpy as np
            xs = np.geomspace(fits[method].rho_star, pts[-1][0], 50)
            ax.plot(xs, fits[method].c * np.log(xs) + fits[method].d, "--",
                    color=ax.lines[-1].get_color(), alpha=0.6)
    ax.set_xscale("log")
    ax.set_xlabel("Gaussian noise deviation rho (degrees)")
    ax.set_ylabel("correct-bijection frequency")
    ax.set_ylim(-0.05, 1.1)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_spike_accuracy(records, path) -> None:
    """Grouped accuracy bars, one cluster per spike count."""
    agg = bench.aggregate(records, keys=("method", "omega"))
    omegas = sorted({k[1] for k in agg})
    methods = _method_order({k[0] for k in agg})
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(len(methods), 1)
    for mi, method in enumerate(methods):
        ys = [agg.get((method, w), {"h_accuracy": 0.0})["h_accuracy"] for w in omegas]
        xs = [wi + mi * width for wi in range(len(omegas))]
        ax.bar(xs, ys, width=width, label=method.upper())
    ax.set_xticks([wi + width * (len(methods) - 1) / 2 for wi in range(len(omegas))])
    ax.set_xticklabels([str(w) for w in omegas])
    ax.set_xlabel("false stars per image (omega)")
    ax.set_ylabel("correct-bijection frequency")
    ax.set_ylim(0, 1.15)
    ax.legend(ncol=3, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_pivot_accesses(stats, path) -> None:
    """Bar chart of mean catalog accesses to obtain r (pivot figure)."""
    methods = _method_order(stats.keys())
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(range(len(methods)), [stats[m].mean_accesses for m in methods])
    for xi, method in enumerate(methods):
        ax.text(xi, stats[method].mean_accesses, f"{stats[method].mean_accesses:.2f}",
                ha="center", va="bottom", fontsize=9)
    ax.set_xticks(range(len(methods)))
    ax.set_xticklabels([m.upper() for m in methods])
    ax.set_ylabel("mean catalog accesses to obtain r")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def emit_report(out_dir, *, e2e_gauss=None, e2e_spike=None, verify=None,
                query=None, pivot=None, plots: bool = True) -> list[Path]:
    """Write one CSV per experiment (plus aggregates and figures).

    Returns the list of files written.  An unwritable directory raises.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit_records(name, records):
        path = out_dir / f"{name}.csv"
        bench.write_records_csv(records, path)
        written.append(path)
        agg_path = out_dir / f"aggregates_{name}.csv"
        write_aggregates(records, agg_path)
        written.append(agg_path)

    if e2e_gauss is not None:
        emit_records("e2e_gauss", e2e_gauss)
        if plots:
            path = out_dir / "gaussian_accuracy.png"
            plot_gaussian_accuracy(e2e_gauss, path)
            written.append(path)
    if e2e_spike is not None:
        emit_records("e2e_spike", e2e_spike)
        if plots:
            path = out_dir / "spike_accuracy.png"
            plot_spike_accuracy(e2e_spike, path)
            written.append(path)
    if verify is not None:
        emit_records("verify", verify)
        if plots:
            path = out_dir / "verification_ablation.png"
            plot_verification(verify, path)
            written.append(path)
    if query is not None:
        path = out_dir / "query.csv"
        write_query_stats(query, path)
        written.append(path)
    if pivot is not None:
        path = out_dir / "pivot.csv"
        write_pivot_stats(pivot, path)
        written.append(path)
        if plots:
            fig_path = out_dir / "pivot_accesses.png"
            plot_pivot_accesses(pivot, fig_path)
            written.append(fig_path)
    return written
