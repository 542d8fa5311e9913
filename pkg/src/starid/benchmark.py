"""Seeded Monte Carlo experiments over the identification methods.

Each experiment presents the same artificial image to every method under
test, records per-trial outcomes, and reduces them to the statistics of
interest: bijection accuracy, catalog-access counts, query-step hit
frequencies, trend fits, and two-sample Z tests.  Every trial's random
stream derives only from (master seed, trial index), so a published
(config, seed) pair reproduces every record byte-for-byte apart from
wall-clock timing columns.
"""

from __future__ import annotations

import csv
import itertools
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import stats as sstats

from . import geometry as geom
from . import identification as ident
from . import synthesis as synth

__all__ = [
    "GAUSSIAN_RHO_GRID",
    "SPIKE_OMEGA_GRID",
    "SIGMA_TUNE_GRID",
    "TrialRecord",
    "TrendFit",
    "QueryStats",
    "PivotStats",
    "trial_seed",
    "make_trial_image",
    "run_trial",
    "run_end_to_end",
    "run_query_experiment",
    "run_pivot_experiment",
    "run_verification_ablation",
    "tune_sigma",
    "fit_trend",
    "z_test",
    "z_test_means",
    "write_records_csv",
    "read_records_csv",
    "aggregate",
]

GAUSSIAN_RHO_GRID = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
SPIKE_OMEGA_GRID = (3, 6, 9, 12)
SIGMA_TUNE_GRID = tuple(10.0 ** e for e in range(-16, 2))

CSV_COLUMNS = ("method", "rho", "omega", "seed", "outcome",
               "h_correct", "r_correct", "acc_query", "acc_total", "ms")

_TUNE_PARAMS = {
    "ang": ("sigma_theta",),
    "pyr": ("sigma_theta",),
    "int": ("sigma_theta", "sigma_phi"),
    "sph": ("sigma_a", "sigma_tau"),
    "pln": ("sigma_a", "sigma_tau"),
    "com": ("sigma_a", "sigma_tau"),
}


@dataclass(frozen=True)
class TrialRecord:
    """One identification trial; the CSV row schema plus probe extras."""

    method: str
    rho: float
    omega: int
    seed: int
    outcome: str
    h_correct: bool
    r_correct: bool
    acc_query: int
    acc_total: int
    ms: float
    # Probe fields, not part of the CSV schema:
    acc_to_r: int | None = None
    first_singleton: bool | None = None


@dataclass(frozen=True)
class QueryStats:
    """Query-step statistics: truth-hit frequency f, singleton count S."""

    method: str
    n: int
    f: float
    singles: int
    mean_ms: float


@dataclass(frozen=True)
class PivotStats:
    """Mean feature-table accesses to obtain r on first-query failures."""

    method: str
    n: int
    mean_accesses: float


@dataclass(frozen=True)
class TrendFit:
    """Least-squares trend through a response curve.

    log model: a = c*ln(rho) + d over the post-knee grid points, where the
    knee rho_star is the first grid point with accuracy below 0.95.
    linear model: t = c*omega + d over all points.  A series that never
    dips below the knee threshold carries no_decay=True and no
    coefficients.
    """

    model: str
    c: float | None
    d: float | None
    rho_star: float | None
    n_points: int
    no_decay: bool = False


def trial_seed(master_seed: int, index: int) -> int:
    """Stable per-trial seed derived from the master seed and trial index."""
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1)[0])


def _stream(seed: int, lane: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(lane)]))


def make_trial_image(store, seed: int, *, psi: float = 20.0, rho: float = 0.0,
                     omega: int = 0, min_stars: int = 4) -> synth.SyntheticImage:
    """Build one trial image: random attitude and boresight, noise, spikes.

    Boresights whose field holds fewer than ``min_stars`` catalog stars are
    redrawn.  After spikes are appended the star order is shuffled so false
    stars occupy arbitrary sequence positions.
    """
    rng = _stream(seed, 0)
    for _ in range(10_000):
        attitude = geom.random_rotation(rng)
        boresight = geom.random_unit_vector(rng)
        if len(store.field_star_indices(boresight, psi / 2.0)) >= min_stars:
            break
    else:
        raise RuntimeError("could not find a field with enough stars")
    image = synth.generate_image(store, psi, attitude, boresight, seed=seed)
    if rho > 0:
        image = synth.apply_gaussian_noise(image, rho, _stream(seed, 1))
    if omega > 0:
        image = synth.add_spikes(image, omega, _stream(seed, 2))
    return synth.shuffle_image(image, _stream(seed, 3))


def run_trial(method: str, image, store, cfg=None, *, seed: int = 0,
              rho: float = 0.0, omega: int = 0) -> TrialRecord:
    """Identify one image and score the result against the truth labels."""
    result = ident.identify(method, image, store, cfg)
    h_correct = False
    r_correct = False
    if result.identified:
        truth = image.labels
        h_correct = bool(result.mapping) and all(
            truth[idx] != synth.SPIKE_LABEL and int(truth[idx]) == cid
            for idx, cid in result.mapping.items())
        r_correct = set(result.r) == {int(truth[idx]) for idx in result.b}
    tag = method if cfg is None or cfg.verification else method + "-n"
    return TrialRecord(method=tag, rho=rho, omega=omega, seed=seed,
                       outcome=result.outcome, h_correct=h_correct,
                       r_correct=r_correct, acc_query=result.accesses_query,
                       acc_total=result.accesses_total, ms=result.elapsed_ms,
                       acc_to_r=result.accesses_to_r,
                       first_singleton=result.first_query_singleton)


def run_end_to_end(methods, store, noise_grid, trials: int, master_seed: int,
                   *, min_stars: int = 4, configs=None,
                   progress=None) -> list[TrialRecord]:
    """Full identification runs over a (rho, omega) grid.

    noise_grid is an iterable of (rho, omega) pairs; every method sees the
    same image for a given (grid point, trial index).
    """
    records: list[TrialRecord] = []
    configs = configs or {}
    for gi, (rho, omega) in enumerate(noise_grid):
        for t in range(trials):
            seed = trial_seed(master_seed, gi * trials + t)
            image = make_trial_image(store, seed, rho=rho, omega=int(omega),
                                     min_stars=min_stars)
            for method in methods:
                records.append(run_trial(method, image, store,
                                         configs.get(method), seed=seed,
                                         rho=rho, omega=int(omega)))
            if progress:
                progress(len(records))
    return records


def run_query_experiment(methods, store, trials: int, master_seed: int,
                         *, min_stars: int = 4, configs=None) -> dict[str, QueryStats]:
    """One noiseless query step per image per method (Table-style stats)."""
    configs = configs or {}
    hits = {m: 0 for m in methods}
    singles = {m: 0 for m in methods}
    elapsed = {m: 0.0 for m in methods}
    for t in range(trials):
        seed = trial_seed(master_seed, t)
        image = make_trial_image(store, seed, min_stars=min_stars)
        for method in methods:
            t0 = time.perf_counter()
            step = ident.query_step(method, image, store, configs.get(method))
            elapsed[method] += (time.perf_counter() - t0) * 1e3
            hits[method] += int(step.true_present)
            singles[method] += int(step.singleton)
    return {m: QueryStats(method=m, n=trials,
                          f=hits[m] / trials if trials else 0.0,
                          singles=singles[m],
                          mean_ms=elapsed[m] / trials if trials else 0.0)
            for m in methods}


def run_pivot_experiment(store, trials: int, master_seed: int, *,
                         rho: float = 1e-4, methods=("sph", "pln", "com"),
                         min_stars: int = 4, configs=None) -> dict[str, PivotStats]:
    """Mean accesses to obtain an r set when the first query misses |R| = 1.

    Trials whose run never satisfied the criterion contribute the
    feature-access count at termination.
    """
    configs = configs or {}
    acc = {m: [] for m in methods}
    for t in range(trials):
        seed = trial_seed(master_seed, t)
        image = make_trial_image(store, seed, rho=rho, min_stars=min_stars)
        for method in methods:
            rec = run_trial(method, image, store, configs.get(method),
                            seed=seed, rho=rho)
            if rec.first_singleton is False:
                acc[method].append(rec.acc_to_r if rec.acc_to_r is not None
                                   else rec.acc_query)
    return {m: PivotStats(method=m, n=len(acc[m]),
                          mean_accesses=float(np.mean(acc[m])) if acc[m] else 0.0)
            for m in methods}


def run_verification_ablation(store, trials: int, master_seed: int, *,
                              rhos=(0.0, 1e-6, 1e-3), methods=("pyr", "com"),
                              min_stars: int = 4) -> list[TrialRecord]:
    """Each method with and without its verification stage ('-n' variants)."""
    records: list[TrialRecord] = []
    for gi, rho in enumerate(rhos):
        for t in range(trials):
            seed = trial_seed(master_seed, gi * trials + t)
            image = make_trial_image(store, seed, rho=rho, min_stars=min_stars)
            for method in methods:
                for verification in (True, False):
                    cfg = replace(ident.default_config(method),
                                  verification=verification)
                    records.append(run_trial(method, image, store, cfg,
                                             seed=seed, rho=rho))
    return records


def tune_sigma(method: str, store, trials: int = 30, master_seed: int = 0,
               *, grid=SIGMA_TUNE_GRID, min_stars: int = 4):
    """Grid-search query deviations by singleton counts on noiseless steps.

    Every combination of deviations from ``grid`` (one axis per method
    parameter) runs ``trials`` query steps; the winner has the most
    |R| = 1 instances, ties broken toward the larger sigma tuple.
    Returns (chosen dict, counts dict keyed by sigma tuple).
    """
    params = _TUNE_PARAMS[method]
    images = []
    for t in range(trials):
        seed = trial_seed(master_seed, t)
        images.append(make_trial_image(store, seed, min_stars=min_stars))
    counts: dict[tuple, int] = {}
    for combo in itertools.product(grid, repeat=len(params)):
        cfg = ident.default_config(method)
        for name, value in zip(params, combo):
            setattr(cfg, name, value)
        count = 0
        for image in images:
            if ident.query_step(method, image, store, cfg).singleton:
                count += 1
        counts[combo] = count
    best = max(counts, key=lambda combo: (counts[combo], combo))
    return dict(zip(params, best)), counts


def fit_trend(points, model: str = "log", knee_threshold: float = 0.95) -> TrendFit:
    """Fit c, d to a response curve; see TrendFit for the two models."""
    pts = sorted((float(x), float(y)) for x, y in points)
    if model == "linear":
        xs = np.array([p[0] for p in pts])
        ys = np.array([p[1] for p in pts])
        c, d = np.polyfit(xs, ys, 1)
        return TrendFit(model="linear", c=float(c), d=float(d), rho_star=None,
                        n_points=len(pts))
    if model != "log":
        raise ValueError(f"unknown trend model {model!r}")
    if any(p[0] <= 0 for p in pts):
        raise ValueError("log model needs strictly positive noise levels")
    knee_idx = next((k for k, (_, y) in enumerate(pts) if y < knee_threshold), None)
    if knee_idx is None:
        return TrendFit(model="log", c=None, d=None, rho_star=None,
                        n_points=0, no_decay=True)
    start = min(knee_idx, max(0, len(pts) - 3))  # keep at least 3 points
    region = pts[start:]
    xs = np.log(np.array([p[0] for p in region]))
    ys = np.array([p[1] for p in region])
    c, d = np.polyfit(xs, ys, 1)
    return TrendFit(model="log", c=float(c), d=float(d),
                    rho_star=pts[knee_idx][0], n_points=len(region))


def z_test(p1: float, n1: int, p2: float, n2: int, tails: int = 2):
    """Two-sample Z test on proportions; returns (z, p-value)."""
    pooled = (p1 * n1 + p2 * n2) / (n1 + n2)
    se = math.sqrt(max(pooled * (1.0 - pooled), 0.0) * (1.0 / n1 + 1.0 / n2))
    if se == 0.0:
        z = 0.0 if p1 == p2 else math.copysign(math.inf, p1 - p2)
    else:
        z = (p1 - p2) / se
    p = min(1.0, tails * float(sstats.norm.sf(abs(z))))
    return z, p


def z_test_means(mean1: float, std1: float, n1: int,
                 mean2: float, std2: float, n2: int, tails: int = 2):
    """Two-sample Z test on means of continuous metrics; returns (z, p)."""
    se = math.sqrt(std1 * std1 / n1 + std2 * std2 / n2)
    if se == 0.0:
        z = 0.0 if mean1 == mean2 else math.copysign(math.inf, mean1 - mean2)
    else:
        z = (mean1 - mean2) / se
    p = min(1.0, tails * float(sstats.norm.sf(abs(z))))
    return z, p


# -- record persistence and reduction ------------------------------------------


def write_records_csv(records, path) -> None:
    """Write trial records with the fixed column order (see CSV_COLUMNS)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([rec.method, repr(rec.rho), rec.omega, rec.seed,
                             rec.outcome, int(rec.h_correct), int(rec.r_correct),
                             rec.acc_query, rec.acc_total, f"{rec.ms:.3f}"])


def read_records_csv(path) -> list[TrialRecord]:
    with Path(path).open("r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        out = []
        for row in reader:
            out.append(TrialRecord(
                method=row[0], rho=float(row[1]), omega=int(row[2]),
                seed=int(row[3]), outcome=row[4], h_correct=bool(int(row[5])),
                r_correct=bool(int(row[6])), acc_query=int(row[7]),
                acc_total=int(row[8]), ms=float(row[9])))
        return out


def aggregate(records, keys=("method", "rho", "omega")) -> dict:
    """Group records and reduce to counts, accuracies, and mean accesses."""
    groups: dict[tuple, list[TrialRecord]] = {}
    for rec in records:
        group_key = tuple(getattr(rec, k) for k in keys)
        groups.setdefault(group_key, []).append(rec)
    out = {}
    for group_key, group in sorted(groups.items()):
        n = len(group)
        out[group_key] = {
            "n": n,
            "h_accuracy": sum(r.h_correct for r in group) / n,
            "r_accuracy": sum(r.r_correct for r in group) / n,
            "identified": sum(r.outcome == ident.OUTCOME_IDENTIFIED for r in group) / n,
            "mean_acc_query": float(np.mean([r.acc_query for r in group])),
            "mean_acc_total": float(np.mean([r.acc_total for r in group])),
            "mean_ms": float(np.mean([r.ms for r in group])),
        }
    return out


def accuracy(records, **filters) -> float:
    """Fraction of matching records with a fully correct bijection."""
    matching = [r for r in records
                if all(getattr(r, k) == v for k, v in filters.items())]
    if not matching:
        return float("nan")
    return sum(r.h_correct for r in matching) / len(matching)
