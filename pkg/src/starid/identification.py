"""Six lost-in-space identification methods under one framework.

Every method walks image-star subsets in its own order, filters a feature
catalog down to candidate sets R with a 3-sigma window predicate, imposes
the |R| = 1 criterion (directly, after pivoting, or via flattened
candidate intersections), and produces a bijection from image stars to
catalog stars — either positionally (Interior Angle, Pyramid) or through
the direct match test (Angle, the triangle methods, Composite Pyramid).

Method tags: ``ang`` Angle, ``int`` Interior Angle, ``sph`` Spherical
Triangle, ``pln`` Planar Triangle, ``pyr`` Pyramid, ``com`` Composite
Pyramid.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import features as feat
from . import geometry as geom

__all__ = [
    "METHOD_TAGS",
    "MethodConfig",
    "IdentificationResult",
    "default_config",
    "sequential_pairs",
    "sequential_trios",
    "pyramid_trios",
    "flatten_intersect",
    "partial_match",
    "pivot",
    "dmt",
    "identify",
    "query_step",
    "QueryStep",
]

OUTCOME_IDENTIFIED = "identified"
OUTCOME_EXHAUSTED = "exhausted"
OUTCOME_ACCESS_LIMIT = "access_limit"

METHOD_TAGS = ("ang", "int", "sph", "pln", "pyr", "com")


@dataclass
class MethodConfig:
    """Query deviations and run limits for one identification method.

    Angles are degrees; area/moment deviations are in the feature's own
    units.  ``sigma_o`` (overlay deviation for the direct match test)
    defaults to the method's sigma_theta when it has one, else 1e-4.
    """

    sigma_theta: float | None = None
    sigma_phi: float | None = None
    sigma_a: float | None = None
    sigma_tau: float | None = None
    sigma_o: float | None = None
    access_limit: int = 500
    psi: float = 20.0
    verification: bool = True

    def resolved_sigma_o(self) -> float:
        if self.sigma_o is not None:
            return self.sigma_o
        if self.sigma_theta is not None:
            return self.sigma_theta
        return 1e-4


# Reported parameter selections from the sigma grid search.
_DEFAULTS = {
    "ang": dict(sigma_theta=1e-4),
    "pyr": dict(sigma_theta=1e-4),
    "int": dict(sigma_theta=1e-2, sigma_phi=1e-2),
    "sph": dict(sigma_a=1e-9, sigma_tau=1e-9),
    "pln": dict(sigma_a=1e-9, sigma_tau=1e-9),
    "com": dict(sigma_a=1e-9, sigma_tau=1e-9),
}


def default_config(tag: str) -> MethodConfig:
    """Fresh MethodConfig carrying the method's reported sigma selections."""
    return MethodConfig(**_DEFAULTS[tag])


@dataclass
class IdentificationResult:
    """Outcome of one identification run, with catalog-access counters.

    ``accesses_query`` counts feature-table queries (query, pivot and
    verification steps); ``accesses_total`` adds the direct match test's
    neighborhood fetches.  ``accesses_to_r`` snapshots the query counter
    the first time a candidate set satisfied the |R| = 1 criterion.
    """

    method: str
    outcome: str
    b: tuple[int, ...] = ()
    r: tuple[int, ...] = ()
    mapping: dict[int, int] = field(default_factory=dict)
    accesses_query: int = 0
    accesses_total: int = 0
    accesses_to_r: int | None = None
    first_query_singleton: bool | None = None
    elapsed_ms: float = 0.0

    @property
    def identified(self) -> bool:
        return self.outcome == OUTCOME_IDENTIFIED


# -- image subset iteration orders -------------------------------------------


def sequential_pairs(n: int):
    """C(n, 2) with the first member fixed for runs of selections."""
    for i in range(n):
        for j in range(i + 1, n):
            yield (i, j)


def sequential_trios(n: int):
    """C(n, 3) in lexicographic order."""
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                yield (i, j, k)


def pyramid_trios(n: int):
    """C(n, 3) ordered to rotate all members quickly (spike avoidance).

    Walks index gaps dj, dk before the base index, so no star persists in
    the subset for long runs of selections.
    """
    for dj in range(1, n - 1):
        for dk in range(1, n - dj):
            for i in range(n - dj - dk):
                yield (i, i + dj, i + dj + dk)


# -- candidate set machinery ---------------------------------------------------


def flatten_intersect(set_a, set_b) -> set:
    """Flatten two collections of id tuples and intersect the member sets."""
    flat_a = set(itertools.chain.from_iterable(set_a))
    flat_b = set(itertools.chain.from_iterable(set_b))
    return flat_a & flat_b


def partial_match(candidates, new_candidates) -> list:
    """Tuples of `new_candidates` sharing at least two ids with `candidates`.

    The >= 2 reading (rather than exactly 2) lets identical tuples survive
    their own re-query, which is what keeps consistent candidates alive
    across pivots.
    """
    kept = []
    seen = set()
    member_sets = [set(r) for r in candidates]
    for cand in new_candidates:
        key = tuple(cand)
        if key in seen:
            continue
        cand_set = set(cand)
        if any(len(cand_set & members) >= 2 for members in member_sets):
            kept.append(key)
            seen.add(key)
    return kept


class _Run:
    """Per-run counter snapshots and limit bookkeeping against one store."""

    def __init__(self, method, store, cfg):
        self.method = method
        self.store = store
        self.cfg = cfg
        self._f0 = store.feature_accesses
        self._s0 = store.spatial_accesses
        self._t0 = time.perf_counter()
        self.accesses_to_r: int | None = None
        self.first_query_singleton: bool | None = None

    @property
    def feature_accesses(self) -> int:
        return self.store.feature_accesses - self._f0

    @property
    def total_accesses(self) -> int:
        return self.feature_accesses + (self.store.spatial_accesses - self._s0)

    def over_limit(self) -> bool:
        return self.total_accesses >= self.cfg.access_limit

    def note_first_query(self, singleton: bool) -> None:
        if self.first_query_singleton is None:
            self.first_query_singleton = bool(singleton)

    def note_r_obtained(self) -> None:
        if self.accesses_to_r is None:
            self.accesses_to_r = self.feature_accesses

    def finish(self, outcome, b=(), r=(), mapping=None) -> IdentificationResult:
        return IdentificationResult(
            method=self.method, outcome=outcome, b=tuple(b), r=tuple(r),
            mapping=dict(mapping or {}),
            accesses_query=self.feature_accesses,
            accesses_total=self.total_accesses,
            accesses_to_r=self.accesses_to_r,
            first_query_singleton=self.first_query_singleton,
            elapsed_ms=(time.perf_counter() - self._t0) * 1e3,
        )


def _window(value: float, sigma: float):
    return (value - 3.0 * sigma, value + 3.0 * sigma)


def dmt(image, b_idx, r_ids, store, cfg) -> dict[int, int]:
    """Direct match test: pick the candidate bijection with the best overlay.

    For each of the d! pairings of the image subset onto the catalog
    tuple, a two-observation attitude is formed from the first two mapped
    pairs (body -> catalog direction, so the overlay comparison happens in
    the catalog frame) and scored by how many nearby catalog stars overlay
    the rotated image.  If every pairing's overlay count equals |b| there
    is nothing to distinguish them and the empty mapping is returned.
    Costs one (spatial) catalog access for the neighborhood fetch.
    """
    d = len(b_idx)
    r_ids = tuple(int(i) for i in r_ids)
    r_vecs = store.star_vectors(r_ids)
    centroid = geom.unit(r_vecs.sum(axis=0))
    _, near_vecs = store.stars_near(centroid, cfg.psi / 2.0)
    sigma_o = cfg.resolved_sigma_o()
    b_vecs = image.vectors[list(b_idx)]

    best_perm = None
    best_score = -1
    all_equal_b = True
    for perm in itertools.permutations(range(d)):
        try:
            attitude = geom.triad(r_vecs[perm[0]], r_vecs[perm[1]],
                                  b_vecs[0], b_vecs[1])
        except geom.DegenerateGeometryError:
            continue
        score = int(geom.find_positive_overlay(near_vecs, image.vectors,
                                               attitude, sigma_o).sum())
        if score != d:
            all_equal_b = False
        if score > best_score:
            best_score, best_perm = score, perm
    if best_perm is None or all_equal_b:
        return {}
    return {int(b_idx[m]): r_ids[best_perm[m]] for m in range(d)}


# -- the six methods -----------------------------------------------------------


def _angle(image, store, cfg) -> IdentificationResult:
    run = _Run("ang", store, cfg)
    n = image.star_count
    for i, j in sequential_pairs(n):
        if run.over_limit():
            return run.finish(OUTCOME_ACCESS_LIMIT)
        theta = geom.angular_separation(image.vectors[i], image.vectors[j])
        candidates = store.query_pairs(*_window(theta, cfg.sigma_theta))
        run.note_first_query(len(candidates) == 1)
        if len(candidates) == 1:
            run.note_r_obtained()
            mapping = dmt(image, (i, j), candidates[0], store, cfg)
            if mapping:
                return run.finish(OUTCOME_IDENTIFIED, (i, j), candidates[0], mapping)
    return run.finish(OUTCOME_EXHAUSTED)


def _interior(image, store, cfg) -> IdentificationResult:
    run = _Run("int", store, cfg)
    n = image.star_count
    if n < 3:
        return run.finish(OUTCOME_EXHAUSTED)
    for c in range(n):
        if run.over_limit():
            return run.finish(OUTCOME_ACCESS_LIMIT)
        others = [x for x in range(n) if x != c]
        seps = geom.separations(image.vectors[c], image.vectors[others])
        order = np.lexsort((others, seps))  # ties -> lower image index
        c1 = others[order[0]]
        c2 = others[order[1]]
        theta1 = float(seps[order[0]])
        theta2 = float(seps[order[1]])
        try:
            phi = geom.interior_angle(image.vectors[c], image.vectors[c1],
                                      image.vectors[c2])
        except geom.DegenerateGeometryError:
            continue
        candidates = store.query_trio_perms(_window(theta1, cfg.sigma_theta),
                                            _window(theta2, cfg.sigma_theta),
                                            _window(phi, cfg.sigma_phi))
        run.note_first_query(len(candidates) == 1)
        if len(candidates) == 1:
            run.note_r_obtained()
            r = candidates[0]
            mapping = {c: r[0], c1: r[1], c2: r[2]}
            return run.finish(OUTCOME_IDENTIFIED, (c, c1, c2), r, mapping)
    return run.finish(OUTCOME_EXHAUSTED)


class _FeatureCache:
    """Per-run trio feature memo with a bulk-fill fallback.

    Pivot chains revisit the same (i, j, beta) trios across outer
    iterations; after a handful of individual computations it is cheaper
    to batch-evaluate every C(n, 3) trio of the image at once.
    """

    _BULK_AFTER = 8

    def __init__(self, image, kind, depth):
        self.image = image
        self.kind = kind
        self.depth = depth
        self.values: dict[tuple, tuple[float, float]] = {}
        self.misses = 0
        self.filled = False

    def _bulk_fill(self):
        n = self.image.star_count
        subsets = list(sequential_trios(n))
        v = self.image.vectors
        sel = np.array(subsets, dtype=np.int64)
        v1, v2, v3 = v[sel[:, 0]], v[sel[:, 1]], v[sel[:, 2]]
        if self.kind == "spherical":
            areas, moments = feat.spherical_features_arrays(v1, v2, v3, self.depth)
        else:
            areas, moments = feat.planar_features_arrays(v1, v2, v3)
        for subset, area, moment in zip(subsets, areas, moments):
            self.values[subset] = (float(area), float(moment))
        self.filled = True

    def __call__(self, subset) -> tuple[float, float]:
        key = tuple(sorted(subset))
        hit = self.values.get(key)
        if hit is not None:
            return hit
        self.misses += 1
        if self.misses > self._BULK_AFTER and not self.filled:
            self._bulk_fill()
            return self.values[key]
        v = self.image.vectors
        i, j, k = key
        if self.kind == "spherical":
            f = feat.spherical_features(v[i], v[j], v[k], self.depth)
        else:
            f = feat.planar_features(v[i], v[j], v[k])
        self.values[key] = (f.area, f.moment)
        return self.values[key]


def _trio_query(features, store, cfg, kind, subset):
    area, moment = features(subset)
    return store.query_trios(kind, _window(area, cfg.sigma_a),
                             _window(moment, cfg.sigma_tau))


def _pivot(image, features, i, j, k, candidates, store, cfg, run, kind):
    """Reduce R by swapping the third star and keeping partial matches.

    Returns (candidates, subset): the surviving candidate tuples and the
    image subset they correspond to — after a swap the candidates describe
    (i, j, beta), and the caller must carry that subset into the match
    test to keep the third pairing consistent.
    """
    subset = (i, j, k)
    if len(candidates) == 1:
        return candidates, subset
    pool = [x for x in range(image.star_count) if x not in subset]
    for beta in pool:
        if run.over_limit():
            return [], subset
        fresh = _trio_query(features, store, cfg, kind, (i, j, beta))
        candidates = partial_match(candidates, fresh)
        subset = (i, j, beta)
        if len(candidates) <= 1:
            break
    return (candidates if len(candidates) == 1 else []), subset


def pivot(image, i, j, candidates, store, cfg, kind="spherical", k=None):
    """Public pivot entry point; returns the surviving candidate set.

    ``k`` is the third member of the failing subset (defaults to the
    smallest index not in {i, j}) and is excluded from the swap pool.
    """
    if k is None:
        k = next(x for x in range(image.star_count) if x not in (i, j))
    run = _Run("pivot", store, cfg)
    features = _FeatureCache(image, kind, store.moment_depth)
    kept, _ = _pivot(image, features, i, j, k, list(candidates), store, cfg,
                     run, kind)
    return kept


def _triangle(tag, kind, image, store, cfg) -> IdentificationResult:
    run = _Run(tag, store, cfg)
    n = image.star_count
    features = _FeatureCache(image, kind, store.moment_depth)
    for i, j, k in sequential_trios(n):
        if run.over_limit():
            return run.finish(OUTCOME_ACCESS_LIMIT)
        candidates = _trio_query(features, store, cfg, kind, (i, j, k))
        run.note_first_query(len(candidates) == 1)
        subset = (i, j, k)
        if len(candidates) != 1:
            candidates, subset = _pivot(image, features, i, j, k, candidates,
                                        store, cfg, run, kind)
        if len(candidates) == 1:
            run.note_r_obtained()
            mapping = dmt(image, subset, candidates[0], store, cfg)
            if mapping:
                return run.finish(OUTCOME_IDENTIFIED, subset, candidates[0], mapping)
    return run.finish(OUTCOME_EXHAUSTED)


def _reference_star(n, subset):
    """Reference star for verification: first index cyclically after the subset.

    Scanning from max(subset) + 1 (wrapping) rather than always from 0
    varies the reference across candidate subsets; a fixed choice would let
    a single false star at a low image index poison every verification.
    Deterministic for a given image, and never retried within one subset.
    """
    if n <= len(subset):
        return None
    start = (max(subset) + 1) % n
    for step in range(n):
        x = (start + step) % n
        if x not in subset:
            return x
    return None


def _pyramid(image, store, cfg) -> IdentificationResult:
    run = _Run("pyr", store, cfg)
    n = image.star_count
    v = image.vectors

    def pair_query(a, b):
        theta = geom.angular_separation(v[a], v[b])
        return store.query_pairs(*_window(theta, cfg.sigma_theta))

    for i, j, k in pyramid_trios(n):
        if run.over_limit():
            return run.finish(OUTCOME_ACCESS_LIMIT)
        t_ij = pair_query(i, j)
        t_ik = pair_query(i, k)
        t_jk = pair_query(j, k)
        cand_i = flatten_intersect(t_ij, t_ik)
        cand_j = flatten_intersect(t_ij, t_jk)
        cand_k = flatten_intersect(t_ik, t_jk)
        singleton = len(cand_i) == len(cand_j) == len(cand_k) == 1
        run.note_first_query(singleton)
        if not singleton:
            continue
        r = (next(iter(cand_i)), next(iter(cand_j)), next(iter(cand_k)))
        if len(set(r)) != 3:
            continue  # candidate stars collide; not a valid trio
        run.note_r_obtained()
        if cfg.verification:
            beta = _reference_star(n, (i, j, k))
            if beta is None:
                continue
            t_ib = pair_query(i, beta)
            t_jb = pair_query(j, beta)
            t_kb = pair_query(k, beta)
            t_beta = flatten_intersect(t_ib, t_jb) & flatten_intersect(t_jb, t_kb)
            if len(t_beta) != 1:
                continue
        mapping = {i: r[0], j: r[1], k: r[2]}
        return run.finish(OUTCOME_IDENTIFIED, (i, j, k), r, mapping)
    return run.finish(OUTCOME_EXHAUSTED)


def _composite(image, store, cfg) -> IdentificationResult:
    run = _Run("com", store, cfg)
    n = image.star_count
    kind = "planar"
    features = _FeatureCache(image, kind, store.moment_depth)
    for i, j, k in pyramid_trios(n):
        if run.over_limit():
            return run.finish(OUTCOME_ACCESS_LIMIT)
        candidates = _trio_query(features, store, cfg, kind, (i, j, k))
        run.note_first_query(len(candidates) == 1)
        if len(candidates) != 1:
            continue
        run.note_r_obtained()
        if cfg.verification:
            beta = _reference_star(n, (i, j, k))
            if beta is None:
                continue
            t_1 = _trio_query(features, store, cfg, kind, (i, j, beta))
            t_2 = _trio_query(features, store, cfg, kind, (i, k, beta))
            t_3 = _trio_query(features, store, cfg, kind, (j, k, beta))
            t_beta = flatten_intersect(t_1, t_2) & flatten_intersect(t_2, t_3)
            if len(t_beta) != 1:
                continue
        mapping = dmt(image, (i, j, k), candidates[0], store, cfg)
        if mapping:
            return run.finish(OUTCOME_IDENTIFIED, (i, j, k), candidates[0], mapping)
    return run.finish(OUTCOME_EXHAUSTED)


_METHODS = {
    "ang": _angle,
    "int": _interior,
    "sph": lambda image, store, cfg: _triangle("sph", "spherical", image, store, cfg),
    "pln": lambda image, store, cfg: _triangle("pln", "planar", image, store, cfg),
    "pyr": _pyramid,
    "com": _composite,
}


def identify(method: str, image, store, cfg: MethodConfig | None = None) -> IdentificationResult:
    """Run one identification method on an image against a catalog store."""
    if method not in _METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHOD_TAGS}")
    return _METHODS[method](image, store, cfg or default_config(method))


# -- single query steps (benchmark probes) -------------------------------------


@dataclass(frozen=True)
class QueryStep:
    """Result of one catalog query step: candidate count and truth presence."""

    n_candidates: int
    singleton: bool
    true_present: bool


def _true_labels(image, subset):
    labels = [int(image.labels[x]) for x in subset]
    return labels


def query_step(method: str, image, store, cfg: MethodConfig | None = None) -> QueryStep:
    """Issue only the method's first catalog query step and score it.

    ``true_present`` asks whether the subset's true catalog counterpart
    survived the filter (set-wise for unordered tuples, ordered for the
    Interior Angle permutation table, member-wise for Pyramid).
    """
    cfg = cfg or default_config(method)
    v = image.vectors
    if method == "ang":
        subset = next(sequential_pairs(image.star_count))
        theta = geom.angular_separation(v[subset[0]], v[subset[1]])
        rows = store.query_pairs(*_window(theta, cfg.sigma_theta))
        truth = set(_true_labels(image, subset))
        present = any(set(row) == truth for row in rows)
        return QueryStep(len(rows), len(rows) == 1, present)
    if method == "int":
        if image.star_count < 3:
            raise ValueError("interior-angle query step needs n >= 3")
        c = 0
        others = list(range(1, image.star_count))
        seps = geom.separations(v[c], v[others])
        order = np.lexsort((others, seps))
        c1, c2 = others[order[0]], others[order[1]]
        phi = geom.interior_angle(v[c], v[c1], v[c2])
        rows = store.query_trio_perms(
            _window(float(seps[order[0]]), cfg.sigma_theta),
            _window(float(seps[order[1]]), cfg.sigma_theta),
            _window(phi, cfg.sigma_phi))
        truth = tuple(_true_labels(image, (c, c1, c2)))
        return QueryStep(len(rows), len(rows) == 1, truth in rows)
    if method in ("sph", "pln", "com"):
        kind = "spherical" if method == "sph" else "planar"
        subset = next(sequential_trios(image.star_count)) if method != "com" \
            else next(pyramid_trios(image.star_count))
        features = _FeatureCache(image, kind, store.moment_depth)
        rows = _trio_query(features, store, cfg, kind, subset)
        truth = set(_true_labels(image, subset))
        present = any(set(row) == truth for row in rows)
        return QueryStep(len(rows), len(rows) == 1, present)
    if method == "pyr":
        i, j, k = next(pyramid_trios(image.star_count))
        def pair_rows(a, b):
            theta = geom.angular_separation(v[a], v[b])
            return store.query_pairs(*_window(theta, cfg.sigma_theta))
        t_ij, t_ik, t_jk = pair_rows(i, j), pair_rows(i, k), pair_rows(j, k)
        cand_i = flatten_intersect(t_ij, t_ik)
        cand_j = flatten_intersect(t_ij, t_jk)
        cand_k = flatten_intersect(t_ik, t_jk)
        count = len(cand_i) * len(cand_j) * len(cand_k)
        truth = _true_labels(image, (i, j, k))
        present = (truth[0] in cand_i and truth[1] in cand_j and truth[2] in cand_k)
        singleton = len(cand_i) == len(cand_j) == len(cand_k) == 1
        return QueryStep(count, singleton, present)
    raise ValueError(f"unknown method {method!r}")
