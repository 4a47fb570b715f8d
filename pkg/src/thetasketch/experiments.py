"""Monte Carlo experiments over the samplers, with exact seed discipline.

Every experiment is a pure function of (base seed, parameters): trial t uses
the hash function selected by derive_trial_seed(base, t), and per-trial
stream orders come from an auxiliary hash of the same trial seed.  Results
are therefore reproducible byte for byte, independent of chunking or thread
count.

The hot paths run on (trials x n) matrices: identifier folds are computed
once per stream layout, and each chunk of trials applies its seed keys in
one vector pass.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from ._kernels import (
    alpha_scan_batch,
    alpha_scan_perm_batch,
    count_below_batch,
    count_below_masked_batch,
    hashed_values_batch,
    order_raws_batch,
)
from .errors import DomainError, IdsUnavailable, WrongKind
from .hashing import (
    derive_trial_seeds,
    fold_decimal_ids,
    mix64,
    mix64_array,
    seed_key_array,
)
from .samplers import SamplerConfig, alpha_for_k, largest_power_below
from .sketch import Predicate, TcfKind

_CHUNK_ELEMS = 1 << 22
_ORDER_SALT = 0x5BF0_3635_DEAD_BEEF


class Estimator(Enum):
    FRAMEWORK = "framework"
    HIP = "hip"


@dataclass(frozen=True)
class TrialStats:
    """Summary of one estimator across independent trials."""

    trials: int
    mean: float
    sample_variance: float
    stderr_of_mean: float
    truth: float
    rmse_over_truth: float


def _stats(estimates: np.ndarray, truth: float) -> TrialStats:
    trials = estimates.size
    mean = float(estimates.mean())
    var = float(estimates.var(ddof=1)) if trials > 1 else 0.0
    stderr = math.sqrt(var / trials)
    rmse = math.sqrt(float(np.mean((estimates - truth) ** 2)))
    return TrialStats(
        trials=trials,
        mean=mean,
        sample_variance=var,
        stderr_of_mean=stderr,
        truth=truth,
        rmse_over_truth=rmse / truth if truth > 0 else float("nan"),
    )


@dataclass(frozen=True)
class StreamSpec:
    """Synthetic stream layout with known sizes and overlaps.

    ``sizes`` gives the distinct count of each stream.  ``shared`` many
    identifiers are common to every stream (the rest are private), and
    ``identical=True`` makes every stream the same base set.  ``order`` is
    either "shuffled" (persistent per-trial shuffle) or "sorted".
    """

    sizes: tuple[int, ...]
    shared: int = 0
    identical: bool = False
    order: str = "shuffled"

    def __post_init__(self):
        if not self.sizes or any(s < 1 for s in self.sizes):
            raise ValueError("sizes must be positive")
        if self.shared < 0 or (self.sizes and self.shared > min(self.sizes)):
            raise ValueError("shared must lie in [0, min(sizes)]")
        if self.order not in ("shuffled", "sorted"):
            raise ValueError("order must be 'shuffled' or 'sorted'")
        if self.identical and len(set(self.sizes)) > 1:
            raise ValueError("identical streams must have equal sizes")

    @classmethod
    def single(cls, n: int, order: str = "shuffled") -> "StreamSpec":
        return cls((n,), order=order)

    @classmethod
    def disjoint(cls, sizes: Sequence[int], order: str = "shuffled") -> "StreamSpec":
        return cls(tuple(sizes), order=order)

    @classmethod
    def overlapping(
        cls, sizes: Sequence[int], intersection_size: int, order: str = "shuffled"
    ) -> "StreamSpec":
        return cls(tuple(sizes), shared=intersection_size, order=order)

    @classmethod
    def permutations(cls, base_size: int, m: int, order: str = "shuffled") -> "StreamSpec":
        return cls((base_size,) * m, identical=True, order=order)


class _Streams:
    """Materialized identifier arrays and folds for one StreamSpec."""

    def __init__(self, spec: StreamSpec):
        self.spec = spec
        m = len(spec.sizes)
        if spec.identical:
            universe = spec.sizes[0]
            idx = np.arange(universe, dtype=np.intp)
            self.stream_indices = [idx for _ in range(m)]
            self.n_intersection = universe
        else:
            universe = spec.shared + sum(s - spec.shared for s in spec.sizes)
            shared_idx = np.arange(spec.shared, dtype=np.intp)
            self.stream_indices = []
            base = spec.shared
            for s in spec.sizes:
                private = np.arange(base, base + (s - spec.shared), dtype=np.intp)
                self.stream_indices.append(np.concatenate([shared_idx, private]))
                base += s - spec.shared
            self.n_intersection = spec.shared if m >= 2 else spec.sizes[0]
        self.universe_size = universe
        self.n_union = universe
        self.width = max(1, len(str(max(0, universe - 1))))
        self.folds = fold_decimal_ids(np.arange(universe, dtype=np.uint64), self.width)
        self.has_duplicates = m >= 2 and (spec.identical or spec.shared > 0)

    def identifier(self, i: int) -> bytes:
        return str(i).zfill(self.width).encode()

    def identifiers(self):
        for i in range(self.universe_size):
            yield self.identifier(i)

    def stream_ids(self, j: int):
        for i in self.stream_indices[j]:
            yield self.identifier(int(i))


@lru_cache(maxsize=32)
def materialize(spec: StreamSpec) -> _Streams:
    return _Streams(spec)


def predicate_mask(streams: _Streams, predicate: Predicate) -> Optional[np.ndarray]:
    """Boolean mask of the predicate over the universe; None for the trivial one."""
    if predicate.is_all:
        return None
    return np.fromiter(
        (predicate(ident) for ident in streams.identifiers()),
        dtype=bool,
        count=streams.universe_size,
    )


def _thread_count() -> int:
    env = os.environ.get("THETA_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_chunks(trials: int, n_per_trial: int, worker: Callable[[int, int], None]) -> None:
    """Run worker(start, count) over trial chunks, threaded when allowed.

    Workers write into preallocated per-trial slots, so scheduling order
    cannot change any result.
    """
    chunk = max(1, _CHUNK_ELEMS // max(1, n_per_trial))
    starts = list(range(0, trials, chunk))
    threads = min(_thread_count(), len(starts))
    if threads <= 1:
        for s in starts:
            worker(s, min(chunk, trials - s))
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, s, min(chunk, trials - s)) for s in starts]
        for f in futures:
            f.result()


def _order_index(
    folds: np.ndarray, seeds: np.ndarray, stream_index: int, order: str, n: int
) -> np.ndarray:
    """Per-trial stream orders as an index matrix (trials x n)."""
    if order == "sorted":
        return np.broadcast_to(np.arange(n, dtype=np.int64), (seeds.shape[0], n))
    salt = np.uint64(mix64(_ORDER_SALT + 0x9E37_79B9 * (stream_index + 1)))
    keys = seed_key_array(mix64_array(seeds ^ salt))
    return np.argsort(order_raws_batch(folds, keys), axis=1)


def _alpha_thetas(
    values: np.ndarray, folds: np.ndarray, seeds: np.ndarray, stream_index: int, order: str, k: int
) -> np.ndarray:
    if order == "sorted":
        return alpha_scan_batch(values, k, alpha_for_k(k))
    idx = _order_index(folds, seeds, stream_index, order, values.shape[1])
    return alpha_scan_perm_batch(values, idx, k, alpha_for_k(k))


def _kmv_order_stat(values: np.ndarray, k: int) -> np.ndarray:
    """Per-row (k+1)-st smallest value, or 1.0 when rows are too short."""
    n = values.shape[1]
    if n <= k:
        return np.ones(values.shape[0], dtype=np.float64)
    return np.partition(values, k, axis=1)[:, k]


def _thetas_for_kind(
    cfg: SamplerConfig,
    values: np.ndarray,
    folds: np.ndarray,
    seeds: np.ndarray,
    stream_index: int,
    order: str,
) -> np.ndarray:
    kind = cfg.kind
    if kind is TcfKind.FIXED:
        return np.full(values.shape[0], cfg.p)
    if kind is TcfKind.ALPHA:
        return _alpha_thetas(values, folds, seeds, stream_index, order, cfg.k)
    m = _kmv_order_stat(values, cfg.k)
    if kind is TcfKind.KMV:
        return m
    if kind is TcfKind.PKMV:
        return np.minimum(m, cfg.p)
    if kind is TcfKind.ADAPTIVE:
        out = np.empty_like(m)
        for r in range(m.shape[0]):
            out[r] = 1.0 if m[r] == 1.0 else largest_power_below(cfg.beta, m[r])
        return out
    raise WrongKind(f"no vectorized threshold for {kind}")


def _counts_below(values: np.ndarray, thetas: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    if mask is None:
        return count_below_batch(values, thetas)
    return count_below_masked_batch(values, thetas, mask)


def _trial_values(folds: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    return hashed_values_batch(folds, seed_key_array(seeds))


def run_estimator_trials(
    cfg: SamplerConfig,
    spec: StreamSpec,
    predicate: Predicate,
    estimator: Estimator,
    trials: int,
) -> TrialStats:
    """Distribution of the chosen estimator against the known distinct count.

    Multi-stream specs estimate the union through the min-threshold combining
    rule; the level-only (HIP) estimator exists for single ALPHA streams only.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if estimator is Estimator.HIP:
        if cfg.kind is not TcfKind.ALPHA:
            raise WrongKind("the HIP estimator requires the ALPHA sampler")
        if len(spec.sizes) > 1:
            raise WrongKind("the HIP estimator is not mergeable across streams")
    if not predicate.is_all and not cfg.retain_ids:
        raise IdsUnavailable("predicate estimation requires retain_ids")
    streams = materialize(spec)
    mask = predicate_mask(streams, predicate)
    estimates = np.empty(trials, dtype=np.float64)
    if mask is None:
        truth = float(streams.n_union)
    else:
        truth = float(mask.sum())

    def worker(start: int, count: int) -> None:
        seeds = derive_trial_seeds(cfg.seed, start, count)
        values = _trial_values(streams.folds, seeds)
        thetas = np.ones(count, dtype=np.float64)
        for j, idx in enumerate(streams.stream_indices):
            tj = _thetas_for_kind(
                cfg, values[:, idx], streams.folds[idx], seeds, j, spec.order
            )
            thetas = np.minimum(thetas, tj)
        if estimator is Estimator.HIP:
            estimates[start : start + count] = cfg.k / thetas
        else:
            counts = _counts_below(values, thetas, mask)
            estimates[start : start + count] = counts / thetas

    _run_chunks(trials, streams.universe_size, worker)
    return _stats(estimates, truth)


def run_retained_count_trials(cfg: SamplerConfig, spec: StreamSpec, trials: int) -> TrialStats:
    """Distribution of the retained-set size |S| (truth is the target size k)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    streams = materialize(spec)
    counts_out = np.empty(trials, dtype=np.float64)

    def worker(start: int, count: int) -> None:
        seeds = derive_trial_seeds(cfg.seed, start, count)
        values = _trial_values(streams.folds, seeds)
        thetas = np.ones(count, dtype=np.float64)
        for j, idx in enumerate(streams.stream_indices):
            tj = _thetas_for_kind(
                cfg, values[:, idx], streams.folds[idx], seeds, j, spec.order
            )
            thetas = np.minimum(thetas, tj)
        counts_out[start : start + count] = _counts_below(values, thetas, None)

    _run_chunks(trials, streams.universe_size, worker)
    return _stats(counts_out, float(cfg.k))


@dataclass(frozen=True)
class ComparativeVariance:
    """Variance of the union-rule estimate vs the concatenated-stream estimate."""

    kind: TcfKind
    k: int
    m: int
    trials: int
    truth: float
    var_union: float
    var_concat: float
    ratio: float
    stderr_var_union: float
    stderr_var_concat: float
    rmse_over_truth_union: float
    rmse_over_truth_concat: float


def _dedupe_rows_first_occurrence(ids: np.ndarray, out: np.ndarray) -> None:
    """Row-wise stable dedupe of id matrices into (rows, n_unique) out."""
    for r in range(ids.shape[0]):
        _, first = np.unique(ids[r], return_index=True)
        out[r] = ids[r][np.sort(first)]


def run_comparative_variance(
    spec: StreamSpec,
    cfg: SamplerConfig,
    predicate: Predicate,
    trials: int,
) -> ComparativeVariance:
    """Couple both arms on one hash function per trial and compare variances."""
    if len(spec.sizes) < 2:
        raise ValueError("comparative variance needs m >= 2 streams")
    if trials < 2:
        raise ValueError("trials must be >= 2")
    if not predicate.is_all and not cfg.retain_ids:
        raise IdsUnavailable("predicate estimation requires retain_ids")
    streams = materialize(spec)
    mask = predicate_mask(streams, predicate)
    truth = float(streams.n_union if mask is None else mask.sum())
    est_union = np.empty(trials, dtype=np.float64)
    est_concat = np.empty(trials, dtype=np.float64)

    def worker(start: int, count: int) -> None:
        seeds = derive_trial_seeds(cfg.seed, start, count)
        values = _trial_values(streams.folds, seeds)
        thetas = np.ones(count, dtype=np.float64)
        orders = []
        for j, idx in enumerate(streams.stream_indices):
            vj = values[:, idx]
            if cfg.kind is TcfKind.ALPHA:
                oidx = _order_index(streams.folds[idx], seeds, j, spec.order, idx.shape[0])
                orders.append(idx[oidx])
                tj = alpha_scan_perm_batch(vj, oidx, cfg.k, alpha_for_k(cfg.k))
            else:
                tj = _thetas_for_kind(cfg, vj, streams.folds[idx], seeds, j, spec.order)
            thetas = np.minimum(thetas, tj)
        counts = _counts_below(values, thetas, mask)
        est_union[start : start + count] = counts / thetas

        if cfg.kind is TcfKind.ALPHA:
            concat_ids = np.concatenate(orders, axis=1)
            if streams.has_duplicates:
                deduped = np.empty((count, streams.universe_size), dtype=np.int64)
                _dedupe_rows_first_occurrence(concat_ids, deduped)
                concat_ids = deduped
            thetas_star = alpha_scan_perm_batch(
                values, concat_ids, cfg.k, alpha_for_k(cfg.k)
            )
        else:
            # the distinct hashes of the concatenation are exactly the universe
            thetas_star = _thetas_for_kind(
                cfg, values, streams.folds, seeds, len(streams.stream_indices), spec.order
            )
        counts_star = _counts_below(values, thetas_star, mask)
        est_concat[start : start + count] = counts_star / thetas_star

    _run_chunks(trials, streams.universe_size * 2, worker)
    var_u = float(est_union.var(ddof=1))
    var_c = float(est_concat.var(ddof=1))
    return ComparativeVariance(
        kind=cfg.kind,
        k=cfg.k,
        m=len(spec.sizes),
        trials=trials,
        truth=truth,
        var_union=var_u,
        var_concat=var_c,
        ratio=var_u / var_c if var_c > 0 else float("inf"),
        stderr_var_union=var_u * math.sqrt(2.0 / (trials - 1)),
        stderr_var_concat=var_c * math.sqrt(2.0 / (trials - 1)),
        rmse_over_truth_union=math.sqrt(float(np.mean((est_union - truth) ** 2))) / truth,
        rmse_over_truth_concat=math.sqrt(float(np.mean((est_concat - truth) ** 2))) / truth,
    )


@dataclass(frozen=True)
class PerItemCovariance:
    """Sample covariance of two per-item estimates, with their means."""

    trials: int
    covariance: float
    stderr: float
    mean_v1: float
    stderr_v1: float
    mean_v2: float
    stderr_v2: float


def _biased_two_stat_thetas(values: np.ndarray, k: int) -> np.ndarray:
    """Vectorized threshold of the deliberately biased two-order-statistic rule."""
    if values.shape[1] < k + 1:
        raise DomainError("the biased rule needs at least k+1 distinct hashes")
    part = np.partition(values, (k - 1, k), axis=1)
    m_k = part[:, k - 1]
    m_k1 = part[:, k]
    return np.where((k - 1) / m_k > k / m_k1, m_k, m_k1)


def run_per_item_covariance(
    cfg: SamplerConfig,
    n: int,
    l1: int,
    l2: int,
    trials: int,
    use_biased_tcf: bool = False,
) -> PerItemCovariance:
    """Estimate cov(V_l1, V_l2) where V_l = [hash of item l < theta] / theta."""
    if not (0 <= l1 < n and 0 <= l2 < n and l1 != l2):
        raise ValueError("positions must be distinct and within the stream")
    if trials < 2:
        raise ValueError("trials must be >= 2")
    spec = StreamSpec.single(n)
    streams = materialize(spec)
    v1 = np.empty(trials, dtype=np.float64)
    v2 = np.empty(trials, dtype=np.float64)

    def worker(start: int, count: int) -> None:
        seeds = derive_trial_seeds(cfg.seed, start, count)
        values = _trial_values(streams.folds, seeds)
        if use_biased_tcf:
            thetas = _biased_two_stat_thetas(values, cfg.k)
        else:
            thetas = _thetas_for_kind(cfg, values, streams.folds, seeds, 0, spec.order)
        v1[start : start + count] = (values[:, l1] < thetas) / thetas
        v2[start : start + count] = (values[:, l2] < thetas) / thetas

    _run_chunks(trials, n, worker)
    m1, m2 = float(v1.mean()), float(v2.mean())
    prod = (v1 - m1) * (v2 - m2)
    cov = float(prod.sum() / (trials - 1))
    return PerItemCovariance(
        trials=trials,
        covariance=cov,
        stderr=float(prod.std(ddof=1) / math.sqrt(trials)),
        mean_v1=m1,
        stderr_v1=float(v1.std(ddof=1) / math.sqrt(trials)),
        mean_v2=m2,
        stderr_v2=float(v2.std(ddof=1) / math.sqrt(trials)),
    )


def run_biased_estimator_trials(k: int, n: int, trials: int, seed: int) -> TrialStats:
    """Full-stream estimate under the biased rule (detects its upward bias)."""
    if trials < 2:
        raise ValueError("trials must be >= 2")
    spec = StreamSpec.single(n)
    streams = materialize(spec)
    estimates = np.empty(trials, dtype=np.float64)

    def worker(start: int, count: int) -> None:
        seeds = derive_trial_seeds(seed, start, count)
        values = _trial_values(streams.folds, seeds)
        thetas = _biased_two_stat_thetas(values, k)
        estimates[start : start + count] = _counts_below(values, thetas, None) / thetas

    _run_chunks(trials, n, worker)
    return _stats(estimates, float(n))


@dataclass(frozen=True)
class AccuracyRow:
    n: int
    kind: TcfKind
    k: int
    trials: int
    rmse_over_truth: float


def run_accuracy_profile(
    cfgs: Sequence[SamplerConfig],
    n_sweep: Sequence[int],
    trials: int,
) -> list[AccuracyRow]:
    """Relative error profile of each sampler family across stream sizes."""
    if list(n_sweep) != sorted(n_sweep):
        raise ValueError("n_sweep must be ascending")
    rows = []
    for cfg in cfgs:
        for n in n_sweep:
            stats = run_estimator_trials(
                cfg, StreamSpec.single(n), Predicate.all(), Estimator.FRAMEWORK, trials
            )
            rows.append(
                AccuracyRow(
                    n=n,
                    kind=cfg.kind,
                    k=cfg.k,
                    trials=trials,
                    rmse_over_truth=stats.rmse_over_truth,
                )
            )
    return rows


@dataclass(frozen=True)
class ScatterRow:
    size_a: int
    size_b: int
    similarity: float
    re_union: float
    re_concat: float


def run_overlap_scatter(
    size_range: tuple[int, int] = (201, 5429),
    similarity_targets: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
    k: int = 128,
    trials_per_pair: int = 1000,
    pairs: int = 20,
    seed: int = 0,
) -> list[ScatterRow]:
    """Relative error of union-rule vs concatenated estimates on stream pairs.

    Pair sizes and overlaps are drawn deterministically from the seed.  Rows
    are report-only: overlapping pairs may exceed the disjoint-case bound.
    """
    lo, hi = size_range
    if not 1 <= lo <= hi:
        raise ValueError("invalid size range")
    rows = []
    for pair in range(pairs):
        s1 = lo + mix64(seed + 3 * pair + 1) % (hi - lo + 1)
        s2 = lo + mix64(seed + 3 * pair + 2) % (hi - lo + 1)
        sim = float(similarity_targets[pair % len(similarity_targets)])
        inter = int(round(sim * min(s1, s2)))
        spec = StreamSpec.overlapping((s1, s2), inter)
        cfg = SamplerConfig(
            kind=TcfKind.ALPHA, k=k, seed=mix64(seed + 3 * pair + 3)
        )
        result = run_comparative_variance(spec, cfg, Predicate.all(), trials_per_pair)
        rows.append(
            ScatterRow(
                size_a=s1,
                size_b=s2,
                similarity=sim,
                re_union=result.rmse_over_truth_union,
                re_concat=result.rmse_over_truth_concat,
            )
        )
    return rows
