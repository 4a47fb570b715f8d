"""Single-pass sampling algorithms and the pure reference threshold rules.

Each sampler consumes a stream of byte-string identifiers and finalizes into
a theta-sketch.  The module also ships order-free (or, for the level-counter
sampler, two-pass) reference implementations of every threshold rule; the
streaming and reference routes are verified against each other exactly.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import WrongKind
from .hashing import UnitHash, hash_identifier, unit_value
from .sketch import BASE_KINDS, Entry, TcfKind, ThetaSketch, sketch_from_entries

# Powers of alpha and beta are produced by cumulative multiplication from a
# shared cache, so every code path that compares against the same level gets
# the bit-identical float.
_POWER_CACHE: dict[float, list[float]] = {}


def _power(base: float, i: int) -> float:
    cache = _POWER_CACHE.setdefault(base, [1.0])
    while len(cache) <= i:
        cache.append(cache[-1] * base)
    return cache[i]


def alpha_for_k(k: int) -> float:
    return k / (k + 1)


def alpha_power(k: int, i: int) -> float:
    """alpha**i for alpha = k/(k+1), consistent across all code paths."""
    return _power(alpha_for_k(k), i)


def beta_power(beta: float, i: int) -> float:
    return _power(beta, i)


def largest_power_below(base: float, z: float) -> float:
    """The largest base**i (i a nonnegative integer) strictly less than z."""
    if not 0.0 < base < 1.0:
        raise ValueError("base must lie in (0, 1)")
    if not 0.0 < z <= 1.0:
        raise ValueError("z must lie in (0, 1]")
    i = max(0, int(math.log(z) / math.log(base)))
    while _power(base, i) >= z:
        i += 1
    while i > 0 and _power(base, i - 1) < z:
        i -= 1
    return _power(base, i)


@dataclass(frozen=True)
class SamplerConfig:
    """Parameters of one base sampler.

    beta applies to ADAPTIVE only; p to PKMV and FIXED only.
    """

    kind: TcfKind
    k: int
    seed: int
    beta: float = 0.5
    p: float = 1.0
    retain_ids: bool = False

    def __post_init__(self):
        if self.kind not in BASE_KINDS:
            raise ValueError(f"{self.kind} is not a base sampler kind")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.kind is TcfKind.ADAPTIVE and not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.kind in (TcfKind.PKMV, TcfKind.FIXED) and not 0.0 < self.p <= 1.0:
            raise ValueError("p must lie in (0, 1]")


class Sampler:
    """Common interface of the five streaming samplers."""

    config: SamplerConfig

    def update(self, identifier: bytes) -> None:
        raise NotImplementedError

    def update_many(self, identifiers: Iterable[bytes]) -> None:
        for identifier in identifiers:
            self.update(identifier)

    @property
    def theta(self) -> float:
        """Current threshold; never increases while a stream is processed."""
        raise NotImplementedError

    def _retained(self) -> list[tuple[int, Optional[bytes]]]:
        raise NotImplementedError

    def finalize(self) -> ThetaSketch:
        """The (theta, entries) sketch of everything consumed so far."""
        theta = self.theta
        cfg = self.config
        entries = [
            Entry(UnitHash(raw), ident if cfg.retain_ids else None)
            for raw, ident in self._retained()
            if unit_value(raw) < theta
        ]
        return sketch_from_entries(cfg.kind, cfg.k, cfg.seed, theta, cfg.retain_ids, entries)

    def _hash(self, identifier: bytes) -> int:
        return hash_identifier(identifier, self.config.seed).raw


class KmvSampler(Sampler):
    """Keeps the k+1 smallest distinct hashes; theta is the largest of them."""

    def __init__(self, config: SamplerConfig):
        self.config = config
        self._heap: list[int] = []  # max-heap via negation, size <= k+1
        self._members: set[int] = set()
        self._ids: dict[int, bytes] = {}

    def update(self, identifier: bytes) -> None:
        raw = self._hash(identifier)
        if raw in self._members:
            return
        limit = self.config.k + 1
        if len(self._heap) < limit:
            heapq.heappush(self._heap, -raw)
            self._members.add(raw)
            if self.config.retain_ids:
                self._ids[raw] = identifier
        elif raw < -self._heap[0]:
            evicted = -heapq.heappushpop(self._heap, -raw)
            self._members.discard(evicted)
            self._ids.pop(evicted, None)
            self._members.add(raw)
            if self.config.retain_ids:
                self._ids[raw] = identifier

    @property
    def theta(self) -> float:
        if len(self._heap) <= self.config.k:
            return 1.0
        return unit_value(-self._heap[0])

    def _retained(self) -> list[tuple[int, Optional[bytes]]]:
        return [(raw, self._ids.get(raw)) for raw in self._members]


class AdaptiveSampler(Sampler):
    """Halving-style sampler: keeps hashes below beta**level, culling on overflow."""

    def __init__(self, config: SamplerConfig):
        self.config = config
        self._level = 0
        self._table: dict[int, Optional[bytes]] = {}

    def update(self, identifier: bytes) -> None:
        raw = self._hash(identifier)
        if unit_value(raw) >= self.theta or raw in self._table:
            return
        self._table[raw] = identifier if self.config.retain_ids else None
        while len(self._table) > self.config.k:
            self._level += 1
            thr = beta_power(self.config.beta, self._level)
            self._table = {r: i for r, i in self._table.items() if unit_value(r) < thr}

    @property
    def theta(self) -> float:
        return beta_power(self.config.beta, self._level)

    def _retained(self) -> list[tuple[int, Optional[bytes]]]:
        return list(self._table.items())


class FixedSampler(Sampler):
    """Bernoulli-style sampler with the constant threshold p."""

    def __init__(self, config: SamplerConfig):
        self.config = config
        self._table: dict[int, Optional[bytes]] = {}

    def update(self, identifier: bytes) -> None:
        raw = self._hash(identifier)
        if unit_value(raw) < self.config.p and raw not in self._table:
            self._table[raw] = identifier if self.config.retain_ids else None

    @property
    def theta(self) -> float:
        return self.config.p

    def _retained(self) -> list[tuple[int, Optional[bytes]]]:
        return list(self._table.items())


class PkmvSampler(Sampler):
    """Hybrid sampler: theta = min(k+1 smallest distinct hash, p).

    Hashes at or above p can never be retained, so the bounded KMV structure
    only tracks hashes below p.
    """

    def __init__(self, config: SamplerConfig):
        self.config = config
        self._heap: list[int] = []
        self._members: set[int] = set()
        self._ids: dict[int, bytes] = {}

    def update(self, identifier: bytes) -> None:
        raw = self._hash(identifier)
        if unit_value(raw) >= self.config.p or raw in self._members:
            return
        limit = self.config.k + 1
        if len(self._heap) < limit:
            heapq.heappush(self._heap, -raw)
            self._members.add(raw)
            if self.config.retain_ids:
                self._ids[raw] = identifier
        elif raw < -self._heap[0]:
            evicted = -heapq.heappushpop(self._heap, -raw)
            self._members.discard(evicted)
            self._ids.pop(evicted, None)
            self._members.add(raw)
            if self.config.retain_ids:
                self._ids[raw] = identifier

    @property
    def theta(self) -> float:
        if len(self._heap) <= self.config.k:
            return self.config.p
        return min(unit_value(-self._heap[0]), self.config.p)

    def _retained(self) -> list[tuple[int, Optional[bytes]]]:
        return [(raw, self._ids.get(raw)) for raw in self._members]


class AlphaSampler(Sampler):
    """Order-sensitive sampler interleaving dedup with a level counter.

    The first k distinct hashes form the prefix and enter the dedup table at
    level 0.  Afterwards a novel hash below alpha**level raises the level by
    one.  With ``purge=True`` table entries at or above the current threshold
    are dropped eagerly; both variants produce identical sketches because a
    purged hash can never pass the threshold test again.
    """

    def __init__(self, config: SamplerConfig, purge: bool = False):
        self.config = config
        self._purge = purge
        self._alpha = alpha_for_k(config.k)
        self._level = 0
        self._prefix_left = config.k
        self._table: dict[int, Optional[bytes]] = {}

    def update(self, identifier: bytes) -> None:
        raw = self._hash(identifier)
        if self._prefix_left > 0:
            if raw not in self._table:
                self._table[raw] = identifier if self.config.retain_ids else None
                self._prefix_left -= 1
            return
        if unit_value(raw) < self.theta and raw not in self._table:
            self._level += 1
            self._table[raw] = identifier if self.config.retain_ids else None
            if self._purge:
                thr = self.theta
                self._table = {r: i for r, i in self._table.items() if unit_value(r) < thr}

    @property
    def level(self) -> int:
        return self._level

    @property
    def theta(self) -> float:
        return alpha_power(self.config.k, self._level)

    def _retained(self) -> list[tuple[int, Optional[bytes]]]:
        return list(self._table.items())


_SAMPLERS = {
    TcfKind.KMV: KmvSampler,
    TcfKind.ADAPTIVE: AdaptiveSampler,
    TcfKind.PKMV: PkmvSampler,
    TcfKind.FIXED: FixedSampler,
    TcfKind.ALPHA: AlphaSampler,
}


def make_sampler(config: SamplerConfig) -> Sampler:
    return _SAMPLERS[config.kind](config)


def alpha_hip_estimate(sampler: Sampler) -> float:
    """The level-only estimate k / alpha**level of the level-counter sampler."""
    if not isinstance(sampler, AlphaSampler):
        raise WrongKind("HIP estimate is defined for the ALPHA sampler only")
    return sampler.config.k / sampler.theta


# ---------------------------------------------------------------------------
# Reference threshold rules over real-valued hashes in (0, 1).  These are the
# plain restatements of each rule, used as oracles for the streaming samplers.
# ---------------------------------------------------------------------------


def kmv_threshold(values: Iterable[float], k: int) -> float:
    """(k+1)-st smallest distinct value; 1 when fewer than k+1 exist."""
    distinct = sorted(set(values))
    if len(distinct) < k + 1:
        return 1.0
    return distinct[k]


def adaptive_threshold(values: Iterable[float], k: int, beta: float = 0.5) -> float:
    """Largest beta**i strictly below the (k+1)-st smallest distinct value."""
    m = kmv_threshold(values, k)
    if m == 1.0:
        return 1.0
    return largest_power_below(beta, m)


def pkmv_threshold(values: Iterable[float], k: int, p: float) -> float:
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    return min(kmv_threshold(values, k), p)


def fixed_threshold(values: Iterable[float], p: float) -> float:
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    return p


def alpha_threshold(values: Sequence[float], k: int) -> float:
    """Two-pass reference of the level-counter rule (order sensitive).

    Splits the stream into the shortest prefix with k distinct values and the
    rest, then replays the level updates over the remainder.  Returns 1 when
    the prefix never completes.
    """
    table: set[float] = set()
    pos = 0
    while pos < len(values) and len(table) < k:
        table.add(values[pos])
        pos += 1
    if len(table) < k:
        return 1.0
    level = 0
    for x in values[pos:]:
        if x < alpha_power(k, level) and x not in table:
            level += 1
            table.add(x)
    return alpha_power(k, level)


def reference_threshold(config: SamplerConfig, values: Sequence[float]) -> float:
    """The reference rule matching a sampler configuration."""
    if config.kind is TcfKind.KMV:
        return kmv_threshold(values, config.k)
    if config.kind is TcfKind.ADAPTIVE:
        return adaptive_threshold(values, config.k, config.beta)
    if config.kind is TcfKind.PKMV:
        return pkmv_threshold(values, config.k, config.p)
    if config.kind is TcfKind.FIXED:
        return fixed_threshold(values, config.p)
    if config.kind is TcfKind.ALPHA:
        return alpha_threshold(values, config.k)
    raise WrongKind(f"no reference rule for {config.kind}")
