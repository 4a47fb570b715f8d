"""The theta-sketch data type, its estimators, and subpopulation predicates.

A sketch is the pair (theta, entries): a threshold in (0, 1] together with
every distinct observed hash strictly below it.  theta = 1 means no sampling
took place and the sketch counts exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .errors import IdsUnavailable
from .hashing import UnitHash, hash_identifier


class TcfKind(Enum):
    """How a sketch's threshold was chosen (or derived by set algebra)."""

    KMV = "kmv"
    ADAPTIVE = "adaptive"
    PKMV = "pkmv"
    FIXED = "fixed"
    ALPHA = "alpha"
    DERIVED_UNION = "union"
    DERIVED_INTERSECT = "intersect"
    DERIVED_DIFF = "diff"
    BIASED_TEST = "biased"


BASE_KINDS = (TcfKind.KMV, TcfKind.ADAPTIVE, TcfKind.PKMV, TcfKind.FIXED, TcfKind.ALPHA)


@dataclass(frozen=True)
class Entry:
    """One retained hash, optionally with the identifier that produced it."""

    hash: UnitHash
    identifier: Optional[bytes] = None


@dataclass(frozen=True)
class ThetaSketch:
    tcf_kind: TcfKind
    k: int
    hash_seed: int
    theta: float
    retains_ids: bool
    entries: tuple[Entry, ...]

    def raw_set(self) -> frozenset[int]:
        return frozenset(e.hash.raw for e in self.entries)


def sketch_from_entries(
    tcf_kind: TcfKind,
    k: int,
    hash_seed: int,
    theta: float,
    retains_ids: bool,
    entries: Iterable[Entry],
) -> ThetaSketch:
    """Build a sketch with entries in canonical ascending-raw order."""
    ordered = tuple(sorted(entries, key=lambda e: e.hash.raw))
    return ThetaSketch(tcf_kind, k, hash_seed, theta, retains_ids, ordered)


@dataclass(frozen=True)
class Predicate:
    """A property of identifiers: everything, a finite set, or a byte prefix."""

    kind: str
    members: Optional[frozenset[bytes]] = None
    prefix: Optional[bytes] = None

    @classmethod
    def all(cls) -> "Predicate":
        return cls("all")

    @classmethod
    def member_set(cls, identifiers: Iterable[bytes]) -> "Predicate":
        return cls("set", members=frozenset(identifiers))

    @classmethod
    def prefix_of(cls, prefix: bytes) -> "Predicate":
        return cls("prefix", prefix=prefix)

    @property
    def is_all(self) -> bool:
        return self.kind == "all"

    def __call__(self, identifier: bytes) -> bool:
        if self.kind == "all":
            return True
        if self.kind == "set":
            return identifier in self.members
        if self.kind == "prefix":
            return identifier.startswith(self.prefix)
        raise ValueError(f"unknown predicate kind {self.kind!r}")


def estimate_distinct(sk: ThetaSketch) -> float:
    """Distinct-count estimate |entries| / theta."""
    return len(sk.entries) / sk.theta


def estimate_subpopulation(sk: ThetaSketch, predicate: Predicate) -> float:
    """Estimate of the distinct count restricted to a subpopulation.

    Counts retained entries whose identifier satisfies the predicate and
    scales by 1/theta.  Requires identifiers unless the predicate is trivial.
    """
    if predicate.is_all:
        return estimate_distinct(sk)
    if not sk.retains_ids:
        raise IdsUnavailable(
            "sketch does not retain identifiers; only the trivial predicate applies"
        )
    matches = sum(1 for e in sk.entries if predicate(e.identifier))
    return matches / sk.theta


def validate(sk: ThetaSketch) -> list[str]:
    """Check every sketch invariant; returns a list of violations (empty = valid)."""
    problems: list[str] = []
    if not (0.0 < sk.theta <= 1.0):
        problems.append(f"theta {sk.theta!r} outside (0, 1]")
    if sk.k < 1:
        problems.append(f"k {sk.k} must be >= 1")
    seen: set[int] = set()
    for e in sk.entries:
        if e.hash.raw in seen:
            problems.append(f"duplicate raw hash {e.hash.raw:#018x}")
        seen.add(e.hash.raw)
        if not e.hash.value < sk.theta:
            problems.append(
                f"entry {e.hash.raw:#018x} has value {e.hash.value!r} >= theta {sk.theta!r}"
            )
        if sk.retains_ids and e.identifier is None:
            problems.append(f"entry {e.hash.raw:#018x} missing identifier")
        if not sk.retains_ids and e.identifier is not None:
            problems.append(f"entry {e.hash.raw:#018x} carries an unexpected identifier")
        if e.identifier is not None:
            rehashed = hash_identifier(e.identifier, sk.hash_seed).raw
            if rehashed != e.hash.raw:
                problems.append(
                    f"entry {e.hash.raw:#018x} does not match the hash of its identifier"
                )
    return problems
