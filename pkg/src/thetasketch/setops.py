"""Combining rules over theta-sketches: union, intersection, difference.

All three share one scheme: the combined threshold is the minimum of the
input thresholds, and the surviving entries are the input hashes below it
that satisfy the set operation.  Inputs may mix sampler kinds and k values,
but must share a hash seed (one hash function across all streams).
"""

from __future__ import annotations

from typing import Sequence

from .errors import EmptyInput, SeedMismatch
from .sketch import Entry, TcfKind, ThetaSketch, sketch_from_entries


def _check_inputs(sketches: Sequence[ThetaSketch]) -> None:
    if not sketches:
        raise EmptyInput("need at least one sketch")
    seed = sketches[0].hash_seed
    for sk in sketches[1:]:
        if sk.hash_seed != seed:
            raise SeedMismatch(
                f"sketches were built with different hash seeds "
                f"({seed:#x} vs {sk.hash_seed:#x})"
            )


def _strip_id(entry: Entry, keep: bool) -> Entry:
    if keep or entry.identifier is None:
        return entry
    return Entry(entry.hash, None)


def theta_union(sketches: Sequence[ThetaSketch]) -> ThetaSketch:
    """Union sketch: min threshold, all distinct input hashes below it."""
    _check_inputs(sketches)
    theta = min(sk.theta for sk in sketches)
    retains = all(sk.retains_ids for sk in sketches)
    merged: dict[int, Entry] = {}
    for sk in sketches:
        for e in sk.entries:
            if e.hash.value < theta and e.hash.raw not in merged:
                merged[e.hash.raw] = _strip_id(e, retains)
    return sketch_from_entries(
        TcfKind.DERIVED_UNION,
        min(sk.k for sk in sketches),
        sketches[0].hash_seed,
        theta,
        retains,
        merged.values(),
    )


def theta_intersect(sketches: Sequence[ThetaSketch]) -> ThetaSketch:
    """Intersection sketch: hashes present in every input and below min theta."""
    _check_inputs(sketches)
    theta = min(sk.theta for sk in sketches)
    retains = all(sk.retains_ids for sk in sketches)
    common = set(sketches[0].raw_set())
    for sk in sketches[1:]:
        common &= sk.raw_set()
    entries = [
        _strip_id(e, retains)
        for e in sketches[0].entries
        if e.hash.raw in common and e.hash.value < theta
    ]
    return sketch_from_entries(
        TcfKind.DERIVED_INTERSECT,
        min(sk.k for sk in sketches),
        sketches[0].hash_seed,
        theta,
        retains,
        entries,
    )


def theta_a_not_b(a: ThetaSketch, b: ThetaSketch) -> ThetaSketch:
    """Difference sketch: hashes of a absent from b and below min theta."""
    _check_inputs([a, b])
    theta = min(a.theta, b.theta)
    retains = a.retains_ids and b.retains_ids
    excluded = b.raw_set()
    entries = [
        _strip_id(e, retains)
        for e in a.entries
        if e.hash.raw not in excluded and e.hash.value < theta
    ]
    return sketch_from_entries(
        TcfKind.DERIVED_DIFF, min(a.k, b.k), a.hash_seed, theta, retains, entries
    )
