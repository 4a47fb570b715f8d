"""Black-box checkers for the projection conditions a threshold rule must meet.

A threshold rule qualifies for unbiased estimation when every fix-all-but-one
projection (one hash free, the rest pinned) has a fixed level F with

    (a)  x <  F  implies  T(x) = F
    (b)  x >= F  implies  T(x) <= x

and the bivariate analog (two hashes free) holds with max(x, y) in place of
x.  The checkers evaluate projections on a grid: a reported violation is a
certificate, while a clean pass is evidence only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import DomainError
from .samplers import (
    adaptive_threshold,
    alpha_threshold,
    fixed_threshold,
    kmv_threshold,
    pkmv_threshold,
)
from .sketch import TcfKind

# A threshold rule under test: (k, hash values in stream order) -> theta.
Tcf = Callable[[int, Sequence[float]], float]


@dataclass(frozen=True)
class ProjectionReport:
    """Outcome of checking one projection of a threshold rule."""

    satisfied: bool
    fixed_threshold: Optional[float]
    counterexample: Optional[tuple[float, float, str]]  # (free value, theta, "a"|"b")


def tcf_for_kind(kind: TcfKind, beta: float = 0.5, p: float = 0.5) -> Tcf:
    """The shipped threshold rule of a sampler kind, as a plain function."""
    if kind is TcfKind.KMV:
        return lambda k, values: kmv_threshold(values, k)
    if kind is TcfKind.ADAPTIVE:
        return lambda k, values: adaptive_threshold(values, k, beta)
    if kind is TcfKind.PKMV:
        return lambda k, values: pkmv_threshold(values, k, p)
    if kind is TcfKind.FIXED:
        return lambda k, values: fixed_threshold(values, p)
    if kind is TcfKind.ALPHA:
        return lambda k, values: alpha_threshold(values, k)
    if kind is TcfKind.BIASED_TEST:
        return biased_tcf
    raise ValueError(f"{kind} has no stand-alone threshold rule")


def min_composed_tcf(parts: Sequence[Tcf], assignment: Sequence[int]) -> Tcf:
    """The rule induced on a combined stream by per-substream rules and min.

    ``assignment[pos]`` names the substream owning stream position pos; the
    composed rule partitions its input accordingly and returns the smallest
    per-substream threshold.
    """
    n_parts = len(parts)
    if any(not 0 <= a < n_parts for a in assignment):
        raise ValueError("assignment references a missing part")

    def composed(k: int, values: Sequence[float]) -> float:
        if len(values) != len(assignment):
            raise ValueError("stream length does not match the assignment")
        groups: list[list[float]] = [[] for _ in range(n_parts)]
        for pos, x in zip(assignment, values):
            groups[pos].append(x)
        return min(parts[j](k, groups[j]) for j in range(n_parts))

    return composed


def biased_tcf(k: int, values: Sequence[float]) -> float:
    """A two-order-statistic rule that pushes estimates upward.

    Returns the k-th smallest distinct hash when (k-1)/m_k exceeds
    k/m_{k+1}, else the (k+1)-st; it fails the projection condition and is
    kept as the checker's negative control.
    """
    distinct = sorted(set(values))
    if len(distinct) < k + 1:
        raise DomainError("the biased rule needs at least k+1 distinct hashes")
    m_k = distinct[k - 1]
    m_k1 = distinct[k]
    return m_k if (k - 1) / m_k > k / m_k1 else m_k1


def _grid(points: int) -> list[float]:
    # offset lattice so grid values avoid dyadic level boundaries exactly
    return [(g + 0.5) / (points + 1) for g in range(points)]


def check_one_goodness(
    tcf: Tcf,
    k: int,
    fixed_hashes: Sequence[float],
    free_index: int,
    grid_points: int = 4096,
) -> ProjectionReport:
    """Check conditions (a) and (b) of one fix-all-but-one projection.

    The free hash sweeps a uniform grid over (0, 1); the candidate F is the
    rule's value at the smallest grid point.  Condition (a) demands exact
    float equality, which shipped rules satisfy because equal inputs take
    the same code path.
    """
    if grid_points < 100:
        raise ValueError("grid_points must be >= 100")
    if not 0 <= free_index <= len(fixed_hashes):
        raise ValueError("free_index out of range")
    fixed_set = set(fixed_hashes)
    stream = list(fixed_hashes)
    stream.insert(free_index, 0.0)

    def evaluate(x: float) -> float:
        stream[free_index] = x
        return tcf(k, stream)

    xs = [x for x in _grid(grid_points) if x not in fixed_set]
    candidate = evaluate(xs[0])
    for x in xs:
        theta = evaluate(x)
        if x < candidate:
            if theta != candidate:
                return ProjectionReport(False, candidate, (x, theta, "a"))
        elif theta > x:
            return ProjectionReport(False, candidate, (x, theta, "b"))
    return ProjectionReport(True, candidate, None)


def check_two_goodness(
    tcf: Tcf,
    k: int,
    fixed_hashes: Sequence[float],
    free_indices: tuple[int, int],
    grid_points: int = 64,
) -> ProjectionReport:
    """Check the bivariate conditions of one fix-all-but-two projection.

    Sweeps a grid_points x grid_points lattice of the two free hashes; the
    candidate F is the value at the smallest corner.
    """
    i1, i2 = free_indices
    if not 0 <= i1 < i2 <= len(fixed_hashes) + 1:
        raise ValueError("free positions must be distinct, ordered, and in range")
    fixed_set = set(fixed_hashes)
    stream = list(fixed_hashes)
    stream.insert(i1, 0.0)
    stream.insert(i2, 0.0)

    def evaluate(x: float, y: float) -> float:
        stream[i1] = x
        stream[i2] = y
        return tcf(k, stream)

    xs = [x for x in _grid(grid_points) if x not in fixed_set]
    candidate = evaluate(xs[0], xs[1])
    for x in xs:
        for y in xs:
            if x == y:
                continue  # two free identifiers never share a hash
            top = max(x, y)
            theta = evaluate(x, y)
            if top < candidate:
                if theta != candidate:
                    return ProjectionReport(False, candidate, (top, theta, "a"))
            elif theta > top:
                return ProjectionReport(False, candidate, (top, theta, "b"))
    return ProjectionReport(True, candidate, None)


def check_monotonicity(
    tcf: Tcf,
    k: int,
    a0: Sequence[float],
    a1: Sequence[float],
    a2: Sequence[float],
) -> bool:
    """Whether sandwiching a1 between a0 and a2 avoids raising the threshold."""
    theta = tcf(k, list(a1))
    theta_sandwiched = tcf(k, list(a0) + list(a1) + list(a2))
    return theta_sandwiched <= theta
