"""Non-dominated (higher accuracy, lower energy) front tracking.

A point dominates another when it is at least as accurate and at least as
cheap, and strictly better on one of the two. The front keeps every point
no other point dominates, sorted by energy; exact duplicates collapse to
the earliest iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .search_space import Architecture

ADDED = "added"
DOMINATED = "dominated"
TIE_REPLACED = "tie-replaced"


@dataclass(frozen=True)
class ParetoPoint:
    accuracy: float
    energy: float
    arch: Architecture | None = None
    iteration: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must be in [0, 1]")
        if self.energy < 0:
            raise ValueError("energy must be >= 0")


def dominates(a: ParetoPoint, b: ParetoPoint) -> bool:
    """True iff a is no worse than b in both objectives and better in one."""
    return (a.accuracy >= b.accuracy and a.energy <= b.energy
            and (a.accuracy > b.accuracy or a.energy < b.energy))


@dataclass
class ParetoFront:
    points: list[ParetoPoint] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def insert(self, p: ParetoPoint) -> str:
        """Add p unless an existing point dominates it; evict what p dominates.

        Returns "added", "dominated", or "tie-replaced" (p had the same
        coordinates as a front point but an earlier iteration).
        """
        survivors = []
        twin = None
        for q in self.points:
            if dominates(q, p):
                return DOMINATED
            if q.accuracy == p.accuracy and q.energy == p.energy:
                twin = q
            if not dominates(p, q):
                survivors.append(q)

        if twin is not None:
            if p.iteration < twin.iteration:
                survivors = [q for q in survivors if q is not twin]
                survivors.append(p)
                survivors.sort(key=lambda q: (q.energy, q.accuracy))
                self.points = survivors
                return TIE_REPLACED
            return DOMINATED

        survivors.append(p)
        survivors.sort(key=lambda q: (q.energy, q.accuracy))
        self.points = survivors
        return ADDED


def front_of(points: Iterable[ParetoPoint]) -> ParetoFront:
    """Front of a point set; insertion order does not affect the result."""
    front = ParetoFront()
    for p in points:
        front.insert(p)
    return front
