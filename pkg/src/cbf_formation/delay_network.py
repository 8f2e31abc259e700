"""Formation graph with per-directed-edge delays, and the delay lines that realise them.

Conventions: ``distances[(i, j)]`` is the desired distance on edge (i, j) and is
stored for both orientations. ``delays[(i, j)]`` is the delay ``T_ij`` on data
that robot ``i`` receives from robot ``j``; it is independent of ``T_ji``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from numpy.typing import ArrayLike

from .dynamics import FloatArray

Edge = tuple[int, int]


class TopologyError(ValueError):
    """Raised when a topology breaks one of its structural invariants."""


@dataclass
class Topology:
    n_robots: int
    distances: dict[Edge, float]
    delays: dict[Edge, float] = field(default_factory=dict)

    @classmethod
    def from_edges(
        cls,
        n_robots: int,
        edges: Iterable[tuple[int, int, float]],
        delays: Mapping[Edge, float] | float = 0.0,
    ) -> Topology:
        """Build a topology from undirected ``(i, j, d_ij)`` triples.

        ``delays`` is either one value applied to every directed edge or a
        mapping with an entry for each orientation.
        """
        distances: dict[Edge, float] = {}
        for i, j, d in edges:
            distances[(int(i), int(j))] = float(d)
            distances[(int(j), int(i))] = float(d)
        if isinstance(delays, Mapping):
            delay_map = {(int(i), int(j)): float(t) for (i, j), t in delays.items()}
        else:
            delay_map = {e: float(delays) for e in distances}
        return cls(int(n_robots), distances, delay_map)

    @property
    def edges(self) -> list[Edge]:
        """Undirected edges as sorted ``(i, j)`` pairs with ``i < j``."""
        return sorted({(min(i, j), max(i, j)) for i, j in self.distances})

    def neighbors(self, i: int) -> list[int]:
        return sorted(j for (k, j) in self.distances if k == i)

    def distance(self, i: int, j: int) -> float:
        return self.distances[(i, j)]

    def delay(self, i: int, j: int) -> float:
        return self.delays.get((i, j), 0.0)


def first_violation(topology: Topology) -> str | None:
    """Return a description of the first broken invariant, or ``None``."""
    n = topology.n_robots
    if n < 1:
        return "topology must contain at least one robot"
    for (i, j), d in topology.distances.items():
        if not (0 <= i < n and 0 <= j < n):
            return f"vertex index out of range in edge ({i}, {j})"
        if i == j:
            return f"self-loop on vertex {i}"
        if (j, i) not in topology.distances:
            return f"edge set not symmetric: ({i}, {j}) present, ({j}, {i}) absent"
        if not np.isfinite(d) or d <= 0.0:
            return f"nonpositive desired distance on edge ({i}, {j}): {d}"
        if topology.distances[(j, i)] != d:
            return f"desired distance differs between ({i}, {j}) and ({j}, {i})"
    for (i, j), t in topology.delays.items():
        if (i, j) not in topology.distances:
            return f"delay given for non-edge ({i}, {j})"
        if not np.isfinite(t) or t < 0.0:
            return f"negative delay on edge ({i}, {j}): {t}"
    return None


def validate(topology: Topology) -> None:
    """Check the topology invariants.

    Raises:
        TopologyError: naming the first violated invariant.
    """
    problem = first_violation(topology)
    if problem is not None:
        raise TopologyError(problem)


class DelayLine:
    """Timestamped sample buffer returning a signal delayed by a constant ``delay``.

    ``query(t)`` linearly interpolates the stored samples at ``t - delay``.
    Before the first sample it holds the first sample; after the newest it
    holds the newest. With ``retention`` set, samples older than
    ``newest - delay - retention`` are evicted (keeping one so queries stay
    bracketed), which bounds the buffer when queries only move forward.
    Without it the full history is kept.
    """

    def __init__(self, delay: float, retention: float | None = None) -> None:
        if not np.isfinite(delay) or delay < 0.0:
            raise ValueError(f"negative delay: {delay}")
        self.delay = float(delay)
        self.retention = None if retention is None else float(retention)
        self._times: list[float] = []
        self._values: list[FloatArray] = []
        self._evicted = False

    def __len__(self) -> int:
        return len(self._times)

    @property
    def buffer(self) -> list[tuple[float, FloatArray]]:
        return list(zip(self._times, self._values))

    def push(self, t: float, z: ArrayLike) -> None:
        """Append a sample; ``t`` must exceed the newest buffered timestamp."""
        t = float(t)
        if self._times and not t > self._times[-1]:
            raise ValueError(
                f"non-monotone timestamp: {t} does not follow {self._times[-1]}"
            )
        self._times.append(t)
        self._values.append(np.array(z, dtype=np.float64).reshape(-1))
        self._evict(t)

    def _evict(self, newest: float) -> None:
        if self.retention is None:
            return
        horizon = newest - self.delay - self.retention
        # keep the last sample at or before the horizon so queries stay bracketed
        k = bisect.bisect_right(self._times, horizon) - 1
        if k > 0:
            del self._times[:k]
            del self._values[:k]
            self._evicted = True

    def query(self, t: float) -> FloatArray:
        """Sample value at time ``t - delay``."""
        if not self._times:
            raise ValueError("query on an empty delay line")
        s = float(t) - self.delay
        times = self._times
        if s <= times[0]:
            if self._evicted and s < times[0]:
                raise ValueError(f"time {s} precedes the retained history")
            return self._values[0].copy()
        if s >= times[-1]:
            return self._values[-1].copy()
        k = bisect.bisect_right(times, s)
        t0, t1 = times[k - 1], times[k]
        if s == t0:
            return self._values[k - 1].copy()
        w = (s - t0) / (t1 - t0)
        v0, v1 = self._values[k - 1], self._values[k]
        return v0 + w * (v1 - v0)
