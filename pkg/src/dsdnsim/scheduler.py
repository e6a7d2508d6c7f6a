"""Minimal deterministic discrete-event scheduler.

Events with equal timestamps execute in push order (timestamp, then sequence
number); nothing in the simulation may consult the wall clock.
"""
from __future__ import annotations

import heapq


class Scheduler:
    def __init__(self) -> None:
        self._heap: list[tuple[float, int, object, tuple]] = []
        self._seq = 0
        self.now = 0.0

    def at(self, t: float, fn, *args) -> None:
        if t < self.now:
            raise ValueError(f"cannot schedule into the past ({t} < {self.now})")
        heapq.heappush(self._heap, (t, self._seq, fn, args))
        self._seq += 1

    def run(self, until: float) -> None:
        """Execute events with t <= until, then settle the clock at until."""
        while self._heap and self._heap[0][0] <= until:
            t, _, fn, args = heapq.heappop(self._heap)
            self.now = t
            fn(*args)
        self.now = until
