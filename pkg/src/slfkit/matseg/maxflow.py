"""Dinic max-flow / min-cut on small graphs with float capacities.

Arcs are stored in pairs so arc k's reverse is k ^ 1, which makes residual
updates branch-free. Sized for segmentation instances (tens of thousands of
nodes); no attempt at the large-scale tricks real solvers use.
"""

from __future__ import annotations

from collections import deque

import numpy as np

_EPS = 1e-12


class MaxFlow:
    def __init__(self, n_nodes: int):
        self.n = n_nodes
        self.source = n_nodes
        self.sink = n_nodes + 1
        self.head: list[list[int]] = [[] for _ in range(n_nodes + 2)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_edge(self, u: int, v: int, cap: float, rcap: float = 0.0) -> None:
        if cap < 0 or rcap < 0:
            raise ValueError("capacities must be non-negative")
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(float(cap))
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(float(rcap))

    def add_tlink(self, v: int, cap_source: float, cap_sink: float) -> None:
        if cap_source > 0:
            self.add_edge(self.source, v, cap_source)
        if cap_sink > 0:
            self.add_edge(v, self.sink, cap_sink)

    def _bfs_levels(self) -> np.ndarray | None:
        level = np.full(self.n + 2, -1, dtype=np.int64)
        level[self.source] = 0
        q = deque([self.source])
        while q:
            u = q.popleft()
            for k in self.head[u]:
                v = self.to[k]
                if level[v] < 0 and self.cap[k] > _EPS:
                    level[v] = level[u] + 1
                    q.append(v)
        return level if level[self.sink] >= 0 else None

    def _blocking_flow(self, level) -> float:
        it = [0] * (self.n + 2)
        total = 0.0
        # iterative DFS: path is a stack of arc indices
        while True:
            path: list[int] = []
            u = self.source
            while True:
                if u == self.sink:
                    pushed = min(self.cap[k] for k in path)
                    for k in path:
                        self.cap[k] -= pushed
                        self.cap[k ^ 1] += pushed
                    total += pushed
                    # retreat to the first saturated arc
                    for i, k in enumerate(path):
                        if self.cap[k] <= _EPS:
                            path = path[:i]
                            break
                    u = self.to[path[-1]] if path else self.source
                    continue
                advanced = False
                while it[u] < len(self.head[u]):
                    k = self.head[u][it[u]]
                    v = self.to[k]
                    if self.cap[k] > _EPS and level[v] == level[u] + 1:
                        path.append(k)
                        u = v
                        advanced = True
                        break
                    it[u] += 1
                if advanced:
                    continue
                if not path:
                    return total
                # dead end: remove u from the level graph and back up
                level[u] = -1
                k = path.pop()
                u = self.to[k ^ 1]
                it[u] += 1

    def max_flow(self) -> float:
        total = 0.0
        while True:
            level = self._bfs_levels()
            if level is None:
                return total
            total += self._blocking_flow(level)

    def source_side(self) -> np.ndarray:
        """After max_flow: True for nodes reachable from the source in the
        residual graph (the source side of a minimum cut)."""
        seen = np.zeros(self.n + 2, dtype=bool)
        seen[self.source] = True
        q = deque([self.source])
        while q:
            u = q.popleft()
            for k in self.head[u]:
                v = self.to[k]
                if not seen[v] and self.cap[k] > _EPS:
                    seen[v] = True
                    q.append(v)
        return seen[: self.n]
