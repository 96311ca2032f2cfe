"""Ratio maximisation over cell sets via maximum-weight closure / min-cut.

The objective is g(Omega) = sum of rectangle weights fully contained in
Omega divided by the area of Omega, maximised over non-empty unions of
cells.  For a fixed multiplier lam the inner problem

    maximise  sum_{selected rects} w_R  -  lam * area(selected cells)

subject to every selected rectangle dragging in all of its cells is a
maximum-weight closure problem, solved by a min cut on the bipartite
source -> rect -> cell -> sink network (rect->cell arcs effectively
infinite).  The outer loop is a Dinkelbach iteration: lam is updated to the
ratio of the current maximiser until no strict improvement remains, which
terminates because the candidate ratios form a finite set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError, ValidationError


class _FlowNetwork:
    """Dinic max-flow on real capacities."""

    def __init__(self, n_nodes):
        self.n = n_nodes
        self.head = [[] for _ in range(n_nodes)]
        self.to = []
        self.cap = []

    def add_edge(self, u, v, c):
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(float(c))
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0.0)

    def max_flow(self, s, t, eps):
        flow = 0.0
        while True:
            level = self._bfs(s, t, eps)
            if level[t] < 0:
                return flow
            it = [0] * self.n
            while True:
                pushed = self._dfs(s, t, float("inf"), level, it, eps)
                if pushed <= 0.0:
                    break
                flow += pushed

    def _bfs(self, s, t, eps):
        level = [-1] * self.n
        level[s] = 0
        queue = [s]
        qi = 0
        while qi < len(queue):
            u = queue[qi]
            qi += 1
            for e in self.head[u]:
                v = self.to[e]
                if level[v] < 0 and self.cap[e] > eps:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level

    def _dfs(self, s, t, limit, level, it, eps):
        # iterative walk: extend a path along admissible edges, push on arrival
        path = []
        u = s
        while True:
            if u == t:
                pushed = limit
                for e in path:
                    pushed = min(pushed, self.cap[e])
                for e in path:
                    self.cap[e] -= pushed
                    self.cap[e ^ 1] += pushed
                return pushed
            advanced = False
            while it[u] < len(self.head[u]):
                e = self.head[u][it[u]]
                v = self.to[e]
                if self.cap[e] > eps and level[v] == level[u] + 1:
                    path.append(e)
                    u = v
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                if u == s:
                    return 0.0
                level[u] = -1  # dead end, prune
                e = path.pop()
                u = self.to[e ^ 1]  # tail of the edge we arrived through

    def residual_reachable(self, s, eps):
        seen = [False] * self.n
        seen[s] = True
        stack = [s]
        while stack:
            u = stack.pop()
            for e in self.head[u]:
                v = self.to[e]
                if not seen[v] and self.cap[e] > eps:
                    seen[v] = True
                    stack.append(v)
        return seen


@dataclass
class ClosureInstance:
    """Weighted rectangle / cell bipartite structure for ratio maximisation.

    cell_areas: positive area per cell; rect_weights: non-negative weight
    per rectangle; rect_cells: per rectangle, the indices of the cells it
    requires.
    """

    cell_areas: np.ndarray
    rect_weights: np.ndarray
    rect_cells: tuple

    def __post_init__(self):
        self.cell_areas = np.asarray(self.cell_areas, dtype=float)
        self.rect_weights = np.asarray(self.rect_weights, dtype=float)
        if (self.cell_areas <= 0).any():
            raise ValidationError("cell areas must be positive")
        if (self.rect_weights < 0).any():
            raise ValidationError("rectangle weights must be non-negative")
        if len(self.rect_cells) != len(self.rect_weights):
            raise ValidationError("rect_cells and rect_weights length mismatch")
        nc = len(self.cell_areas)
        cleaned = []
        for cells in self.rect_cells:
            arr = np.asarray(cells, dtype=int)
            if arr.size == 0:
                raise ValidationError("every rectangle must require at least one cell")
            if arr.min() < 0 or arr.max() >= nc:
                raise ValidationError("rectangle cell index out of range")
            cleaned.append(arr)
        self.rect_cells = tuple(cleaned)

    @property
    def n_cells(self):
        return len(self.cell_areas)

    def ratio(self, cell_mask: np.ndarray) -> float:
        """g(Omega) for Omega given as a boolean cell mask."""
        area = float(self.cell_areas[cell_mask].sum())
        if area == 0.0:
            raise ValidationError("ratio of an empty cell set")
        total = 0.0
        for w, cells in zip(self.rect_weights, self.rect_cells):
            if w != 0.0 and cell_mask[cells].all():
                total += w
        return total / area


def _solve_closure(inst: ClosureInstance, lam: float, active):
    """Max of sum(selected w) - lam * area(selected cells); returns
    (value, cell mask) with the closure property enforced by the cut."""
    nr = len(active)
    nc = inst.n_cells
    total_w = float(inst.rect_weights[active].sum())
    inf_cap = total_w + 1.0
    net = _FlowNetwork(2 + nr + nc)
    src, snk = 0, 1 + nr + nc
    for ridx, r in enumerate(active):
        net.add_edge(src, 1 + ridx, inst.rect_weights[r])
        for c in inst.rect_cells[r]:
            net.add_edge(1 + ridx, 1 + nr + c, inf_cap)
    for c in range(nc):
        net.add_edge(1 + nr + c, snk, lam * inst.cell_areas[c])
    eps = 1e-15 * inf_cap
    flow = net.max_flow(src, snk, eps)
    value = total_w - flow
    seen = net.residual_reachable(src, eps)
    cell_mask = np.zeros(nc, dtype=bool)
    for c in range(nc):
        if seen[1 + nr + c]:
            cell_mask[c] = True
    return value, cell_mask


def best_ratio(inst: ClosureInstance, rel_tol: float = 1e-13, max_rounds: int = 1000):
    """Maximise g over non-empty cell unions; returns (ratio, cell mask).

    All-zero weights return (0.0, None) as the empty-set sentinel.
    """
    active = np.flatnonzero(inst.rect_weights > 0.0)
    if active.size == 0:
        return 0.0, None
    start = np.zeros(inst.n_cells, dtype=bool)
    for r in active:
        start[inst.rect_cells[r]] = True
    lam = inst.ratio(start)
    best_mask = start
    scale = float(inst.rect_weights[active].sum())
    for _ in range(max_rounds):
        value, mask = _solve_closure(inst, lam, active)
        if value <= rel_tol * scale or not mask.any():
            return lam, best_mask
        new_lam = inst.ratio(mask)
        if new_lam <= lam * (1.0 + rel_tol):
            return max(lam, new_lam), (mask if new_lam > lam else best_mask)
        lam = new_lam
        best_mask = mask
    raise NonConvergenceError(
        "ratio iteration failed to settle", last_estimate=lam
    )


def best_ratio_bruteforce(inst: ClosureInstance) -> float:
    """Exhaustive maximum over all non-empty cell subsets (<= 16 cells)."""
    nc = inst.n_cells
    if nc > 16:
        raise ValidationError("brute force supports at most 16 cells")
    n_masks = 1 << nc
    masks = np.arange(n_masks, dtype=np.uint32)
    bits = ((masks[:, None] >> np.arange(nc)[None, :]) & 1).astype(bool)
    areas = bits @ inst.cell_areas
    weights = np.zeros(n_masks)
    for w, cells in zip(inst.rect_weights, inst.rect_cells):
        if w == 0.0:
            continue
        rect_bits = np.uint32(0)
        for c in cells:
            rect_bits |= np.uint32(1) << np.uint32(int(c))
        included = (masks & rect_bits) == rect_bits
        weights[included] += w
    areas[0] = np.inf  # exclude the empty set
    return float((weights / areas).max())
