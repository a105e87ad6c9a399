"""Labeled directed multigraphs that constrain admissible switching sequences.

Nodes are 1..num_nodes and labels are 1..num_labels. An edge (u, v, s)
means: while in node u the system may apply mode s and move to node v.
Parallel edges between the same node pair are allowed as long as their
labels differ; an exact duplicate triple is rejected because it would be
indistinguishable in every enumeration and certificate.

Paths are sequences of chained edges. All enumeration routines are
deterministic: edges are kept sorted by (from, to, label) and paths come
out ordered by start node, then lexicographically by edge index sequence.
Enumeration sizes are pre-counted and guarded by an explicit cap before
any path is materialized.
"""

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    ConnectivityWarning,
    DanglingNode,
    DuplicateEdge,
    ExplosionGuard,
    LabelOutOfRange,
    NodeOutOfRange,
    UnusedLabel,
)

DEFAULT_PATH_CAP = 10_000_000


@dataclass(frozen=True)
class Automaton:
    """A validated-on-demand switching graph. Immutable after construction."""

    num_nodes: int
    num_labels: int
    edges: tuple

    def __init__(self, num_nodes, num_labels, edges):
        object.__setattr__(self, "num_nodes", int(num_nodes))
        object.__setattr__(self, "num_labels", int(num_labels))
        norm = tuple(sorted((int(u), int(v), int(s)) for u, v, s in edges))
        object.__setattr__(self, "edges", norm)

    def validate(self):
        validate(self)

    @property
    def num_edges(self):
        return len(self.edges)

    @cached_property
    def _edge_arr(self):
        return np.asarray(self.edges, dtype=np.int64).reshape(len(self.edges), 3)

    @cached_property
    def _adjacency(self):
        """Per node: (outgoing edge indices, their target nodes), index order."""
        arr = self._edge_arr
        adj = []
        for v in range(1, self.num_nodes + 1):
            sel = np.nonzero(arr[:, 0] == v)[0]
            adj.append((sel, arr[sel, 1]))
        return adj

    def out_edges(self, node):
        """Outgoing edge triples of a node, sorted."""
        sel, _ = self._adjacency[node - 1]
        return [self.edges[int(i)] for i in sel]


def arbitrary_switching(num_labels):
    """Single-node graph with one self-loop per label: no switching constraint."""
    return Automaton(1, num_labels, [(1, 1, s) for s in range(1, num_labels + 1)])


def validate(aut):
    """Raise a typed error on the first violated invariant.

    Checks, in order: index ranges, duplicate edges, at least one outgoing
    edge per node, every label used. Weak connectivity of the graph is not
    required, but a graph that is not strongly connected triggers a
    ConnectivityWarning since parts of it are then transient.
    """
    if aut.num_nodes < 1:
        raise NodeOutOfRange(f"num_nodes must be >= 1, got {aut.num_nodes}")
    if aut.num_labels < 1:
        raise LabelOutOfRange(f"num_labels must be >= 1, got {aut.num_labels}")
    if not aut.edges:
        raise DanglingNode("graph has no edges")
    for u, v, s in aut.edges:
        if not (1 <= u <= aut.num_nodes and 1 <= v <= aut.num_nodes):
            raise NodeOutOfRange(
                f"edge ({u}, {v}, {s}) references a node outside 1..{aut.num_nodes}"
            )
        if not (1 <= s <= aut.num_labels):
            raise LabelOutOfRange(
                f"edge ({u}, {v}, {s}) uses a label outside 1..{aut.num_labels}"
            )
    seen = set()
    for e in aut.edges:
        if e in seen:
            raise DuplicateEdge(f"edge {e} appears more than once")
        seen.add(e)
    have_out = {u for u, _, _ in aut.edges}
    for v in range(1, aut.num_nodes + 1):
        if v not in have_out:
            raise DanglingNode(f"node {v} has no outgoing edge")
    used = {s for _, _, s in aut.edges}
    for s in range(1, aut.num_labels + 1):
        if s not in used:
            raise UnusedLabel(f"label {s} is not used by any edge")
    if not is_strongly_connected(aut):
        warnings.warn(
            "graph is not strongly connected; some nodes are transient",
            ConnectivityWarning,
            stacklevel=2,
        )


def is_strongly_connected(aut):
    """True when every node is reachable from every other node."""
    fwd = {}
    bwd = {}
    for u, v, _ in aut.edges:
        fwd.setdefault(u, set()).add(v)
        bwd.setdefault(v, set()).add(u)

    def reach(adj):
        seen = {1}
        stack = [1]
        while stack:
            for w in adj.get(stack.pop(), ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    full = set(range(1, aut.num_nodes + 1))
    return reach(fwd) == full and reach(bwd) == full


@dataclass(frozen=True)
class Path:
    """A nonempty sequence of chained edges."""

    edges: tuple

    def __init__(self, edges):
        norm = tuple((int(u), int(v), int(s)) for u, v, s in edges)
        if not norm:
            raise ValueError("a path needs at least one edge")
        for (_, v, _), (u, _, _) in zip(norm, norm[1:]):
            if v != u:
                raise ValueError(f"edges do not chain: {norm}")
        object.__setattr__(self, "edges", norm)

    @property
    def word(self):
        return tuple(s for _, _, s in self.edges)

    @property
    def start_node(self):
        return self.edges[0][0]

    @property
    def end_node(self):
        return self.edges[-1][1]

    @property
    def length(self):
        return len(self.edges)

    def is_cycle(self):
        return self.start_node == self.end_node


def _count_table(aut, t):
    """counts[k][v-1] = number of length-k paths starting at v, exact ints."""
    nxt = [[] for _ in range(aut.num_nodes)]
    for u, v, _ in aut.edges:
        nxt[u - 1].append(v - 1)
    counts = [[1] * aut.num_nodes]
    for _ in range(t):
        prev = counts[-1]
        counts.append([sum(prev[w] for w in nxt[v]) for v in range(aut.num_nodes)])
    return counts


def _guarded_total(aut, t, start, cap):
    counts = _count_table(aut, t)
    if start is None:
        total = sum(counts[t])
    else:
        total = counts[t][start - 1]
    if total > cap:
        raise ExplosionGuard(total, cap)
    # Entries never touched by unranking may overflow int64; clip them. Any
    # entry that unranking reads is bounded by the guarded total.
    clip = [[min(c, cap + 1) for c in row] for row in counts]
    return total, [np.asarray(row, dtype=np.int64) for row in clip]


def _unrank_block(aut, t, counts, start_nodes, ranks):
    """Edge-index rows for the given (start node, local rank) pairs."""
    pcount = len(ranks)
    idx = np.empty((pcount, t), dtype=np.int64)
    cur = start_nodes.astype(np.int64).copy()
    r = ranks.astype(np.int64).copy()
    adj = aut._adjacency
    for step in range(t):
        rem = t - step - 1
        # snapshot: cur mutates within the node loop, masks must not see it
        cur_step = cur.copy()
        for v in np.unique(cur_step):
            mask = np.nonzero(cur_step == v)[0]
            eidcs, tgts = adj[v - 1]
            weights = counts[rem][tgts - 1]
            cw = np.cumsum(weights)
            pos = np.searchsorted(cw, r[mask], side="right")
            idx[mask, step] = eidcs[pos]
            base = np.concatenate(([0], cw))[pos]
            r[mask] -= base
            cur[mask] = tgts[pos]
    return idx


def iter_path_blocks(aut, t, start=None, cap=DEFAULT_PATH_CAP, block_size=1 << 16):
    """Yield (edge index rows, start nodes, end nodes) in enumeration order.

    Blocks bound peak memory; the concatenation of all blocks covers every
    length-t path exactly once, ordered by start node then lexicographic
    edge index sequence. Raises ExplosionGuard before the first block when
    the total count exceeds cap.
    """
    if t < 1:
        raise ValueError("path length must be >= 1")
    total, counts = _guarded_total(aut, t, start, cap)
    starts = [start] if start is not None else range(1, aut.num_nodes + 1)
    arr = aut._edge_arr
    for v in starts:
        c = int(counts[t][v - 1])
        for lo in range(0, c, block_size):
            ranks = np.arange(lo, min(lo + block_size, c), dtype=np.int64)
            svec = np.full(len(ranks), v, dtype=np.int64)
            idx = _unrank_block(aut, t, counts, svec, ranks)
            ends = arr[idx[:, -1], 1]
            yield idx, svec, ends


def count_paths(aut, t, start=None):
    """Exact number of length-t paths, computed without enumeration."""
    counts = _count_table(aut, t)
    if start is None:
        return sum(counts[t])
    return counts[t][start - 1]


def _paths_from_index_rows(aut, idx):
    edges = aut.edges
    return [Path(tuple(edges[int(e)] for e in row)) for row in idx]


def enumerate_paths(aut, t, start=None, cap=DEFAULT_PATH_CAP):
    """All length-t paths (from start, when given) as Path objects."""
    out = []
    for idx, _, _ in iter_path_blocks(aut, t, start=start, cap=cap):
        out.extend(_paths_from_index_rows(aut, idx))
    return out


def enumerate_cycles(aut, max_len, cap=DEFAULT_PATH_CAP):
    """All closed walks of length 1..max_len, including non-simple ones.

    Walks are distinct edge sequences; the same loop traversed from two
    different start nodes counts as two walks. Ordered by length, then
    start node, then lexicographic edge index sequence.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    totals = 0
    for t in range(1, max_len + 1):
        totals += count_paths(aut, t)
        if totals > cap:
            raise ExplosionGuard(totals, cap)
    out = []
    for t in range(1, max_len + 1):
        for idx, svec, ends in iter_path_blocks(aut, t, cap=cap):
            closed = idx[svec == ends]
            out.extend(_paths_from_index_rows(aut, closed))
    return out
