"""Pairwise MRFs decomposed into trees with a dynamic-programming oracle.

A node ``v`` with ``k`` labels owns ``k`` consecutive Boolean coordinates
(one indicator per label) starting at ``offsets[v]``.
"""

from dataclasses import dataclass, field

import numpy as np

from .model import MinOracle, Term, build_decomposition

__all__ = [
    "MrfInstance",
    "TreeOracle",
    "encode_mrf",
    "forest_partition",
    "label_offsets",
    "labeling_to_indicators",
    "tree_components",
    "tree_terms",
]


@dataclass
class MrfInstance:
    """Pairwise energy ``sum_v unary[v][x_v] + sum_uv pairwise[(u, v)][x_u, x_v]``.

    ``pairwise`` keys satisfy ``u < v``; tables have shape
    ``(num_labels[u], num_labels[v])``.
    """

    num_labels: list
    unaries: list
    pairwise: dict = field(default_factory=dict)

    def __post_init__(self):
        self.num_labels = [int(k) for k in self.num_labels]
        if any(k < 1 for k in self.num_labels):
            raise ValueError("every node needs at least one label")
        if len(self.unaries) != len(self.num_labels):
            raise ValueError("one unary table per node required")
        self.unaries = [np.asarray(u, dtype=np.float64).reshape(-1) for u in self.unaries]
        for v, (u, k) in enumerate(zip(self.unaries, self.num_labels)):
            if u.shape != (k,) or not np.all(np.isfinite(u)):
                raise ValueError(f"node {v}: unary must be {k} finite values")
        tables = {}
        for (a, b), table in self.pairwise.items():
            table = np.asarray(table, dtype=np.float64)
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            if a > b:
                a, b, table = b, a, table.T
            if table.shape != (self.num_labels[a], self.num_labels[b]):
                raise ValueError(f"edge ({a}, {b}): table has shape {table.shape}")
            if not np.all(np.isfinite(table)):
                raise ValueError(f"edge ({a}, {b}): non-finite values")
            tables[(a, b)] = tables[(a, b)] + table if (a, b) in tables else table
        self.pairwise = tables

    @property
    def num_nodes(self):
        return len(self.num_labels)

    @property
    def edges(self):
        return list(self.pairwise)

    def energy(self, labeling):
        e = sum(self.unaries[v][labeling[v]] for v in range(self.num_nodes))
        for (a, b), table in self.pairwise.items():
            e += table[labeling[a], labeling[b]]
        return float(e)


def label_offsets(num_labels):
    offsets = np.zeros(len(num_labels) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(num_labels)
    return offsets


def labeling_to_indicators(num_labels, labeling):
    offsets = label_offsets(num_labels)
    x = np.zeros(offsets[-1])
    x[offsets[:-1] + np.asarray(labeling, dtype=np.int64)] = 1.0
    return x


def forest_partition(num_nodes, edges):
    """Split ``edges`` into forests by repeatedly taking a maximal spanning
    forest of the edges not yet assigned (union-find, input order)."""
    remaining = list(edges)
    forests = []
    while remaining:
        parent = list(range(num_nodes))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        forest, deferred = [], []
        for u, v in remaining:
            ru, rv = find(u), find(v)
            if ru == rv:
                deferred.append((u, v))
            else:
                parent[ru] = rv
                forest.append((u, v))
        forests.append(forest)
        remaining = deferred
    return forests


def tree_components(forest):
    """Connected components of a forest as ``(nodes, edges)`` pairs."""
    adj = {}
    for u, v in forest:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    seen = set()
    comps = []
    for root in sorted(adj):
        if root in seen:
            continue
        nodes, stack = [], [root]
        seen.add(root)
        while stack:
            a = stack.pop()
            nodes.append(a)
            for b in adj[a]:
                if b not in seen:
                    seen.add(b)
                    stack.append(b)
        nodes.sort()
        members = set(nodes)
        comps.append((nodes, [e for e in forest if e[0] in members]))
    return comps


class TreeOracle(MinOracle):
    """Exact min-sum oracle for a tree-structured pairwise energy.

    Parameters
    ----------
    num_labels : list of int
        Labels of each local node.
    unaries : list of ndarray
        Unary costs of each local node.
    edges : list of (int, int, ndarray)
        ``(a, b, table)`` with local node ids and a table of shape
        ``(num_labels[a], num_labels[b])``; the edges must form a tree.

    The compact labeling is one label per local node.
    """

    def __init__(self, num_labels, unaries, edges):
        self.num_labels = [int(k) for k in num_labels]
        self.unaries = [np.asarray(u, dtype=np.float64) for u in unaries]
        self.edges = [(int(a), int(b), np.asarray(tab, dtype=np.float64)) for a, b, tab in edges]
        n = len(self.num_labels)
        if len(self.edges) != n - 1:
            raise ValueError("edges must form a spanning tree of the local nodes")
        self.offsets = label_offsets(self.num_labels)[:-1]
        self.arity = int(sum(self.num_labels))
        self.size = n
        self._build_order()

    def _build_order(self):
        n = self.size
        adj = [[] for _ in range(n)]
        for a, b, tab in self.edges:
            adj[a].append((b, tab))
            adj[b].append((a, tab.T))
        # parent_table[v] is indexed [parent label, v label]
        self.parent = [-1] * n
        self.parent_table = [None] * n
        order, seen = [0], [False] * n
        seen[0] = True
        for v in order:
            for w, tab in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    self.parent[w] = v
                    self.parent_table[w] = tab
                    order.append(w)
        if len(order) != n:
            raise ValueError("edges do not connect all local nodes")
        self.order = order

    def _dp(self, node_costs, sign=1.0):
        n = self.size
        cost = [c.copy() for c in node_costs]
        choice = [None] * n
        for v in reversed(self.order[1:]):
            # cand[a, b]: parent label a, own label b
            cand = sign * self.parent_table[v] + cost[v][None, :]
            choice[v] = np.argmin(cand, axis=1)
            cost[self.parent[v]] += cand[np.arange(cand.shape[0]), choice[v]]
        labels = np.empty(n, dtype=np.int64)
        labels[0] = int(np.argmin(cost[0]))
        for v in self.order[1:]:
            labels[v] = choice[v][labels[self.parent[v]]]
        return labels

    def energy(self, labels):
        e = sum(float(self.unaries[v][labels[v]]) for v in range(self.size))
        for a, b, tab in self.edges:
            e += float(tab[labels[a], labels[b]])
        return e

    def solve(self, lam):
        costs = [
            self.unaries[v] + lam[self.offsets[v]:self.offsets[v] + k]
            for v, k in enumerate(self.num_labels)
        ]
        labels = self._dp(costs)
        return labels, self.energy(labels)

    def solve_max(self):
        labels = self._dp([-u for u in self.unaries], sign=-1.0)
        return labels, self.energy(labels)

    def decode(self, s):
        x = np.zeros(self.arity)
        x[self.offsets + s] = 1.0
        return x

    def inner_product(self, lam, s):
        return float(np.sum(lam[self.offsets + s]))

    def inner_products(self, lam, planes):
        return lam[self.offsets[None, :] + planes].sum(axis=1)

    def evaluate(self, x):
        x = np.asarray(x)
        labels = np.empty(self.size, dtype=np.int64)
        for v, k in enumerate(self.num_labels):
            block = x[self.offsets[v]:self.offsets[v] + k]
            if not (np.all((block == 0) | (block == 1)) and block.sum() == 1):
                return np.inf
            labels[v] = int(np.argmax(block))
        return self.energy(labels)

    @property
    def work(self):
        return float(sum(tab.size for _, _, tab in self.edges) + self.arity)


def tree_terms(num_labels, edges, pairwise, unaries=None, forests=None, include_isolated=True):
    """Tree terms covering ``edges`` with global indicator coordinates.

    ``pairwise`` maps each edge ``(u, v)`` to its table.  Unaries are split
    evenly over the trees containing a node.  Nodes in no edge get a
    single-node term when ``include_isolated`` is set.
    """
    num_nodes = len(num_labels)
    offsets = label_offsets(num_labels)
    if forests is None:
        forests = forest_partition(num_nodes, edges)
    comps = [comp for forest in forests for comp in tree_components(forest)]
    covered = {v for nodes, _ in comps for v in nodes}
    if include_isolated:
        comps += [([v], []) for v in range(num_nodes) if v not in covered]
    multiplicity = np.zeros(num_nodes)
    for nodes, _ in comps:
        multiplicity[nodes] += 1
    terms = []
    for nodes, comp_edges in comps:
        local = {v: j for j, v in enumerate(nodes)}
        if unaries is None:
            unary_parts = [np.zeros(num_labels[v]) for v in nodes]
        else:
            unary_parts = [np.asarray(unaries[v]) / multiplicity[v] for v in nodes]
        local_edges = [(local[u], local[v], pairwise[(u, v)]) for u, v in comp_edges]
        oracle = TreeOracle([num_labels[v] for v in nodes], unary_parts, local_edges)
        index_map = np.concatenate([np.arange(offsets[v], offsets[v + 1]) for v in nodes])
        terms.append(Term(index_map, oracle))
    return terms


def encode_mrf(instance, forests=None):
    """Tree decomposition of an MRF over its Boolean label indicators."""
    terms = tree_terms(
        instance.num_labels,
        instance.edges,
        instance.pairwise,
        unaries=instance.unaries,
        forests=forests,
    )
    return build_decomposition(terms, int(sum(instance.num_labels)))
