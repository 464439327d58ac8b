"""Graph matching: an injective-labeling oracle solved as linear assignment."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InfeasibleMatching
from .model import MinOracle, Term, build_decomposition
from .mrf import tree_terms

__all__ = [
    "SENTINEL",
    "AssignmentOracle",
    "MatchingInstance",
    "assignment_min_oracle",
    "build_matching_decomposition",
    "hungarian",
]

SENTINEL = 1e30


def hungarian(cost):
    """Minimum-cost assignment of every row of a (rows <= cols) matrix.

    Shortest augmenting paths with row/column potentials ``u, v``.  On exit
    ``cost[i, j] - u[i] - v[j] >= 0`` with equality on the assignment.

    Returns
    -------
    col_of_row : ndarray of int
    u, v : ndarray
    """
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    if n > m:
        raise ValueError("need at least as many columns as rows")
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    row_of_col = np.zeros(m + 1, dtype=np.int64)  # 1-based rows, 0 = free
    way = np.zeros(m + 1, dtype=np.int64)
    padded = np.zeros((n + 1, m + 1))
    padded[1:, 1:] = cost
    for i in range(1, n + 1):
        row_of_col[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of_col[j0]
            free = ~used
            free[0] = False
            cur = padded[i0] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            cand = np.where(free, minv, np.inf)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            u[row_of_col[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if row_of_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of_col[j0] = row_of_col[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=np.int64)
    for j in range(1, m + 1):
        if row_of_col[j]:
            col_of_row[row_of_col[j] - 1] = j - 1
    return col_of_row, u[1:], v[1:]


def _lexicographic(tight, assign, n_rows):
    """Turn the perfect matching ``assign`` of the equality graph ``tight``
    into the one whose first ``n_rows`` columns are lexicographically
    smallest."""
    m = tight.shape[1]
    row_of = np.empty(m, dtype=np.int64)
    row_of[assign] = np.arange(len(assign))
    locked = np.zeros(len(assign), dtype=bool)
    adj = [np.flatnonzero(tight[r]) for r in range(len(assign))]

    def augment(r, goal, banned, seen):
        for c in adj[r]:
            if c == banned or seen[c]:
                continue
            seen[c] = True
            if c == goal or (not locked[row_of[c]] and augment(row_of[c], goal, banned, seen)):
                assign[r] = c
                row_of[c] = r
                return True
        return False

    for i in range(n_rows):
        locked[i] = True
        current = assign[i]
        for j in adj[i]:
            if j >= current:
                break
            if locked[row_of[j]]:
                continue
            if augment(row_of[j], current, j, np.zeros(m, dtype=bool)):
                assign[i] = j
                row_of[j] = i
                break
    return assign


def assignment_min_oracle(costs, tol=1e-9):
    """Injective labeling of ``n`` nodes into ``m >= n`` labels at minimum cost.

    ``costs[v, l]`` is the cost of node ``v`` taking label ``l`` (use
    :data:`SENTINEL` for forbidden pairs).  Among optimal labelings the
    lexicographically smallest label vector is returned.

    Returns
    -------
    labels : ndarray of int
    cost : float
    """
    costs = np.asarray(costs, dtype=np.float64)
    n, m = costs.shape
    if n > m:
        raise InfeasibleMatching(f"{n} nodes cannot take distinct labels out of {m}")
    square = np.zeros((m, m))
    square[:n] = costs
    assign, u, v = hungarian(square)
    total = float(costs[np.arange(n), assign[:n]].sum())
    if total >= SENTINEL / 10:
        raise InfeasibleMatching("no assignment avoids forbidden node-label pairs")
    reduced = square - u[:, None] - v[None, :]
    scale = 1.0 + np.max(np.abs(square[square < SENTINEL / 10]), initial=0.0)
    tight = (reduced <= tol * scale) & (square < SENTINEL / 10)
    tight[np.arange(m), assign] = True
    assign = _lexicographic(tight, assign.copy(), n)
    labels = assign[:n]
    return labels, float(costs[np.arange(n), labels].sum())


@dataclass
class MatchingInstance:
    """Nodes ``0..num_nodes-1`` matched injectively into ``0..num_labels-1``.

    ``assignments`` maps admissible ``(node, label)`` pairs to their cost;
    ``pairwise`` maps ``((u, a), (v, b))`` with ``u < v`` to the cost of
    taking both assignments together.
    """

    num_nodes: int
    num_labels: int
    assignments: dict
    pairwise: dict = field(default_factory=dict)

    def __post_init__(self):
        self.assignments = {(int(v), int(l)): float(c) for (v, l), c in self.assignments.items()}
        for v, l in self.assignments:
            if not (0 <= v < self.num_nodes and 0 <= l < self.num_labels):
                raise ValueError(f"assignment ({v}, {l}) out of range")
        pw = {}
        for (a, b), c in self.pairwise.items():
            a, b = (int(a[0]), int(a[1])), (int(b[0]), int(b[1]))
            if a[0] == b[0]:
                raise ValueError(f"pairwise cost between two labels of node {a[0]}")
            if a[0] > b[0]:
                a, b = b, a
            if a not in self.assignments or b not in self.assignments:
                raise ValueError("pairwise cost references an inadmissible assignment")
            pw[(a, b)] = pw.get((a, b), 0.0) + float(c)
        self.pairwise = pw

    def admissible(self, v):
        return sorted(l for (u, l) in self.assignments if u == v)

    def energy(self, labeling):
        if len(set(labeling)) != len(labeling):
            return np.inf
        e = 0.0
        for v, l in enumerate(labeling):
            if (v, l) not in self.assignments:
                return np.inf
            e += self.assignments[(v, l)]
        for ((u, a), (v, b)), c in self.pairwise.items():
            if labeling[u] == a and labeling[v] == b:
                e += c
        return e


class AssignmentOracle(MinOracle):
    """Min-oracle of the matching term.

    The term's coordinates are the admissible ``(node, label)`` indicators
    given by ``label_lists``; it carries the assignment costs ``unaries``
    and forbids two nodes sharing a label.  The compact labeling stores the
    local label index of every node.
    """

    def __init__(self, label_lists, unaries, num_labels):
        self.label_lists = [np.asarray(ls, dtype=np.int64) for ls in label_lists]
        self.unaries = [np.asarray(u, dtype=np.float64) for u in unaries]
        self.num_labels = int(num_labels)
        self.n = len(self.label_lists)
        sizes = [len(ls) for ls in self.label_lists]
        if min(sizes, default=1) == 0:
            raise InfeasibleMatching("a node has no admissible label")
        if self.n > self.num_labels:
            raise InfeasibleMatching(f"{self.n} nodes but only {self.num_labels} labels")
        self.offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        self.arity = int(sum(sizes))
        self.size = self.n
        # local index of (node, global label), -1 if inadmissible
        self._local = np.full((self.n, self.num_labels), -1, dtype=np.int64)
        for v, ls in enumerate(self.label_lists):
            self._local[v, ls] = np.arange(len(ls))

    def _matrix(self, lam, sign=1.0):
        mat = np.full((self.n, self.num_labels), SENTINEL)
        for v, ls in enumerate(self.label_lists):
            block = slice(self.offsets[v], self.offsets[v] + len(ls))
            mat[v, ls] = sign * self.unaries[v] + lam[block]
        return mat

    def _finish(self, global_labels):
        local = self._local[np.arange(self.n), global_labels]
        return local, self.energy(local)

    def solve(self, lam):
        labels, _ = assignment_min_oracle(self._matrix(np.asarray(lam)))
        return self._finish(labels)

    def solve_max(self):
        labels, _ = assignment_min_oracle(self._matrix(np.zeros(self.arity), sign=-1.0))
        return self._finish(labels)

    def energy(self, local):
        return float(sum(self.unaries[v][a] for v, a in enumerate(local)))

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
        local = np.empty(self.n, dtype=np.int64)
        for v, ls in enumerate(self.label_lists):
            block = x[self.offsets[v]:self.offsets[v] + len(ls)]
            if not (np.all((block == 0) | (block == 1)) and block.sum() == 1):
                return np.inf
            local[v] = int(np.argmax(block))
        chosen = [self.label_lists[v][a] for v, a in enumerate(local)]
        if len(set(chosen)) != len(chosen):
            return np.inf
        return self.energy(local)

    @property
    def work(self):
        return float(self.num_labels) ** 3


def build_matching_decomposition(instance):
    """Tree terms for the pairwise costs plus one global assignment term."""
    if instance.num_nodes > instance.num_labels:
        raise InfeasibleMatching(
            f"{instance.num_nodes} nodes cannot be matched into {instance.num_labels} labels"
        )
    label_lists = [instance.admissible(v) for v in range(instance.num_nodes)]
    if any(not ls for ls in label_lists):
        raise InfeasibleMatching("a node has no admissible label")
    num_labels = [len(ls) for ls in label_lists]
    position = [{l: a for a, l in enumerate(ls)} for ls in label_lists]
    tables = {}
    for ((u, a), (v, b)), c in instance.pairwise.items():
        table = tables.setdefault((u, v), np.zeros((num_labels[u], num_labels[v])))
        table[position[u][a], position[v][b]] += c
    terms = tree_terms(num_labels, list(tables), tables, include_isolated=False)
    unaries = [np.array([instance.assignments[(v, l)] for l in ls]) for v, ls in enumerate(label_lists)]
    oracle = AssignmentOracle(label_lists, unaries, instance.num_labels)
    terms.append(Term(np.arange(sum(num_labels)), oracle))
    return build_decomposition(terms, int(sum(num_labels)))
