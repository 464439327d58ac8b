"""Discrete tomography: projection-row oracles and grid decompositions.

A projection row constrains ``sum_v x_v = b`` over integer pixel labels
``x_v in {0..k}``.  Its oracle minimises the per-(pixel, label) costs under
that constraint with a dynamic program over a balanced binary partition of
the row, combining halves by (min,+) convolution.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleRow
from .model import MinOracle, Term, build_decomposition
from .mrf import tree_terms

__all__ = [
    "SENTINEL",
    "ProjectionRow",
    "TomographyInstance",
    "TomographyOracle",
    "build_tomography_decomposition",
    "grid_edges",
    "min_convolution",
    "min_convolution_pruned",
    "tomo_min_oracle",
    "truncated_l1",
]

#: Stand-in for +inf in DP tables; anything >= SENTINEL / 10 is infeasible.
SENTINEL = 1e30


def min_convolution(left, right):
    """Naive (min,+) convolution ``out[l] = min_j left[j] + right[l - j]``."""
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    out = np.full(len(left) + len(right) - 1, np.inf)
    for j, a in enumerate(left):
        np.minimum(out[j:j + len(right)], a + right, out=out[j:j + len(right)])
    return np.minimum(out, SENTINEL)


def min_convolution_pruned(left, right, chunk=8):
    """(min,+) convolution that visits ``left`` in increasing order and stops
    once no remaining entry can improve any output.

    Returns exactly the table of :func:`min_convolution`.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if len(left) < len(right):
        left, right = right, left
    n, m = len(left), len(right)
    out = np.full(n + m - 1, np.inf)
    order = np.argsort(left, kind="stable")
    right_min = right.min()
    for start in range(0, n, chunk):
        if left[order[start]] + right_min >= out.max():
            break
        for j in order[start:start + chunk]:
            np.minimum(out[j:j + m], left[j] + right, out=out[j:j + m])
    return np.minimum(out, SENTINEL)


@dataclass(frozen=True)
class ProjectionRow:
    pixels: tuple
    total: int
    k: int

    def __post_init__(self):
        object.__setattr__(self, "pixels", tuple(int(v) for v in self.pixels))
        if len(set(self.pixels)) != len(self.pixels):
            raise ValueError("a projection row lists a pixel twice")
        if not 0 <= self.total <= len(self.pixels) * self.k:
            raise InfeasibleRow(
                f"row sum {self.total} outside [0, {len(self.pixels) * self.k}]"
            )


def _split(i, j):
    # [i, j) -> [i, mid) + [mid, j), left part has floor(len / 2) elements
    return i + (j - i) // 2


def _tables(costs, i, j, conv, memo):
    if j - i == 1:
        table = costs[i]
    else:
        mid = _split(i, j)
        table = conv(_tables(costs, i, mid, conv, memo), _tables(costs, mid, j, conv, memo))
    memo[(i, j)] = table
    return table


def _backtrack(memo, i, j, target, labels):
    if j - i == 1:
        labels[i] = target
        return
    mid = _split(i, j)
    left, right = memo[(i, mid)], memo[(mid, j)]
    lo = max(0, target - (len(right) - 1))
    hi = min(target, len(left) - 1)
    sums = left[lo:hi + 1] + right[target - np.arange(lo, hi + 1)]
    s_left = lo + int(np.argmin(sums))
    _backtrack(memo, i, mid, s_left, labels)
    _backtrack(memo, mid, j, target - s_left, labels)


def tomo_min_oracle(costs, total, fast=False):
    """Cheapest labeling with ``sum(labels) == total``.

    Parameters
    ----------
    costs : array of shape (n, k + 1)
        ``costs[i, l]`` is the cost of pixel ``i`` taking label ``l``.
    total : int
    fast : bool
        Use the pruned convolution.

    Returns
    -------
    labels : ndarray of int
    cost : float
        ``sum_i costs[i, labels[i]]``, equal to the root table at ``total``.
    """
    costs = np.asarray(costs, dtype=np.float64)
    n, kp1 = costs.shape
    if not 0 <= total <= n * (kp1 - 1):
        raise InfeasibleRow(f"row sum {total} outside [0, {n * (kp1 - 1)}]")
    memo = {}
    conv = min_convolution_pruned if fast else min_convolution
    root = _tables(list(costs), 0, n, conv, memo)
    labels = np.empty(n, dtype=np.int64)
    _backtrack(memo, 0, n, int(total), labels)
    return labels, float(root[total])


class TomographyOracle(MinOracle):
    """Oracle of one projection row over its pixels' label indicators.

    The term is 0 on labelings meeting the row sum and +inf elsewhere.
    Coordinates are laid out pixel by pixel, ``k + 1`` labels each.
    """

    def __init__(self, row, fast=False):
        self.row = row
        self.fast = fast
        self.n = len(row.pixels)
        self.k = row.k
        self.arity = self.n * (self.k + 1)
        self.size = self.n
        self._offsets = np.arange(self.n, dtype=np.int64) * (self.k + 1)

    def solve(self, lam):
        labels, _ = tomo_min_oracle(
            np.asarray(lam).reshape(self.n, self.k + 1), self.row.total, self.fast
        )
        return labels, 0.0

    def solve_max(self):
        return self.solve(np.zeros(self.arity))

    def decode(self, s):
        x = np.zeros(self.arity)
        x[self._offsets + s] = 1.0
        return x

    def inner_product(self, lam, s):
        return float(np.sum(lam[self._offsets + s]))

    def inner_products(self, lam, planes):
        return lam[self._offsets[None, :] + planes].sum(axis=1)

    def evaluate(self, x):
        blocks = np.asarray(x).reshape(self.n, self.k + 1)
        if not (np.all((blocks == 0) | (blocks == 1)) and np.all(blocks.sum(axis=1) == 1)):
            return np.inf
        return 0.0 if int(np.argmax(blocks, axis=1).sum()) == self.row.total else np.inf

    @property
    def work(self):
        levels = max(1.0, np.log2(max(self.n, 2)))
        return float(self.n * (self.k + 1)) ** 2 / 2.0 + self.arity * levels


@dataclass
class TomographyInstance:
    height: int
    width: int
    k: int
    truncation: float
    rows: list

    @property
    def num_pixels(self):
        return self.height * self.width

    def energy(self, labeling):
        labeling = np.asarray(labeling)
        return sum(
            truncated_l1(labeling[u], labeling[v], self.truncation)
            for u, v in grid_edges(self.height, self.width)
        )

    def feasible(self, labeling):
        return all(sum(labeling[v] for v in r.pixels) == r.total for r in self.rows)


def truncated_l1(a, b, truncation):
    return min(abs(a - b), truncation)


def grid_edges(height, width):
    """4-neighbour edges of a row-major pixel grid."""
    edges = []
    for r in range(height):
        for c in range(width):
            v = r * width + c
            if c + 1 < width:
                edges.append((v, v + 1))
            if r + 1 < height:
                edges.append((v, v + width))
    return edges


def build_tomography_decomposition(instance, fast=False):
    """Tree terms with truncated-L1 smoothness plus one term per projection row."""
    h, w, k = instance.height, instance.width, instance.k
    n_pix = h * w
    for r in instance.rows:
        if r.k != k:
            raise ValueError("row label bound differs from the instance")
        if any(not 0 <= v < n_pix for v in r.pixels):
            raise ValueError("row references a pixel outside the grid")
    labels = np.arange(k + 1)
    table = np.minimum(np.abs(labels[:, None] - labels[None, :]), instance.truncation).astype(np.float64)
    edges = grid_edges(h, w)
    num_labels = [k + 1] * n_pix
    terms = tree_terms(num_labels, edges, {e: table for e in edges})
    for r in instance.rows:
        index_map = (np.asarray(r.pixels, dtype=np.int64)[:, None] * (k + 1) + labels[None, :]).reshape(-1)
        terms.append(Term(index_map, TomographyOracle(r, fast=fast)))
    return build_decomposition(terms, n_pix * (k + 1))
