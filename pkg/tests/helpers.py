"""Brute-force references and random instance generators for the tests.

Nothing here reuses the package's algorithms; only its data classes.
"""

import itertools

import numpy as np

from fwmap.matching import MatchingInstance
from fwmap.model import ExplicitOracle, Term, build_decomposition, eval_dual
from fwmap.mrf import MrfInstance

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"


def all_labelings(num_labels):
    """Every labeling as rows of an int array (vectorised enumeration)."""
    grids = np.meshgrid(*[np.arange(k) for k in num_labels], indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def mrf_energies(inst, labelings):
    e = np.zeros(len(labelings))
    for v, u in enumerate(inst.unaries):
        e += u[labelings[:, v]]
    for (a, b), table in inst.pairwise.items():
        e += table[labelings[:, a], labelings[:, b]]
    return e


def brute_mrf_min(inst):
    labs = all_labelings(inst.num_labels)
    e = mrf_energies(inst, labs)
    j = int(np.argmin(e))
    return float(e[j]), labs[j]


def random_tree_edges(rng, n):
    # random Pruefer-free construction: attach node v to a random earlier node
    order = rng.permutation(n)
    return [tuple(sorted((int(order[v]), int(order[rng.integers(v)])))) for v in range(1, n)]


def random_tree_mrf(rng, max_nodes=10, max_labels=4):
    n = int(rng.integers(1, max_nodes + 1))
    k = [int(rng.integers(1, max_labels + 1)) for _ in range(n)]
    unaries = [rng.normal(size=kv) for kv in k]
    pw = {(a, b): rng.normal(size=(k[a], k[b])) for a, b in random_tree_edges(rng, n)}
    return MrfInstance(k, unaries, pw)


def random_cyclic_mrf(rng, max_coords=16, strength=1.0):
    """Random MRF with at least one cycle and at most ``max_coords`` indicators."""
    while True:
        n = int(rng.integers(3, 7))
        k = [int(rng.integers(2, 4)) for _ in range(n)]
        if sum(k) > max_coords:
            continue
        pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
        chosen = [p for p in pairs if rng.random() < 0.6]
        if len(chosen) < n:  # guarantees a cycle in a graph on n nodes
            continue
        unaries = [rng.normal(size=kv) for kv in k]
        pw = {(a, b): strength * rng.normal(size=(k[a], k[b])) for a, b in chosen}
        return MrfInstance(k, unaries, pw)


def tree_brute(num_labels, unaries, edges, lam=None):
    """Enumerate a tree term: returns (best labeling, best cost, all costs)."""
    labs = all_labelings(num_labels)
    e = np.zeros(len(labs))
    offsets = np.concatenate([[0], np.cumsum(num_labels)])
    for v, u in enumerate(unaries):
        e += np.asarray(u)[labs[:, v]]
        if lam is not None:
            e += lam[offsets[v] + labs[:, v]]
    for a, b, table in edges:
        e += np.asarray(table)[labs[:, a], labs[:, b]]
    j = int(np.argmin(e))
    return labs[j], float(e[j]), e


def tomo_brute(costs, total):
    costs = np.asarray(costs)
    n, kp1 = costs.shape
    labs = all_labelings([kp1] * n)
    labs = labs[labs.sum(axis=1) == total]
    e = costs[np.arange(n)[None, :], labs].sum(axis=1)
    j = int(np.argmin(e))
    return labs[j], float(e[j])


def assignment_brute(costs):
    """Minimum over injective maps; ties go to the lexicographically smallest."""
    costs = np.asarray(costs)
    n, m = costs.shape
    best, best_labels = np.inf, None
    for perm in itertools.permutations(range(m), n):  # lexicographic order
        c = float(costs[np.arange(n), perm].sum())
        if c < best:
            best, best_labels = c, np.array(perm)
    return best_labels, best


def matching_brute(inst):
    best = np.inf
    for perm in itertools.permutations(range(inst.num_labels), inst.num_nodes):
        best = min(best, inst.energy(list(perm)))
    return best


def random_matching(rng, n=3, m=4, p_edge=0.5):
    A = {(v, l): float(rng.normal()) for v in range(n) for l in range(m)}
    pw = {}
    for u in range(n):
        for v in range(u + 1, n):
            for a in range(m):
                for b in range(m):
                    if a != b and rng.random() < p_edge:
                        pw[((u, a), (v, b))] = float(rng.normal())
    return MatchingInstance(n, m, A, pw)


def random_explicit_decomposition(rng, num_vars=4, num_terms=3, max_configs=5):
    """Random terms with explicit vertex lists; every variable is covered."""
    while True:
        maps = []
        for _ in range(num_terms):
            size = int(rng.integers(1, num_vars + 1))
            maps.append(np.sort(rng.choice(num_vars, size=size, replace=False)))
        if len(set(np.concatenate(maps))) == num_vars:
            break
    terms = []
    for idx in maps:
        m = int(rng.integers(1, max_configs + 1))
        configs = np.unique(rng.integers(0, 2, size=(m, len(idx))), axis=0).astype(float)
        terms.append(Term(idx, ExplicitOracle(configs, rng.normal(size=len(configs)) * 3)))
    return build_decomposition(terms, num_vars)


def explicit_h_brute(decomp, lam):
    """Dual value by enumerating each explicit term's configuration list."""
    total = 0.0
    for t, term in enumerate(decomp.terms):
        lt = lam[decomp.term_slice(t)]
        total += float(np.min(term.oracle.costs + term.oracle.configs @ lt))
    return total


def random_vertices(decomp, rng, count=3):
    """Oracle vertices at random multipliers (list per term)."""
    out = [[] for _ in range(decomp.num_terms)]
    for _ in range(count):
        lam = rng.normal(size=decomp.num_slots) * 3
        _, argmins = eval_dual(decomp, lam)
        for t, v in enumerate(argmins):
            out[t].append(v)
    return out


def random_iterate_parts(decomp, rng, count=3):
    """Random point of the product of hulls as flat (y_star, y_circ)."""
    verts = random_vertices(decomp, rng, count)
    y_star = np.empty(decomp.num_slots)
    y_circ = np.empty(decomp.num_terms)
    for t, vs in enumerate(verts):
        w = rng.dirichlet(np.ones(len(vs)))
        oracle = decomp.terms[t].oracle
        y_star[decomp.term_slice(t)] = sum(wi * oracle.decode(s) for wi, (s, _) in zip(w, vs))
        y_circ[t] = sum(wi * c for wi, (_, c) in zip(w, vs))
    return y_star, y_circ


def prox_dual_reference(decomp, y_star, y_circ, mu, c):
    """max over lam in Lambda of sum_t <y^t, [lam^t 1]> - |lam - mu|^2/(2c).

    Solved directly: the maximiser is the projection of ``mu + c y_star``.
    Independent of the closed form used by the package.
    """
    raw = mu + c * y_star
    sums = np.bincount(decomp.index, weights=raw, minlength=decomp.num_vars)
    cnt = np.bincount(decomp.index, minlength=decomp.num_vars)
    lam = raw - (sums / cnt)[decomp.index]
    return float(np.dot(y_star, lam) + np.sum(y_circ) - np.dot(lam - mu, lam - mu) / (2 * c))
