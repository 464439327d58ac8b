import itertools

import numpy as np
import pytest

from fwmap.mrf import (
    MrfInstance,
    TreeOracle,
    encode_mrf,
    forest_partition,
    labeling_to_indicators,
    tree_components,
)
from helpers import all_labelings, mrf_energies, random_cyclic_mrf, random_tree_edges, tree_brute

CHAIN = dict(num_labels=[2, 2], unaries=[[0, 1], [0, 0]], edges=[(0, 1, [[0, 1], [1, 0]])])


def is_forest(n, edges):
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


class TestForestPartition:
    def test_path(self):
        assert len(forest_partition(6, [(i, i + 1) for i in range(5)])) == 1

    def test_triangle(self):
        assert forest_partition(3, [(0, 1), (1, 2), (0, 2)]) == [[(0, 1), (1, 2)], [(0, 2)]]

    def test_four_cycle(self):
        forests = forest_partition(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
        assert [len(f) for f in forests] == [3, 1]

    def test_random_graphs(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.5]
            forests = forest_partition(n, edges)
            assert sorted(e for f in forests for e in f) == sorted(edges)
            assert all(is_forest(n, f) for f in forests)
            # Nash-Williams lower bound on the number of forests
            if edges:
                assert len(forests) >= int(np.ceil(len(edges) / (n - 1)))

    def test_components(self):
        comps = tree_components([(0, 1), (3, 4), (1, 2)])
        assert comps == [([0, 1, 2], [(0, 1), (1, 2)]), ([3, 4], [(3, 4)])]


class TestTreeOracle:
    def test_chain(self):
        o = TreeOracle(**CHAIN)
        s, cost = o.solve(np.zeros(4))
        assert s.tolist() == [0, 0] and cost == 0.0

    def test_chain_biased(self):
        o = TreeOracle(**CHAIN)
        s, cost = o.solve(np.array([10.0, 0, 0, 0]))
        assert s.tolist() == [1, 1] and cost == 1.0

    def test_single_node(self):
        s, cost = TreeOracle([2], [[3, -2]], []).solve(np.zeros(2))
        assert s.tolist() == [1] and cost == -2.0

    def test_ties_lowest_label(self):
        s, cost = TreeOracle([3, 3], [[0, 0, 0], [0, 0, 0]], [(0, 1, np.zeros((3, 3)))]).solve(np.zeros(6))
        assert s.tolist() == [0, 0] and cost == 0.0

    def test_matches_enumeration(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            k = [int(rng.integers(1, 4)) for _ in range(n)]
            unaries = [rng.normal(size=kv) for kv in k]
            edges = [(a, b, rng.normal(size=(k[a], k[b]))) for a, b in random_tree_edges(rng, n)]
            lam = rng.normal(size=sum(k))
            o = TreeOracle(k, unaries, edges)
            s, cost = o.solve(lam)
            _, best, _ = tree_brute(k, unaries, edges, lam)
            x = o.decode(s)
            # solve reports the plane height f_t(x); the objective adds <lam, x>
            assert cost == o.energy(s)
            assert cost + x @ lam == pytest.approx(best, abs=1e-12)
            assert o.inner_product(lam, s) == pytest.approx(float(x @ lam), abs=1e-12)
            offsets = np.concatenate([[0], np.cumsum(k)])
            assert all(x[offsets[v]:offsets[v + 1]].sum() == 1 for v in range(n))
            s_max, c_max = o.solve_max()
            assert c_max == pytest.approx(-tree_brute(k, [-np.asarray(u) for u in unaries],
                                                      [(a, b, -t) for a, b, t in edges])[1], abs=1e-12)
            assert o.evaluate(o.decode(s_max)) == pytest.approx(c_max)

    def test_inner_products_batch(self):
        o = TreeOracle(**CHAIN)
        lam = np.array([1.0, 2.0, 3.0, 4.0])
        planes = np.array([[0, 0], [1, 1], [0, 1]])
        np.testing.assert_allclose(o.inner_products(lam, planes), [4, 6, 5])

    def test_evaluate_rejects_non_one_hot(self):
        o = TreeOracle(**CHAIN)
        assert o.evaluate(np.array([1.0, 1, 1, 0])) == np.inf
        assert o.evaluate(np.array([0.0, 1, 0, 1])) == 1.0

    def test_edges_must_form_tree(self):
        with pytest.raises(ValueError):
            TreeOracle([2, 2, 2], [[0, 0]] * 3, [(0, 1, np.zeros((2, 2))), (1, 0, np.zeros((2, 2)))])


class TestEncode:
    def test_triangle_split(self):
        inst = MrfInstance([2, 2, 2], [[0, 4], [0, 2], [0, 6]],
                           {(0, 1): np.zeros((2, 2)), (1, 2): np.zeros((2, 2)), (0, 2): np.zeros((2, 2))})
        d = encode_mrf(inst)
        assert d.num_terms == 2
        unaries = [d.terms[t].oracle.unaries for t in range(2)]
        # node 0 and node 2 appear in both trees, node 1 only in the first
        np.testing.assert_allclose(unaries[0][0], [0, 2])
        np.testing.assert_allclose(unaries[0][1], [0, 2])
        np.testing.assert_allclose(unaries[1][0], [0, 2])
        np.testing.assert_allclose(unaries[1][1], [0, 3])
        assert d.counts.tolist() == [2, 2, 1, 1, 2, 2]

    def test_tree_instance_single_term(self):
        rng = np.random.default_rng(2)
        inst = MrfInstance([2, 3, 2], [rng.normal(size=k) for k in (2, 3, 2)],
                           {(0, 1): rng.normal(size=(2, 3)), (1, 2): rng.normal(size=(3, 2))})
        d = encode_mrf(inst)
        assert d.num_terms == 1 and set(d.counts.tolist()) == {1}

    def test_isolated_nodes_get_terms(self):
        d = encode_mrf(MrfInstance([2, 2, 3], [[0, 1], [1, 0], [0, 0, 0]], {(0, 1): np.eye(2)}))
        assert d.num_terms == 2 and d.num_vars == 7

    def test_energy_preserved(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            inst = random_cyclic_mrf(rng)
            d = encode_mrf(inst)
            labs = all_labelings(inst.num_labels)
            want = mrf_energies(inst, labs)
            for lab, e in zip(labs, want):
                x = labeling_to_indicators(inst.num_labels, lab)
                got = sum(term.oracle.evaluate(x[term.index_map]) for term in d.terms)
                assert got == pytest.approx(e, abs=1e-12)


class TestInstance:
    def test_edge_orientation_and_duplicates(self):
        inst = MrfInstance([2, 3], [[0, 0], [0, 0, 0]],
                           {(1, 0): np.arange(6.0).reshape(3, 2), (0, 1): np.ones((2, 3))})
        np.testing.assert_allclose(inst.pairwise[(0, 1)], np.arange(6.0).reshape(3, 2).T + 1)
        assert inst.energy([1, 2]) == 6.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(num_labels=[0], unaries=[[]]),
            dict(num_labels=[2], unaries=[[0, 0, 0]]),
            dict(num_labels=[2, 2], unaries=[[0, 0]]),
            dict(num_labels=[2, 2], unaries=[[0, 0], [0, 0]], pairwise={(0, 0): np.zeros((2, 2))}),
            dict(num_labels=[2, 2], unaries=[[0, 0], [0, 0]], pairwise={(0, 1): np.zeros((3, 2))}),
            dict(num_labels=[2], unaries=[[0, np.nan]]),
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            MrfInstance(**kwargs)
