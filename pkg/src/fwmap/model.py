"""Problem representation: terms, min-oracles, multipliers and the dual h.

A problem is a sum of terms ``f(x) = sum_t f_t(x[A_t])`` over Boolean
variables ``x in {0,1}^d``.  Each term only exposes a min-oracle.

Multipliers and the ``y_star`` part of primal iterates are stored as flat
float64 arrays laid out term by term: the slice
``offsets[t]:offsets[t + 1]`` holds the entries of term ``t`` and
``index[k]`` is the global variable of slot ``k``.
"""

import abc
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DuplicateIndexInTerm,
    FWMAPError,
    OracleFailure,
    VariableUncovered,
)

__all__ = [
    "MinOracle",
    "ExplicitOracle",
    "Term",
    "Decomposition",
    "PrimalIterate",
    "build_decomposition",
    "project_to_lambda_space",
    "eval_dual",
    "compute_nu",
]


class MinOracle(abc.ABC):
    """Access to a single term ``f_t`` through compact labelings.

    Subclasses set ``arity`` (number of Boolean coordinates) and ``size``
    (length of the integer array holding a compact labeling ``s``) and
    implement :meth:`solve` and :meth:`decode`.

    The remaining methods have generic fallbacks built on :meth:`decode`;
    oracles with a cheaper structure should override them.
    """

    arity: int
    size: int

    @abc.abstractmethod
    def solve(self, lam):
        """Return ``(s, cost)`` with ``decode(s)`` in the argmin of
        ``f_t(x) + <lam, x>`` and ``cost = f_t(decode(s))``."""

    @abc.abstractmethod
    def decode(self, s):
        """Map a compact labeling to its 0/1 indicator vector (float64)."""

    def inner_product(self, lam, s):
        return float(np.dot(lam, self.decode(s)))

    def inner_products(self, lam, planes):
        """Vectorised :meth:`inner_product` over the rows of ``planes``."""
        return np.array([self.inner_product(lam, s) for s in planes])

    def evaluate(self, x):
        """Return ``f_t(x)`` for an indicator vector, ``inf`` outside dom f_t."""
        raise NotImplementedError

    def solve_max(self):
        """Return ``(s, cost)`` maximising ``f_t`` over its domain."""
        raise NotImplementedError

    @property
    def work(self):
        # Nominal cost of one exact call, used by the deterministic clock.
        return float(self.arity)


class ExplicitOracle(MinOracle):
    """Oracle over an explicitly enumerated domain.

    Parameters
    ----------
    configs : array-like of shape (n_configs, arity)
        The 0/1 points of ``dom f_t``; rows must be distinct.
    costs : array-like of shape (n_configs,)
        Finite values ``f_t`` at those points.

    The compact labeling of a point is its row number.
    """

    size = 1

    def __init__(self, configs, costs):
        configs = np.asarray(configs, dtype=np.float64)
        if configs.ndim != 2 or configs.shape[0] == 0:
            raise ValueError("configs must be a non-empty 2-d array")
        if not np.all((configs == 0) | (configs == 1)):
            raise ValueError("configs must be 0/1")
        if len(np.unique(configs, axis=0)) != len(configs):
            raise ValueError("configs must be distinct")
        costs = np.asarray(costs, dtype=np.float64)
        if costs.shape != (configs.shape[0],) or not np.all(np.isfinite(costs)):
            raise ValueError("costs must be finite with one entry per config")
        self.configs = configs
        self.costs = costs
        self.arity = configs.shape[1]

    def solve(self, lam):
        j = int(np.argmin(self.costs + self.configs @ lam))
        return np.array([j], dtype=np.int64), float(self.costs[j])

    def solve_max(self):
        j = int(np.argmax(self.costs))
        return np.array([j], dtype=np.int64), float(self.costs[j])

    def decode(self, s):
        return self.configs[int(s[0])].copy()

    def inner_product(self, lam, s):
        return float(self.configs[int(s[0])] @ lam)

    def inner_products(self, lam, planes):
        return self.configs[np.asarray(planes)[:, 0]] @ lam

    def evaluate(self, x):
        hit = np.flatnonzero(np.all(self.configs == np.asarray(x), axis=1))
        return float(self.costs[hit[0]]) if len(hit) else np.inf

    @property
    def work(self):
        return float(self.configs.size)


@dataclass(frozen=True, eq=False)
class Term:
    """One summand ``f_t``: the global variables it touches and its oracle."""

    index_map: np.ndarray
    oracle: MinOracle

    def __post_init__(self):
        index_map = np.array(self.index_map, dtype=np.int64).reshape(-1)
        index_map.setflags(write=False)
        object.__setattr__(self, "index_map", index_map)
        if self.oracle.arity != len(index_map):
            raise ValueError(
                f"oracle arity {self.oracle.arity} does not match "
                f"index map length {len(index_map)}"
            )

    @property
    def arity(self):
        return len(self.index_map)

    @property
    def size(self):
        return self.oracle.size


class Decomposition:
    """Immutable collection of terms over ``num_vars`` Boolean variables.

    Use :func:`build_decomposition` to construct one.

    Attributes
    ----------
    num_vars : int
    terms : tuple of Term
    t_of : tuple of tuple of int
        ``t_of[i]`` lists the terms containing variable ``i``.
    index : ndarray of shape (n_slots,)
        Global variable of every multiplier slot.
    offsets : ndarray of shape (n_terms + 1,)
        Slot range of each term.
    counts : ndarray of shape (num_vars,)
        ``|T_i|`` for every variable.
    """

    def __init__(self, num_vars, terms, t_of, index, offsets, counts):
        self.num_vars = num_vars
        self.terms = terms
        self.t_of = t_of
        self.index = index
        self.offsets = offsets
        self.counts = counts
        self.slot_counts = counts[index]
        for arr in (index, offsets, counts, self.slot_counts):
            arr.setflags(write=False)

    @property
    def num_terms(self):
        return len(self.terms)

    @property
    def num_slots(self):
        return len(self.index)

    def term_slice(self, t):
        return slice(self.offsets[t], self.offsets[t + 1])

    def split(self, flat):
        """Per-term views into a flat slot array."""
        return [flat[self.offsets[t]:self.offsets[t + 1]] for t in range(self.num_terms)]

    def join(self, parts):
        """Inverse of :meth:`split`."""
        if len(parts) != self.num_terms:
            raise ValueError("expected one array per term")
        out = np.empty(self.num_slots)
        for t, part in enumerate(parts):
            part = np.asarray(part, dtype=np.float64)
            if part.shape != (self.terms[t].arity,):
                raise ValueError(f"term {t}: expected shape ({self.terms[t].arity},)")
            out[self.term_slice(t)] = part
        return out

    def zeros(self):
        return np.zeros(self.num_slots)

    def __repr__(self):
        return f"Decomposition(num_vars={self.num_vars}, num_terms={self.num_terms})"


def build_decomposition(terms, num_vars):
    """Validate ``terms`` and build the inverted variable-to-term index."""
    terms = tuple(terms)
    if not terms:
        raise ValueError("a decomposition needs at least one term")
    t_of = [[] for _ in range(num_vars)]
    for t, term in enumerate(terms):
        idx = term.index_map
        if len(idx) and (idx.min() < 0 or idx.max() >= num_vars):
            raise ValueError(f"term {t} references a variable outside [0, {num_vars})")
        if len(np.unique(idx)) != len(idx):
            raise DuplicateIndexInTerm(f"term {t} repeats a variable index")
        for i in idx:
            t_of[i].append(t)
    uncovered = [i for i in range(num_vars) if not t_of[i]]
    if uncovered:
        raise VariableUncovered(f"variable {uncovered[0]} is in no term")
    index = np.concatenate([term.index_map for term in terms]).astype(np.int64)
    offsets = np.zeros(len(terms) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([term.arity for term in terms])
    counts = np.bincount(index, minlength=num_vars).astype(np.int64)
    return Decomposition(
        num_vars, terms, tuple(tuple(ts) for ts in t_of), index, offsets, counts
    )


def _as_flat(decomp, values):
    if isinstance(values, np.ndarray) and values.ndim == 1:
        if values.shape != (decomp.num_slots,):
            raise ValueError(f"expected {decomp.num_slots} multiplier slots")
        return values.astype(np.float64, copy=False)
    return decomp.join(values)


def project_to_lambda_space(decomp, raw):
    """Orthogonal projection onto ``{lam : sum_{t in T_i} lam^t_i = 0}``.

    ``raw`` is either a flat slot array or a list of per-term arrays; the
    result is always flat.
    """
    raw = _as_flat(decomp, raw)
    sums = np.bincount(decomp.index, weights=raw, minlength=decomp.num_vars)
    return raw - (sums / decomp.counts)[decomp.index]


def compute_nu(decomp, y_star, mu, c):
    """Per-variable average of ``c * y_star + mu`` over the terms sharing it."""
    sums = np.bincount(decomp.index, weights=c * y_star + mu, minlength=decomp.num_vars)
    return sums / decomp.counts


def _call_oracle(oracle, lam, t):
    try:
        s, cost = oracle.solve(lam)
    except FWMAPError:
        raise
    except Exception as exc:
        raise OracleFailure(f"oracle of term {t} failed: {exc}") from exc
    cost = float(cost)
    if not np.isfinite(cost):
        raise OracleFailure(f"oracle of term {t} returned a non-finite cost")
    return np.asarray(s, dtype=np.int64), cost


def eval_dual(decomp, lam):
    """Evaluate ``h(lam) = sum_t min_x [f_t(x) + <lam^t, x>]``.

    Returns
    -------
    value : float
    argmins : list of (s, cost)
        Oracle output per term, reusable as cutting planes.
    """
    lam = _as_flat(decomp, lam)
    value = 0.0
    argmins = []
    for t, term in enumerate(decomp.terms):
        lam_t = lam[decomp.term_slice(t)]
        s, cost = _call_oracle(term.oracle, lam_t, t)
        value += cost + term.oracle.inner_product(lam_t, s)
        argmins.append((s, cost))
    return value, argmins


@dataclass
class PrimalIterate:
    """A point ``y`` of the product of convex hulls plus its running ``nu``."""

    y_star: np.ndarray
    y_circ: np.ndarray
    nu: np.ndarray

    def copy(self):
        return PrimalIterate(self.y_star.copy(), self.y_circ.copy(), self.nu.copy())

    @classmethod
    def from_vertices(cls, decomp, vertices, mu, c):
        """Build ``y`` with ``y^t`` equal to the given oracle output ``(s, cost)``."""
        y_star = np.empty(decomp.num_slots)
        y_circ = np.empty(decomp.num_terms)
        for t, (s, cost) in enumerate(vertices):
            y_star[decomp.term_slice(t)] = decomp.terms[t].oracle.decode(s)
            y_circ[t] = cost
        return cls(y_star, y_circ, compute_nu(decomp, y_star, mu, c))

    def nu_drift(self, decomp, mu, c):
        """Relative deviation of the stored ``nu`` from a fresh recompute."""
        fresh = compute_nu(decomp, self.y_star, mu, c)
        scale = 1.0 + np.max(np.abs(fresh), initial=0.0)
        return float(np.max(np.abs(fresh - self.nu), initial=0.0) / scale)
