"""Block-coordinate Frank-Wolfe on the dual of the proximal problem.

For a center ``mu`` and weight ``c`` the inner problem is ``min_y f(y)`` with

    f(y) = sum_t (c/2 |y^t_star|^2 + <y^t_star, mu^t> + y^t_circ)
           - sum_i |T_i| / (2c) * nu_i^2

whose block gradient is ``[lam^t 1]`` with ``lam^t = c y^t_star + mu^t - nu[A_t]``.
The multi-plane variant alternates one exact pass (real oracles) with cheap
approximate passes over cached planes while they pay off per unit of time.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyCache
from .model import _call_oracle

__all__ = [
    "ProxParams",
    "PlaneCache",
    "PassStats",
    "WallClock",
    "WorkClock",
    "eval_prox_dual",
    "extract_lambda",
    "step_size",
    "bcfw_exact_pass",
    "bcfw_approx_pass",
    "mp_bcfw_iteration",
    "ratio_dropped",
]

#: Default eviction horizon in MP-BCFW iterations.
DEFAULT_HORIZON = 10


@dataclass
class ProxParams:
    mu: np.ndarray
    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("proximal weight c must be positive")


class WallClock:
    """Monotonic wall-clock time in seconds."""

    def now(self):
        return time.perf_counter()

    def charge(self, units):
        pass


class WorkClock:
    """Deterministic clock that advances by charged work units.

    Oracles report a nominal ``work`` per exact call; an approximate call
    costs ``len(cache) * size_t``.  One unit is counted as ``seconds_per_unit``
    simulated seconds, so budgets and traces stay in seconds.
    """

    def __init__(self, seconds_per_unit=1e-8):
        self.seconds_per_unit = seconds_per_unit
        self._units = 0.0

    def now(self):
        return self._units * self.seconds_per_unit

    def charge(self, units):
        self._units += units + 1.0


class _TermPlanes:
    __slots__ = ("planes", "costs", "stamps", "keys", "_stack")

    def __init__(self):
        self.planes = []
        self.costs = []
        self.stamps = []
        self.keys = {}
        self._stack = None

    def stack(self):
        if self._stack is None:
            self._stack = np.array(self.planes, dtype=np.int64)
        return self._stack

    def rebuild(self, keep):
        self.planes = [self.planes[j] for j in keep]
        self.costs = [self.costs[j] for j in keep]
        self.stamps = [self.stamps[j] for j in keep]
        self.keys = {p.tobytes(): j for j, p in enumerate(self.planes)}
        self._stack = None


class PlaneCache:
    """Per-term working sets of oracle vertices in compact form.

    Planes are deduplicated by the bytes of their compact labeling and carry
    the MP-BCFW iteration at which they were last returned or selected.
    """

    def __init__(self, num_terms, horizon=DEFAULT_HORIZON):
        self.horizon = horizon
        self._terms = [_TermPlanes() for _ in range(num_terms)]

    def __len__(self):
        return sum(len(tp.planes) for tp in self._terms)

    def size(self, t):
        return len(self._terms[t].planes)

    def planes(self, t):
        tp = self._terms[t]
        return list(zip(tp.planes, tp.costs, tp.stamps))

    def insert(self, t, s, cost, stamp):
        tp = self._terms[t]
        s = np.asarray(s, dtype=np.int64)
        key = s.tobytes()
        j = tp.keys.get(key)
        if j is None:
            tp.keys[key] = len(tp.planes)
            tp.planes.append(s)
            tp.costs.append(float(cost))
            tp.stamps.append(stamp)
            tp._stack = None
        else:
            tp.stamps[j] = max(tp.stamps[j], stamp)

    def approx_value(self, t, oracle, lam):
        """``h~_t(lam)``: the best cached plane value for ``lam``."""
        return self._best(t, oracle, lam)[1]

    def select(self, t, oracle, lam, stamp):
        """Return ``(s, cost)`` of the cached plane minimising ``<z, [lam 1]>``."""
        j, _ = self._best(t, oracle, lam)
        tp = self._terms[t]
        tp.stamps[j] = max(tp.stamps[j], stamp)
        return tp.planes[j], tp.costs[j]

    def _best(self, t, oracle, lam):
        tp = self._terms[t]
        if not tp.planes:
            raise EmptyCache(f"no cached planes for term {t}")
        values = np.asarray(tp.costs) + oracle.inner_products(lam, tp.stack())
        j = int(np.argmin(values))
        return j, float(values[j])

    def evict(self, iteration):
        """Drop planes unused during the last ``horizon`` iterations."""
        removed = 0
        for tp in self._terms:
            keep = [j for j, st in enumerate(tp.stamps) if iteration - st < self.horizon]
            if len(keep) != len(tp.planes):
                removed += len(tp.planes) - len(keep)
                tp.rebuild(keep)
        return removed


@dataclass
class PassStats:
    f_start: float
    f_current: float = np.nan
    elapsed: float = 0.0
    ratios: list = field(default_factory=list)
    n_approx_passes: int = 0
    # (kind, f before, f after) for every pass
    pass_log: list = field(default_factory=list)


def eval_prox_dual(y, p, decomp):
    """Closed-form value of the proximal dual objective at ``y``."""
    ys = y.y_star
    return float(
        0.5 * p.c * np.dot(ys, ys)
        + np.dot(ys, p.mu)
        + np.sum(y.y_circ)
        - np.sum(decomp.counts * y.nu**2) / (2.0 * p.c)
    )


def extract_lambda(y, p, decomp):
    """Multipliers maximising the proximal Lagrangian at ``y``."""
    return p.c * y.y_star + p.mu - y.nu[decomp.index]


def step_size(y_t, z_t, lam_t, c, counts_t):
    """Exact line-search step from ``y^t`` towards the vertex ``z^t``.

    ``y_t`` and ``z_t`` are ``(star, circ)`` pairs, ``counts_t`` holds
    ``|T_i|`` for the term's variables.  Moving ``y^t`` also moves ``nu``,
    so the curvature along the segment is ``c * sum (1 - 1/|T_i|) d_i^2``.
    """
    y_star, y_circ = y_t
    z_star, z_circ = z_t
    d = np.asarray(y_star, dtype=np.float64) - np.asarray(z_star, dtype=np.float64)
    num = float(np.dot(lam_t, d) + (y_circ - z_circ))
    curvature = c * float(np.dot(1.0 - 1.0 / np.asarray(counts_t, dtype=np.float64), d * d))
    if curvature <= 0.0:
        # linear along the segment with slope -num
        return 1.0 if num > 0.0 else 0.0
    return min(1.0, max(0.0, num / curvature))


def _update_term(y, p, decomp, t, lam_t, z_star, z_circ):
    sl = decomp.term_slice(t)
    idx = decomp.terms[t].index_map
    counts_t = decomp.slot_counts[sl]
    ys = y.y_star[sl]
    gamma = step_size((ys, y.y_circ[t]), (z_star, z_circ), lam_t, p.c, counts_t)
    if gamma == 0.0:
        return gamma
    new = ys + gamma * (z_star - ys)
    y.nu[idx] += (p.c / counts_t) * (new - ys)
    y.y_star[sl] = new
    y.y_circ[t] += gamma * (z_circ - y.y_circ[t])
    return gamma


def _term_lambda(y, p, decomp, t):
    sl = decomp.term_slice(t)
    return p.c * y.y_star[sl] + p.mu[sl] - y.nu[decomp.terms[t].index_map]


def bcfw_exact_pass(y, p, decomp, cache, rng, stamp, clock=None):
    """One BCFW pass in random term order calling the exact oracles.

    ``y`` is updated in place and returned; every oracle vertex is added to
    ``cache`` stamped with ``stamp``.
    """
    for t in rng.permutation(decomp.num_terms):
        oracle = decomp.terms[t].oracle
        lam_t = _term_lambda(y, p, decomp, t)
        s, cost = _call_oracle(oracle, lam_t, t)
        if clock is not None:
            clock.charge(oracle.work + oracle.arity)
        cache.insert(t, s, cost, stamp)
        _update_term(y, p, decomp, t, lam_t, oracle.decode(s), cost)
    return y


def bcfw_approx_pass(y, p, decomp, cache, rng, stamp, clock=None):
    """Like :func:`bcfw_exact_pass` but minimising over the cached planes."""
    for t in rng.permutation(decomp.num_terms):
        oracle = decomp.terms[t].oracle
        lam_t = _term_lambda(y, p, decomp, t)
        s, cost = cache.select(t, oracle, lam_t, stamp)
        if clock is not None:
            clock.charge(cache.size(t) * oracle.size + oracle.arity)
        _update_term(y, p, decomp, t, lam_t, oracle.decode(s), cost)
    return y


def ratio_dropped(previous, current):
    """Termination test of the approximate-pass loop (strict drop)."""
    return current < previous


def mp_bcfw_iteration(
    y, p, decomp, cache, rng, iteration, clock=None, max_approx_passes=1000
):
    """One MP-BCFW iteration: an exact pass, then approximate passes.

    Approximate passes continue while the decrease of the objective per unit
    of time since the start of the iteration does not drop.  Planes unused
    for ``cache.horizon`` iterations are evicted at the end.

    Returns ``(y, PassStats)``.
    """
    clock = clock if clock is not None else WallClock()
    f0 = eval_prox_dual(y, p, decomp)
    t0 = clock.now()
    stats = PassStats(f_start=f0)

    bcfw_exact_pass(y, p, decomp, cache, rng, iteration, clock)
    f = eval_prox_dual(y, p, decomp)
    stats.pass_log.append(("exact", f0, f))
    prev_ratio = (f0 - f) / max(clock.now() - t0, 1e-12)
    stats.ratios.append(prev_ratio)

    while stats.n_approx_passes < max_approx_passes:
        f_before = f
        bcfw_approx_pass(y, p, decomp, cache, rng, iteration, clock)
        f = eval_prox_dual(y, p, decomp)
        stats.n_approx_passes += 1
        stats.pass_log.append(("approx", f_before, f))
        ratio = (f0 - f) / max(clock.now() - t0, 1e-12)
        stats.ratios.append(ratio)
        if ratio_dropped(prev_ratio, ratio):
            break
        if f_before - f <= 1e-15 * (1.0 + abs(f)):
            break
        prev_ratio = ratio

    stats.f_current = f
    stats.elapsed = clock.now() - t0
    cache.evict(iteration)
    return y, stats
