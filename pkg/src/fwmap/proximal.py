"""Proximal bundle outer loop around MP-BCFW, and duality-gap diagnostics."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator

from . import _validation as val
from .fw_core import (
    DEFAULT_HORIZON,
    PlaneCache,
    ProxParams,
    WallClock,
    WorkClock,
    eval_prox_dual,
    extract_lambda,
    mp_bcfw_iteration,
)
from .model import (
    PrimalIterate,
    compute_nu,
    eval_dual,
    project_to_lambda_space,
)
from .trace import TraceRecord

__all__ = [
    "FWMAP",
    "GapReport",
    "SolveResult",
    "compute_gap",
    "default_prox_weight",
    "gap_bound",
    "l1inf_norm",
    "prox_objective",
    "solve",
]


def default_prox_weight(num_terms):
    """Proximal weight ``1500000 / (|T| + 22)^2``."""
    if num_terms < 1:
        raise ValueError("need at least one term")
    return 1500000.0 / (num_terms + 22) ** 2


@dataclass(frozen=True)
class GapReport:
    A: float
    B: float


def compute_gap(decomp, y, lam, h_lam):
    """Gap quantities for the pair ``(y, lam)`` given ``h_lam = h(lam)``.

    ``A`` is the slack of ``y`` against the oracle hulls at ``lam`` and ``B``
    the total disagreement of the terms on shared coordinates.
    """
    a = float(np.dot(y.y_star, lam) + np.sum(y.y_circ) - h_lam)
    hi = np.full(decomp.num_vars, -np.inf)
    lo = np.full(decomp.num_vars, np.inf)
    np.maximum.at(hi, decomp.index, y.y_star)
    np.minimum.at(lo, decomp.index, y.y_star)
    return GapReport(A=a, B=float(np.sum(hi - lo)))


def l1inf_norm(decomp, delta):
    """``max_i sum_{t in T_i} |delta^t_i|``."""
    return float(np.max(np.bincount(decomp.index, weights=np.abs(delta), minlength=decomp.num_vars)))


def gap_bound(decomp, report, lam, lam_ref):
    """Upper bound on ``h(lam_ref) - h(lam)`` from a gap report at ``lam``."""
    return report.A + report.B * l1inf_norm(decomp, lam_ref - lam)


def prox_objective(decomp, lam, p, h_lam=None):
    """``h(lam) - |lam - mu|^2 / (2c)``."""
    if h_lam is None:
        h_lam = eval_dual(decomp, lam)[0]
    diff = lam - p.mu
    return h_lam - np.dot(diff, diff) / (2.0 * p.c)


class SolveResult(NamedTuple):
    h_best: float
    lam_best: np.ndarray
    gap_trace: list
    time_trace: list
    solver: "FWMAP"


class FWMAP(BaseEstimator):
    """Maximise the Lagrangean dual with a Frank-Wolfe proximal bundle method.

    Parameters
    ----------
    prox_weight : float or None, default=None
        Proximal weight ``c``; ``None`` picks ``1500000 / (|T| + 22)^2``.
    budget_s : float, default=600.0
        Time budget in seconds (of the selected clock).
    max_iter : int or None, default=None
        Cap on MP-BCFW iterations.
    seed : int, default=0
        Seed of the term-order generator.
    init_vertex : {"min", "max"}, default="min"
        Start every ``y^t`` at the oracle argmin for zero multipliers, or at
        the maximum-cost vertex.
    eps_a, eps_b : float or None, default=None
        Stop once both gap quantities fall below these thresholds.
    eval_every : int, default=5
        Evaluate ``h`` every this many MP-BCFW iterations.
    center_every : int, default=10
        Move the proximal center to the best multipliers this often.
    horizon : int, default=10
        Plane eviction horizon in iterations.
    clock : {"wall", "work"}, default="wall"
        ``"work"`` uses a deterministic work-count clock so that runs are
        reproducible bit for bit.
    keep_history : bool, default=False
        Keep ``(y, lam, h, gap)`` of every evaluation in ``history_``.
    record_passes : bool, default=False
        Keep per-pass objective values in ``pass_log_``.
    debug : bool, default=False
        Check the incremental ``nu`` against a recompute before every
        evaluation.

    Attributes
    ----------
    lower_bound_ : float
        Best dual value found.
    multipliers_ : ndarray
        Multipliers attaining ``lower_bound_``.
    primal_ : PrimalIterate
        Final Frank-Wolfe iterate.
    gap_ : GapReport
        Gap quantities at the last evaluation.
    trace_ : list of TraceRecord
    n_iter_ : int
    prox_weight_ : float
    converged_ : bool
        True when the gap thresholds were met.
    """

    def __init__(
        self,
        prox_weight=None,
        budget_s=600.0,
        max_iter=None,
        seed=0,
        init_vertex="min",
        eps_a=None,
        eps_b=None,
        eval_every=5,
        center_every=10,
        horizon=DEFAULT_HORIZON,
        clock="wall",
        keep_history=False,
        record_passes=False,
        debug=False,
    ):
        self.prox_weight = prox_weight
        self.budget_s = budget_s
        self.max_iter = max_iter
        self.seed = seed
        self.init_vertex = init_vertex
        self.eps_a = eps_a
        self.eps_b = eps_b
        self.eval_every = eval_every
        self.center_every = center_every
        self.horizon = horizon
        self.clock = clock
        self.keep_history = keep_history
        self.record_passes = record_passes
        self.debug = debug

    def _check_params(self):
        val.check_scalar(self.prox_weight, "prox_weight", 0, include_min=False, allow_none=True)
        val.check_scalar(self.budget_s, "budget_s", 0, include_min=False)
        val.check_scalar(self.max_iter, "max_iter", 0, allow_none=True)
        val.check_choice(self.init_vertex, "init_vertex", {"min", "max"})
        val.check_choice(self.clock, "clock", {"wall", "work"})
        val.check_scalar(self.eval_every, "eval_every", 1)
        val.check_scalar(self.center_every, "center_every", 1)
        val.check_scalar(self.horizon, "horizon", 1)

    def fit(self, decomp, y=None):
        """Run the solver on ``decomp``; ``y`` is ignored."""
        self._check_params()
        decomp = val.check_decomposition(decomp)
        clock = WorkClock() if self.clock == "work" else WallClock()
        start = clock.now()
        rng = np.random.default_rng(self.seed)

        c = self.prox_weight if self.prox_weight is not None else default_prox_weight(decomp.num_terms)
        p = ProxParams(mu=decomp.zeros(), c=float(c))
        cache = PlaneCache(decomp.num_terms, horizon=self.horizon)

        lam0 = decomp.zeros()
        h0, argmins = eval_dual(decomp, lam0)
        for t, term in enumerate(decomp.terms):
            clock.charge(term.oracle.work)
        if self.init_vertex == "min":
            seeds = argmins
        else:
            seeds = [_max_vertex(term.oracle, t) for t, term in enumerate(decomp.terms)]
        for t, (s, cost) in enumerate(seeds):
            cache.insert(t, s, cost, 0)
        y = PrimalIterate.from_vertices(decomp, seeds, p.mu, p.c)

        h_best, lam_best = h0, lam0.copy()
        gap = compute_gap(decomp, y, lam0, h0)
        self.trace_ = []
        self.history_ = []
        self.pass_log_ = []
        self._record(clock.now() - start, 0, h0, h_best, gap, eval_prox_dual(y, p, decomp))
        if self.keep_history:
            self.history_.append((y.copy(), lam0.copy(), h0, gap))

        self.converged_ = self._gap_met(gap)
        it = 0
        while not self.converged_:
            if clock.now() - start >= self.budget_s:
                break
            if self.max_iter is not None and it >= self.max_iter:
                break
            it += 1
            _, stats = mp_bcfw_iteration(y, p, decomp, cache, rng, it, clock)
            if self.record_passes:
                self.pass_log_.extend(stats.pass_log)
            if it % self.eval_every:
                continue

            if self.debug:
                drift = y.nu_drift(decomp, p.mu, p.c)
                assert drift <= 1e-8, f"nu drifted by {drift:.3g}"
            y.nu = compute_nu(decomp, y.y_star, p.mu, p.c)
            lam = project_to_lambda_space(decomp, extract_lambda(y, p, decomp))
            h, argmins = eval_dual(decomp, lam)
            for term in decomp.terms:
                clock.charge(term.oracle.work)
            if h > h_best:
                h_best, lam_best = h, lam.copy()
                for t, (s, cost) in enumerate(argmins):
                    cache.insert(t, s, cost, it)
            gap = compute_gap(decomp, y, lam, h)
            self._record(clock.now() - start, it, h, h_best, gap, eval_prox_dual(y, p, decomp))
            if self.keep_history:
                self.history_.append((y.copy(), lam.copy(), h, gap))
            self.converged_ = self._gap_met(gap)
            if not self.converged_ and it % self.center_every == 0:
                p.mu = lam_best.copy()
                y.nu = compute_nu(decomp, y.y_star, p.mu, p.c)

        self.lower_bound_ = h_best
        self.multipliers_ = lam_best
        self.primal_ = y
        self.center_ = p.mu
        self.gap_ = gap
        self.n_iter_ = it
        self.prox_weight_ = p.c
        return self

    def _gap_met(self, gap):
        if self.eps_a is None and self.eps_b is None:
            return False
        ok_a = self.eps_a is None or gap.A <= self.eps_a
        ok_b = self.eps_b is None or gap.B <= self.eps_b
        return ok_a and ok_b

    def _record(self, t, it, h, h_best, gap, f_prox):
        self.trace_.append(TraceRecord(t, it, h, h_best, gap.A, gap.B, f_prox, "fwmap"))


def _max_vertex(oracle, t):
    try:
        s, cost = oracle.solve_max()
    except NotImplementedError:
        raise ValueError(
            f"oracle of term {t} ({type(oracle).__name__}) cannot produce a maximum vertex; "
            "use init_vertex='min'"
        ) from None
    return np.asarray(s, dtype=np.int64), float(cost)


def solve(decomp, **opts):
    """Functional wrapper around :class:`FWMAP`."""
    est = FWMAP(**opts).fit(decomp)
    gaps = [(r.A_gap, r.B_gap) for r in est.trace_]
    times = [r.wall_time_s for r in est.trace_]
    return SolveResult(est.lower_bound_, est.multipliers_, gaps, times, est)
