"""Projected supergradient ascent with a Polyak step (the SA baseline)."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from . import _validation as val
from .exceptions import ZeroGradient
from .fw_core import WallClock, WorkClock
from .model import eval_dual, project_to_lambda_space
from .trace import TraceRecord

__all__ = [
    "PolyakState",
    "SubgradientAscent",
    "majority_labeling",
    "polyak_step",
    "primal_energy",
    "supergradient",
]


@dataclass
class PolyakState:
    lam: np.ndarray
    target: float
    h_best: float
    h_current: float = -np.inf
    shrink: float = 0.5


def _indicators(decomp, argmins):
    return np.concatenate(
        [term.oracle.decode(s) for term, (s, _) in zip(decomp.terms, argmins)]
    )


def supergradient(decomp, lam=None, argmins=None):
    """Projected supergradient of ``h`` at ``lam``.

    Pass ``argmins`` from a previous :func:`~fwmap.model.eval_dual` call to
    skip the oracle sweep.
    """
    if argmins is None:
        argmins = eval_dual(decomp, lam)[1]
    return project_to_lambda_space(decomp, _indicators(decomp, argmins))


def polyak_step(decomp, state, g):
    """Step ``lam += (U - h) / |g|^2 * g`` and project back."""
    gg = float(np.dot(g, g))
    if gg == 0.0:
        raise ZeroGradient("projected supergradient is zero; multipliers are optimal")
    alpha = (state.target - state.h_current) / gg
    state.lam = project_to_lambda_space(decomp, state.lam + alpha * g)
    return state.lam


def majority_labeling(decomp, argmins):
    """Per-variable majority vote of the term argmins (ties go to 0)."""
    votes = np.bincount(decomp.index, weights=_indicators(decomp, argmins), minlength=decomp.num_vars)
    return (2 * votes > decomp.counts).astype(np.float64)


def primal_energy(decomp, x):
    """``f(x)``, ``inf`` when infeasible, ``None`` if an oracle cannot evaluate."""
    total = 0.0
    for term in decomp.terms:
        try:
            value = term.oracle.evaluate(x[term.index_map])
        except NotImplementedError:
            return None
        if not np.isfinite(value):
            return np.inf
        total += value
    return total


class SubgradientAscent(BaseEstimator):
    """Supergradient ascent on the dual with an adaptive Polyak target.

    The target is ``U = min(best primal energy, h_best + delta)``.  ``delta``
    starts at the initial primal-dual gap and is multiplied by ``shrink``
    whenever the best bound has not improved by more than ``stall_tol`` for
    ``stall_steps`` consecutive steps.

    Parameters
    ----------
    max_iter : int, default=10000
    budget_s : float or None, default=None
    stall_steps : int, default=50
    stall_tol : float, default=1e-9
    shrink : float, default=0.5
    clock : {"wall", "work"}, default="wall"

    Attributes
    ----------
    lower_bound_ : float
    multipliers_ : ndarray
    upper_bound_ : float
        Best primal energy from majority-vote labelings (``inf`` if none).
    trace_ : list of TraceRecord
    n_iter_ : int
    """

    def __init__(
        self,
        max_iter=10000,
        budget_s=None,
        stall_steps=50,
        stall_tol=1e-9,
        shrink=0.5,
        clock="wall",
    ):
        self.max_iter = max_iter
        self.budget_s = budget_s
        self.stall_steps = stall_steps
        self.stall_tol = stall_tol
        self.shrink = shrink
        self.clock = clock

    def fit(self, decomp, y=None):
        val.check_scalar(self.max_iter, "max_iter", 0)
        val.check_scalar(self.budget_s, "budget_s", 0, include_min=False, allow_none=True)
        val.check_choice(self.clock, "clock", {"wall", "work"})
        decomp = val.check_decomposition(decomp)
        clock = WorkClock() if self.clock == "work" else WallClock()
        start = clock.now()

        lam = decomp.zeros()
        h, argmins = eval_dual(decomp, lam)
        upper = np.inf
        delta = max(1.0, abs(h))
        state = PolyakState(lam=lam, target=h + delta, h_best=h, h_current=h, shrink=self.shrink)
        lam_best = lam.copy()
        stall = 0
        self.trace_ = []
        it = 0
        while True:
            for term in decomp.terms:
                clock.charge(term.oracle.work)
            x_energy = primal_energy(decomp, majority_labeling(decomp, argmins))
            if x_energy is not None and x_energy < upper:
                if not np.isfinite(upper):
                    delta = max(x_energy - state.h_best, 0.0)
                upper = x_energy
            self.trace_.append(
                TraceRecord(clock.now() - start, it, h, state.h_best, np.nan, np.nan, np.nan, "sa")
            )
            if np.isfinite(upper) and upper - state.h_best <= 1e-12 * (1.0 + abs(upper)):
                break  # primal-dual gap closed
            if it >= self.max_iter:
                break
            if self.budget_s is not None and clock.now() - start >= self.budget_s:
                break

            state.target = min(upper, state.h_best + delta)
            g = supergradient(decomp, argmins=argmins)
            try:
                polyak_step(decomp, state, g)
            except ZeroGradient:
                break
            it += 1
            h, argmins = eval_dual(decomp, state.lam)
            state.h_current = h
            if h > state.h_best + self.stall_tol:
                stall = 0
            else:
                stall += 1
            if h > state.h_best:
                state.h_best = h
                lam_best = state.lam.copy()
            if stall >= self.stall_steps:
                delta *= self.shrink
                stall = 0

        self.lower_bound_ = state.h_best
        self.multipliers_ = lam_best
        self.upper_bound_ = upper
        self.n_iter_ = it
        return self
