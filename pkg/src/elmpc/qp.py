"""Small dense convex QP solver for MPC increments.

Solves::

    min 0.5 x'Hx + g'x
    s.t. lb <= x <= ub
         cum_lb <= cumsum(x) <= cum_ub      (optional)

A few sweeps of Hildreth's dual coordinate ascent give a starting guess. It
is projected onto the feasible set and finished by a primal active-set
method, which ends with the optimality conditions met to rounding and copes
with the linearly dependent rows that the increment box and the cumulative
bounds produce together.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InfeasibleQPError, InvalidInputError

OPTIMAL = "optimal"
INEXACT = "inexact"


@dataclass
class QpProblem:
    H: np.ndarray
    g: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    cum_lb: Optional[np.ndarray] = None
    cum_ub: Optional[np.ndarray] = None

    def __post_init__(self):
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        self.g = np.atleast_1d(np.asarray(self.g, dtype=float))
        n = self.g.size
        self.lb = np.broadcast_to(np.asarray(self.lb, dtype=float), (n,)).copy()
        self.ub = np.broadcast_to(np.asarray(self.ub, dtype=float), (n,)).copy()
        if self.H.shape != (n, n):
            raise InvalidInputError(f"H has shape {self.H.shape}, expected {(n, n)}")
        if (self.cum_lb is None) != (self.cum_ub is None):
            raise InvalidInputError("cum_lb and cum_ub must be given together")
        if self.cum_lb is not None:
            self.cum_lb = np.broadcast_to(np.asarray(self.cum_lb, dtype=float), (n,)).copy()
            self.cum_ub = np.broadcast_to(np.asarray(self.cum_ub, dtype=float), (n,)).copy()

    @property
    def n(self):
        return self.g.size

    def objective(self, x):
        return 0.5 * x @ self.H @ x + self.g @ x

    def inequalities(self):
        """One-sided form ``G x <= h`` with infinite rows dropped."""
        n = self.n
        eye = np.eye(n)
        rows = [eye, -eye]
        rhs = [self.ub, -self.lb]
        if self.cum_lb is not None:
            low = np.tril(np.ones((n, n)))
            rows += [low, -low]
            rhs += [self.cum_ub, -self.cum_lb]
        G = np.vstack(rows)
        h = np.concatenate(rhs)
        keep = np.isfinite(h)
        return G[keep], h[keep]

    def check_feasible(self):
        """Interval propagation over the cumulative sum; raises if empty."""
        if np.any(self.lb > self.ub):
            raise InfeasibleQPError("empty increment box")
        if self.cum_lb is None:
            return
        lo = hi = 0.0
        for k in range(self.n):
            lo = max(lo + self.lb[k], self.cum_lb[k])
            hi = min(hi + self.ub[k], self.cum_ub[k])
            if lo > hi:
                raise InfeasibleQPError(f"cumulative bounds unreachable at step {k}")


@dataclass
class QpSolution:
    x: np.ndarray
    status: str
    iterations: int
    kkt_residual: float
    multipliers: np.ndarray = field(repr=False)

    @property
    def converged(self):
        return self.status == OPTIMAL


def kkt_residual(H, g, G, h, x, lam):
    """Max of stationarity, primal/dual infeasibility and complementarity."""
    slack = G @ x - h
    stat = np.max(np.abs(H @ x + g + G.T @ lam)) if x.size else 0.0
    primal = max(0.0, float(np.max(slack))) if slack.size else 0.0
    dual = max(0.0, float(np.max(-lam))) if lam.size else 0.0
    comp = float(np.max(np.abs(lam * slack))) if lam.size else 0.0
    return max(float(stat), primal, dual, comp)


def _hildreth(P, d, lam, sweeps):
    """Projected coordinate ascent on the dual ``max -0.5 l'Pl + d'l, l >= 0``."""
    diag = np.diag(P)
    for _ in range(sweeps):
        for i in range(lam.size):
            w = lam[i] - (P[i] @ lam - d[i]) / diag[i]
            lam[i] = w if w > 0.0 else 0.0
    return lam


def _independent(G, rows, candidate):
    return np.linalg.matrix_rank(G[rows + [candidate]]) == len(rows) + 1


def _primal_active_set(H, g, G, h, x, max_iter):
    """Feasible-start primal active-set method.

    Returns ``(x, multipliers, iterations, finished)``. Every iterate stays
    feasible, so an early stop still yields a usable point. A blocking row
    always has a nonzero component along the step, hence is independent of
    the working set; duplicate and dependent rows never enter together.
    """
    n = g.size
    work = []
    for i in np.flatnonzero(np.abs(G @ x - h) <= 1e-12 * (1.0 + np.abs(h))):
        if _independent(G, work, int(i)):
            work.append(int(i))
    lam = np.zeros(h.size)
    for it in range(1, max_iter + 1):
        k = len(work)
        kkt = np.zeros((n + k, n + k))
        kkt[:n, :n] = H
        if k:
            kkt[:n, n:] = G[work].T
            kkt[n:, :n] = G[work]
        sol = np.linalg.solve(kkt, np.concatenate([-(H @ x + g), np.zeros(k)]))
        p, mu = sol[:n], sol[n:]
        if np.max(np.abs(p)) <= 1e-13 * (1.0 + np.max(np.abs(x))):
            if k == 0 or mu.min() >= 0.0:
                lam[work] = mu
                return x, lam, it, True
            work.pop(int(np.argmin(mu)))
            continue
        Gp = G @ p
        alpha, block = 1.0, -1
        for i in np.flatnonzero(Gp > 1e-14 * np.max(np.abs(p))):
            if i in work:
                continue
            reach = max(h[i] - G[i] @ x, 0.0) / Gp[i]
            if reach < alpha:
                alpha, block = reach, int(i)
        x = x + alpha * p
        if block >= 0:
            work.append(block)
    return x, lam, max_iter, False


def solve_qp(problem, max_iter=500, tol=1e-8, dual_sweeps=10):
    """Solve a strictly convex box/cumulative-bound QP.

    Returns a :class:`QpSolution`. If the active-set budget runs out, or the
    final KKT residual exceeds ``tol``, the (feasible) last iterate is
    returned with status ``"inexact"``.
    """
    problem.check_feasible()
    H, g = problem.H, problem.g
    try:
        chol = cho_factor(H)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError("H must be positive definite") from exc
    G, h = problem.inequalities()
    x_free = -cho_solve(chol, g)
    lam = np.zeros(h.size)
    if h.size == 0 or np.all(G @ x_free <= h):
        return QpSolution(x_free, OPTIMAL, 0, kkt_residual(H, g, G, h, x_free, lam), lam)

    # a few dual sweeps give a cheap guess that the exact phase then finishes
    HinvGt = cho_solve(chol, G.T)
    lam = _hildreth(G @ HinvGt, h - G @ x_free, lam, dual_sweeps)
    x0 = _restore_feasible(problem, x_free - HinvGt @ lam)
    x, lam, it, finished = _primal_active_set(H, g, G, h, x0, max_iter)
    # active rows are hit only up to rounding; make the box exact
    x = np.clip(x, problem.lb, problem.ub)
    res = kkt_residual(H, g, G, h, x, lam)
    status = OPTIMAL if finished and res <= tol else INEXACT
    return QpSolution(x, status, it, res, lam)


def _restore_feasible(problem, x):
    """Clip an approximate solution back into the feasible set."""
    x = np.clip(x, problem.lb, problem.ub)
    if problem.cum_lb is None:
        return x
    n = problem.n
    # backward pass: feasible range for each partial sum given the future
    lo_reach = np.empty(n)
    hi_reach = np.empty(n)
    lo = hi = 0.0
    for k in range(n):
        lo = max(lo + problem.lb[k], problem.cum_lb[k])
        hi = min(hi + problem.ub[k], problem.cum_ub[k])
        lo_reach[k], hi_reach[k] = lo, hi
    lo_next, hi_next = -np.inf, np.inf
    lo_ok = np.empty(n)
    hi_ok = np.empty(n)
    for k in range(n - 1, -1, -1):
        lo_ok[k] = max(lo_reach[k], lo_next)
        hi_ok[k] = min(hi_reach[k], hi_next)
        lo_next = lo_ok[k] - problem.ub[k]
        hi_next = hi_ok[k] - problem.lb[k]
    out = np.empty(n)
    c = 0.0
    for k in range(n):
        lo_k = max(lo_ok[k], c + problem.lb[k])
        hi_k = min(hi_ok[k], c + problem.ub[k])
        c_new = min(max(c + x[k], lo_k), hi_k)
        out[k] = c_new - c
        c = c_new
    return out
