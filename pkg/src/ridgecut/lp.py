"""Dense two-phase simplex for small standard-form LPs.

    minimize c @ x   subject to   A @ x = b,  x >= 0

Bland's rule keeps it cycle-free; problems here have a handful of rows and
at most a few thousand columns, so a full tableau is cheap.
"""
from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, Unbounded


@dataclass
class SimplexResult:
    x: np.ndarray
    value: float
    basis: np.ndarray
    reduced_costs: np.ndarray
    iterations: int

    def unique(self, tol=1e-12):
        """True when every nonbasic column has a strictly positive reduced cost,
        which makes the optimal vertex the only optimum."""
        nonbasic = np.setdiff1d(np.arange(len(self.x)), self.basis)
        return bool(np.all(self.reduced_costs[nonbasic] > tol))


def _pivot(tab, row, col):
    tab[row] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and tab[r, col] != 0.0:
            tab[r] -= tab[r, col] * tab[row]


def _run(tab, basis, n_cols, tol, max_iter):
    """Iterate on ``tab`` (last row = reduced costs, last column = rhs)."""
    it = 0
    while it < max_iter:
        cost_row = tab[-1, :n_cols]
        entering = np.nonzero(cost_row < -tol)[0]
        if len(entering) == 0:
            return it
        col = entering[0]
        column = tab[:-1, col]
        ok = column > tol
        if not ok.any():
            raise Unbounded(f"column {col} has no positive pivot")
        ratios = np.full(len(column), np.inf)
        ratios[ok] = tab[:-1, -1][ok] / column[ok]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + tol * max(1.0, abs(best)))[0]
        row = ties[np.argmin(basis[ties])]
        _pivot(tab, row, col)
        basis[row] = col
        it += 1
    raise RuntimeError("simplex iteration limit reached")


def simplex(c, a_eq, b_eq, tol=1e-12, max_iter=10_000):
    c = np.asarray(c, dtype=float)
    a = np.atleast_2d(np.asarray(a_eq, dtype=float)).copy()
    b = np.asarray(b_eq, dtype=float).copy()
    m, n = a.shape
    neg = b < 0
    a[neg] *= -1
    b[neg] *= -1

    # Phase I: artificials n..n+m-1 start in the basis.
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = a
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[-1, :n] = -a.sum(axis=0)
    tab[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    iters = _run(tab, basis, n + m, tol, max_iter)
    if -tab[-1, -1] > 1e-9 * max(1.0, np.abs(b).max()):
        raise Infeasible(f"phase I residual {-tab[-1, -1]:.3e}")

    # Drive leftover artificials out of the basis where a real column can replace them.
    for row in range(m):
        if basis[row] >= n:
            candidates = np.nonzero(np.abs(tab[row, :n]) > tol)[0]
            if len(candidates):
                _pivot(tab, row, candidates[0])
                basis[row] = candidates[0]
    keep = basis < n
    tab = np.vstack([tab[:m][keep], tab[-1:]])
    basis = basis[keep]
    tab = np.delete(tab, np.s_[n:n + m], axis=1)

    # Phase II.
    tab[-1] = 0.0
    tab[-1, :n] = c
    for row, col in enumerate(basis):
        tab[-1] -= c[col] * tab[row]
    iters += _run(tab, basis, n, tol, max_iter)

    x = np.zeros(n)
    x[basis] = tab[:-1, -1]
    return SimplexResult(x, float(c @ x), basis.copy(), tab[-1, :n].copy(), iters)
