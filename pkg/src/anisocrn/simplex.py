"""Dense two-phase simplex method with Bland's anti-cycling rule.

Only meant for the tiny programs arising from attainable-set geometry
(a handful of variables and constraints), where robustness matters more
than speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, UnboundedLPError


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    value: float
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]


def _run(T: np.ndarray, basis: list[int], allowed: np.ndarray, tol: float, max_iter: int) -> int:
    """Maximise with objective row ``T[-1]`` holding negated reduced costs."""
    m = T.shape[0] - 1
    for it in range(max_iter):
        cost = T[-1, :-1]
        entering = -1
        for j in np.flatnonzero(allowed):
            if cost[j] < -tol:
                entering = int(j)
                break
        if entering < 0:
            return it
        col = T[:m, entering]
        best_ratio = np.inf
        leaving = -1
        for i in range(m):
            if col[i] > tol:
                ratio = T[i, -1] / col[i]
                if ratio < best_ratio - tol or (
                    abs(ratio - best_ratio) <= tol and basis[i] < basis[leaving]
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving < 0:
            raise UnboundedLPError("linear program is unbounded")
        _pivot(T, leaving, entering)
        basis[leaving] = entering
    raise RuntimeError("simplex iteration limit reached")


def _standard_max(c, A, b, tol, max_iter) -> LPResult:
    """max c.x subject to A x <= b, x >= 0."""
    m, n = A.shape
    A = A.copy()
    b = b.copy()
    slack_sign = np.ones(m)
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    slack_sign[neg] = -1.0
    n_art = int(neg.sum())
    width = n + m + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.diag(slack_sign)
    T[:m, -1] = b
    basis = [0] * m
    art = 0
    for i in range(m):
        if neg[i]:
            T[i, n + m + art] = 1.0
            basis[i] = n + m + art
            art += 1
        else:
            basis[i] = n + i
    iters = 0
    allowed = np.ones(width, dtype=bool)
    if n_art:
        # phase one: maximise minus the sum of artificials
        T[-1, n + m:width] = 1.0
        for i in range(m):
            if basis[i] >= n + m:
                T[-1] -= T[i]
        iters += _run(T, basis, allowed, tol, max_iter)
        if T[-1, -1] < -tol * max(1.0, float(np.abs(b).max())):
            raise InfeasibleError("linear program is infeasible")
        # drive remaining (zero-level) artificials out of the basis
        for i in range(m):
            if basis[i] >= n + m:
                candidates = np.flatnonzero(np.abs(T[i, :n + m]) > tol)
                if candidates.size:
                    _pivot(T, i, int(candidates[0]))
                    basis[i] = int(candidates[0])
        allowed[n + m:] = False
        T[:, n + m:width] = 0.0
    T[-1, :] = 0.0
    T[-1, :n] = -c
    for i in range(m):
        if basis[i] < n and T[-1, basis[i]] != 0.0:
            T[-1] -= T[-1, basis[i]] * T[i]
    iters += _run(T, basis, allowed, tol, max_iter)
    x = np.zeros(width)
    for i in range(m):
        x[basis[i]] = T[i, -1]
    return LPResult(x=x[:n], value=float(T[-1, -1]), iterations=iters)


def linprog_max(c, A_ub, b_ub, free=None, *, tol: float = 1e-11, max_iter: int = 5000) -> LPResult:
    """Maximise ``c @ x`` subject to ``A_ub @ x <= b_ub``.

    Args:
        c: objective coefficients, shape (n,).
        A_ub: constraint matrix, shape (m, n).
        b_ub: right-hand side, shape (m,).
        free: boolean mask of unrestricted variables; the others are
            constrained to be non-negative. ``None`` means all non-negative.

    Raises:
        UnboundedLPError: the objective is unbounded above.
        InfeasibleError: no point satisfies the constraints.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A_ub, dtype=float))
    b = np.asarray(b_ub, dtype=float)
    n = c.size
    free = np.zeros(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    # split free variables x = x+ - x-
    cols = [A]
    obj = [c]
    neg_idx = np.flatnonzero(free)
    if neg_idx.size:
        cols.append(-A[:, neg_idx])
        obj.append(-c[neg_idx])
    res = _standard_max(np.concatenate(obj), np.hstack(cols), b, tol, max_iter)
    x = res.x[:n].copy()
    x[neg_idx] -= res.x[n:]
    return LPResult(x=x, value=res.value, iterations=res.iterations)
