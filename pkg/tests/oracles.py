"""Independent reference implementations used only by the tests.

These are written from the difference operators directly, in plain Python
loops, and share no code with the package kernels.
"""

from __future__ import annotations

import math

import numpy as np


def dense_tridiag(lower, diag, upper) -> np.ndarray:
    n = len(diag)
    A = np.zeros((n, n))
    for k in range(n):
        A[k, k] = diag[k]
        if k > 0:
            A[k, k - 1] = lower[k]
        if k < n - 1:
            A[k, k + 1] = upper[k]
    return A


def gauss_solve(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting on a dense copy."""
    A = np.array(A, dtype=float)
    x = np.array(rhs, dtype=float)
    n = x.size
    for c in range(n):
        p = c + int(np.argmax(np.abs(A[c:, c])))
        if p != c:
            A[[c, p]] = A[[p, c]]
            x[[c, p]] = x[[p, c]]
        for r in range(c + 1, n):
            m = A[r, c] / A[c, c]
            A[r, c:] -= m * A[c, c:]
            x[r] -= m * x[c]
    for r in range(n - 1, -1, -1):
        x[r] = (x[r] - A[r, r + 1:] @ x[r + 1:]) / A[r, r]
    return x


def lambert_root(N: float) -> float:
    """Root of L exp(L) = N by Newton from L = ln N."""
    L = math.log(N)
    for _ in range(100):
        step = (L * math.exp(L) - N) / (math.exp(L) * (1.0 + L))
        L -= step
        if abs(step) < 1e-15 * L:
            break
    return L


def hybrid_level_matrix(x, eps, dt, a, b, d, f, u_prev, g_lo, g_hi):
    """Dense (N-1)x(N-1) system of one implicit Euler level for the hybrid scheme.

    Built as dt * (operator) with the unknowns at the new level; the
    time difference is d (U - U_prev) / dt and midpoint rows average the
    reaction and time terms over the interval on the upwind side.
    """
    n = len(x) - 1
    A = np.zeros((n + 1, n + 1))  # full grid, boundary rows dropped at the end
    r = np.zeros(n + 1)
    for i in range(1, n):
        h0, h1 = x[i] - x[i - 1], x[i + 1] - x[i]
        hh = h0 + h1
        diff = {i - 1: 2 * eps / (hh * h0), i: -2 * eps / hh * (1 / h0 + 1 / h1), i + 1: 2 * eps / (hh * h1)}
        row = {k: dt * v for k, v in diff.items()}
        if abs(a[i] * h0) < 2 * eps:
            row[i - 1] += dt * (-a[i] / hh)
            row[i + 1] += dt * (a[i] / hh)
            row[i] += -dt * b[i] - d[i]
            r[i] = dt * f[i] - d[i] * u_prev[i]
        else:
            j = i + 1 if i <= n // 2 else i - 1
            am, bm, dm, fm = ((c[i] + c[j]) / 2 for c in (a, b, d, f))
            h = h1 if j > i else h0
            # a D U over the interval [i, j] (forward or backward)
            sgn = 1.0 if j > i else -1.0
            row[j] += dt * am * sgn / h
            row[i] -= dt * am * sgn / h
            for k in (i, j):
                row[k] += -0.5 * dt * bm - 0.5 * dm
            r[i] = dt * fm - dm * 0.5 * (u_prev[i] + u_prev[j])
        for k, v in row.items():
            A[i, k] += v
    r[1] -= A[1, 0] * g_lo
    r[n - 1] -= A[n - 1, n] * g_hi
    return A[1:n, 1:n], r[1:n]


def upwind_level_matrix(x, eps, dt, a, b, d, f, u_prev, g_lo, g_hi):
    n = len(x) - 1
    A = np.zeros((n + 1, n + 1))
    r = np.zeros(n + 1)
    for i in range(1, n):
        h0, h1 = x[i] - x[i - 1], x[i + 1] - x[i]
        hh = h0 + h1
        A[i, i - 1] = dt * 2 * eps / (hh * h0)
        A[i, i + 1] = dt * 2 * eps / (hh * h1)
        A[i, i] = -A[i, i - 1] - A[i, i + 1] - dt * b[i] - d[i]
        if a[i] >= 0:
            A[i, i + 1] += dt * a[i] / h1
            A[i, i] -= dt * a[i] / h1
        else:
            A[i, i] += dt * a[i] / h0
            A[i, i - 1] -= dt * a[i] / h0
        r[i] = dt * f[i] - d[i] * u_prev[i]
    r[1] -= A[1, 0] * g_lo
    r[n - 1] -= A[n - 1, n] * g_hi
    return A[1:n, 1:n], r[1:n]


def march(problem, x, eps, M, level_matrix):
    """Plain implicit Euler with dense solves; returns the (M+1, N+1) array of levels."""
    T = problem.t_final
    U = np.empty((M + 1, len(x)))
    U[0] = problem.g_init(np.asarray(x))
    for n in range(1, M + 1):
        t = T * n / M
        a, b, d, f = (np.broadcast_to(np.asarray(c(np.asarray(x), t), dtype=float), (len(x),))
                      for c in (problem.a, problem.b, problem.d, problem.f))
        gl = float(problem.g_left(np.array(t)))
        gr = float(problem.g_right(np.array(t)))
        A, r = level_matrix(x, eps, T / M, a, b, d, f, U[n - 1], gl, gr)
        U[n, 1:-1] = gauss_solve(A, r)
        U[n, 0], U[n, -1] = gl, gr
    return U
