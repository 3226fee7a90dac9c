"""Per-level tridiagonal assembly for the hybrid and upwind schemes, and the Thomas solver.

Rows follow the rearranged form r^- U_{i-1} + r^0 U_i + r^+ U_{i+1} = rhs, i.e. the
difference operator multiplied through by dt, so r^0 < 0 and r^+- > 0 in the
monotone case. Dirichlet values are moved to the right-hand side; only the
N-1 interior unknowns remain.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .mesh import SpatialMesh
from .problem import TurningPointProblem, _boundary_eval


class SchemeTag(enum.IntEnum):
    CENTRAL = 0
    MIDPOINT_PLUS = 1
    MIDPOINT_MINUS = 2
    UPWIND_PLUS = 3
    UPWIND_MINUS = 4


# scheme families understood by the kernels
HYBRID = 0
UPWIND = 1
CENTRAL = 2

PIVOT_TINY = 1e-300


class AssemblyError(ValueError):
    """A coefficient evaluated to a non-finite value."""


class PivotError(ArithmeticError):
    def __init__(self, row: int, message: str | None = None):
        self.row = row
        super().__init__(message or f"zero pivot in tridiagonal elimination at row {row}")


@dataclass(frozen=True, eq=False)
class TridiagonalSystem:
    """One time level. Entry k of each vector belongs to interior node i = k + 1."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray
    scheme_tag: np.ndarray

    @property
    def size(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        n = self.size
        A = np.diag(self.diag)
        if n > 1:
            A += np.diag(self.lower[1:], -1) + np.diag(self.upper[:-1], 1)
        return A

    def to_csv(self, path) -> None:
        lines = ["i,lower,diag,upper,rhs,tag"]
        for k in range(self.size):
            lines.append(
                f"{k + 1},{float(self.lower[k])!r},{float(self.diag[k])!r},{float(self.upper[k])!r},"
                f"{float(self.rhs[k])!r},"
                f"{SchemeTag(int(self.scheme_tag[k])).name}"
            )
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True, eq=False)
class NodeClassification:
    in_I: np.ndarray  # entry k <-> node i = k + 1


# ---------------------------------------------------------------- kernels


@njit(cache=True, nogil=True)
def _assemble_level(x, eps, dt, family, a, b, d, f, u_prev, g_lo, g_hi, lower, diag, upper, rhs, tags):
    _assemble_rows(x, eps, dt, family, a, b, d, f, u_prev, lower, diag, upper, rhs, tags)
    n = x.shape[0] - 1
    rhs[0] -= lower[0] * g_lo
    lower[0] = 0.0
    rhs[n - 2] -= upper[n - 2] * g_hi
    upper[n - 2] = 0.0


@njit(cache=True, nogil=True)
def _assemble_rows(x, eps, dt, family, a, b, d, f, u_prev, lower, diag, upper, rhs, tags):
    # boundary couplings are left in lower[0] and upper[-1]
    n = x.shape[0] - 1
    half = n // 2
    two_eps = 2.0 * eps
    for i in range(1, n):
        k = i - 1
        h0 = x[i] - x[i - 1]
        h1 = x[i + 1] - x[i]
        hh = h0 + h1
        cm = two_eps * dt / (hh * h0)
        cp = two_eps * dt / (hh * h1)
        ai = a[i]
        if family == CENTRAL or (family == HYBRID and abs(ai * h0) < two_eps):
            lower[k] = cm - ai * dt / hh
            upper[k] = cp + ai * dt / hh
            diag[k] = -cm - cp - b[i] * dt - d[i]
            rhs[k] = dt * f[i] - d[i] * u_prev[i]
            tags[k] = 0
        elif family == HYBRID and i <= half:
            am = 0.5 * (a[i] + a[i + 1])
            bm = 0.5 * (b[i] + b[i + 1])
            dm = 0.5 * (d[i] + d[i + 1])
            fm = 0.5 * (f[i] + f[i + 1])
            lower[k] = cm
            upper[k] = cp + am * dt / h1 - 0.5 * dm - 0.5 * dt * bm
            diag[k] = -cm - cp - am * dt / h1 - 0.5 * dm - 0.5 * dt * bm
            rhs[k] = dt * fm - dm * (0.5 * (u_prev[i] + u_prev[i + 1]))
            tags[k] = 1
        elif family == HYBRID:
            am = 0.5 * (a[i] + a[i - 1])
            bm = 0.5 * (b[i] + b[i - 1])
            dm = 0.5 * (d[i] + d[i - 1])
            fm = 0.5 * (f[i] + f[i - 1])
            upper[k] = cp
            lower[k] = cm - am * dt / h0 - 0.5 * dm - 0.5 * dt * bm
            diag[k] = -cm - cp + am * dt / h0 - 0.5 * dm - 0.5 * dt * bm
            rhs[k] = dt * fm - dm * (0.5 * (u_prev[i] + u_prev[i - 1]))
            tags[k] = 2
        else:
            ap = ai if ai > 0.0 else 0.0
            an = ai if ai < 0.0 else 0.0
            lower[k] = cm - an * dt / h0
            upper[k] = cp + ap * dt / h1
            diag[k] = -cm - cp - ap * dt / h1 + an * dt / h0 - b[i] * dt - d[i]
            rhs[k] = dt * f[i] - d[i] * u_prev[i]
            tags[k] = 3 if ai >= 0.0 else 4


@njit(cache=True, nogil=True)
def _rhs_level(x, dt, tags, f, d, u_prev, g_lo, g_hi, lower_b, upper_b, rhs):
    """Right-hand side only, for a matrix that is reused across levels.

    Mirrors the rhs lines of ``_assemble_level`` operation for operation, so a
    factored solve gives bit-identical levels. ``lower_b``/``upper_b`` are the
    unfolded coupling coefficients of the first and last interior rows.
    """
    n = x.shape[0] - 1
    for i in range(1, n):
        k = i - 1
        tg = tags[k]
        if tg == 1:
            fm = 0.5 * (f[i] + f[i + 1])
            dm = 0.5 * (d[i] + d[i + 1])
            rhs[k] = dt * fm - dm * (0.5 * (u_prev[i] + u_prev[i + 1]))
        elif tg == 2:
            fm = 0.5 * (f[i] + f[i - 1])
            dm = 0.5 * (d[i] + d[i - 1])
            rhs[k] = dt * fm - dm * (0.5 * (u_prev[i] + u_prev[i - 1]))
        else:
            rhs[k] = dt * f[i] - d[i] * u_prev[i]
    rhs[0] -= lower_b * g_lo
    rhs[n - 2] -= upper_b * g_hi


@njit(cache=True, nogil=True)
def _factor(lower, diag, upper, work, pivots):
    """Forward-elimination factors of ``_thomas``. Returns the failing row or -1."""
    m = diag.shape[0]
    piv = diag[0]
    if abs(piv) < PIVOT_TINY:
        return 0
    pivots[0] = piv
    work[0] = upper[0] / piv
    for j in range(1, m):
        piv = diag[j] - lower[j] * work[j - 1]
        if abs(piv) < PIVOT_TINY:
            return j
        pivots[j] = piv
        work[j] = upper[j] / piv
    return -1


@njit(cache=True, nogil=True)
def _solve_factored(lower, pivots, work, rhs, out):
    m = pivots.shape[0]
    out[0] = rhs[0] / pivots[0]
    for j in range(1, m):
        out[j] = (rhs[j] - lower[j] * out[j - 1]) / pivots[j]
    for j in range(m - 2, -1, -1):
        out[j] -= work[j] * out[j + 1]


@njit(cache=True, nogil=True)
def _thomas(lower, diag, upper, rhs, out, work):
    """Forward elimination / back substitution. Returns the failing row or -1."""
    m = diag.shape[0]
    piv = diag[0]
    if abs(piv) < PIVOT_TINY:
        return 0
    work[0] = upper[0] / piv
    out[0] = rhs[0] / piv
    for j in range(1, m):
        piv = diag[j] - lower[j] * work[j - 1]
        if abs(piv) < PIVOT_TINY:
            return j
        work[j] = upper[j] / piv
        out[j] = (rhs[j] - lower[j] * out[j - 1]) / piv
    for j in range(m - 2, -1, -1):
        out[j] -= work[j] * out[j + 1]
    return -1


@njit(cache=True, nogil=True)
def _m_matrix_violation(lower, diag, upper):
    # rows are negated first: the assembled r^0 is negative, r^+- positive
    m = diag.shape[0]
    for j in range(m):
        dj = -diag[j]
        lj = -lower[j]
        uj = -upper[j]
        if not (dj > 0.0 and lj <= 0.0 and uj <= 0.0 and abs(dj) > abs(lj) + abs(uj)):
            return j
    return -1


# ---------------------------------------------------------------- public API


def classify_nodes(problem: TurningPointProblem, mesh: SpatialMesh, eps: float, t_n: float) -> NodeClassification:
    """Nodes where central differencing is monotone: |a(x_i, t_n)| h_i < 2 eps."""
    x = mesh.nodes
    a = problem.coefficients(x, t_n)[0][0]
    h = np.diff(x)
    return NodeClassification(np.abs(a[1:-1] * h[:-1]) < 2.0 * eps)


def _assemble(problem, mesh, eps, dt, U_prev, t_n, family) -> TridiagonalSystem:
    x = mesh.nodes
    U_prev = np.asarray(U_prev, dtype=float)
    if U_prev.shape != x.shape:
        raise ValueError(f"U_prev has shape {U_prev.shape}, expected {x.shape}")
    if x.size < 3:
        raise ValueError("need at least one interior node")
    a, b, d, f = (c[0] for c in problem.coefficients(x, t_n))
    for arr, name in ((a, "a"), (b, "b"), (d, "d"), (f, "f")):
        bad = ~np.isfinite(arr)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise AssemblyError(f"coefficient {name} is not finite at node i={i} (x={x[i]:.6g}), t_n={t_n:.6g}")
    g_lo = float(_boundary_eval(problem.g_left, t_n)[0])
    g_hi = float(_boundary_eval(problem.g_right, t_n)[0])
    if not (np.isfinite(g_lo) and np.isfinite(g_hi)):
        raise AssemblyError(f"boundary data is not finite at t_n={t_n:.6g}")
    m = x.size - 2
    lower, diag, upper, rhs = (np.empty(m) for _ in range(4))
    tags = np.empty(m, dtype=np.int8)
    _assemble_level(x, float(eps), float(dt), family, a, b, d, f, U_prev, g_lo, g_hi,
                    lower, diag, upper, rhs, tags)
    return TridiagonalSystem(lower, diag, upper, rhs, tags)


def assemble_hybrid(problem, mesh, eps, dt, U_prev, t_n) -> TridiagonalSystem:
    """Central rows where |a_i h_i| < 2 eps, midpoint-upwind rows elsewhere.

    Midpoint rows average a, b, d, f and the previous level over (i, i+1)
    left of the turning point and over (i-1, i) right of it.
    """
    return _assemble(problem, mesh, eps, dt, U_prev, t_n, HYBRID)


def assemble_upwind(problem, mesh, eps, dt, U_prev, t_n) -> TridiagonalSystem:
    """First-order upwind: eps d2U + a^+ D+U + a^- D-U - d Dt-U - b U = f."""
    return _assemble(problem, mesh, eps, dt, U_prev, t_n, UPWIND)


def assemble_central(problem, mesh, eps, dt, U_prev, t_n) -> TridiagonalSystem:
    """Central differences at every node (no stability switch)."""
    return _assemble(problem, mesh, eps, dt, U_prev, t_n, CENTRAL)


def thomas_solve(system: TridiagonalSystem) -> np.ndarray:
    m = system.size
    for name in ("lower", "upper", "rhs"):
        if getattr(system, name).shape != (m,):
            raise ValueError(f"{name} has shape {getattr(system, name).shape}, expected ({m},)")
    out = np.empty(m)
    work = np.empty(m)
    row = _thomas(system.lower, system.diag, system.upper, system.rhs, out, work)
    if row >= 0:
        raise PivotError(row + 1)
    return out


def is_m_matrix(system: TridiagonalSystem) -> tuple[bool, int | None]:
    """Sign pattern plus strict row dominance after negation; returns (ok, first bad node index)."""
    j = _m_matrix_violation(system.lower, system.diag, system.upper)
    return (True, None) if j < 0 else (False, int(j) + 1)
