"""Implicit Euler time marching on a fixed spatial mesh."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from numba import njit

from .discretization import (
    HYBRID,
    UPWIND,
    AssemblyError,
    PivotError,
    _assemble_level,
    _assemble_rows,
    _factor,
    _m_matrix_violation,
    _rhs_level,
    _solve_factored,
    _thomas,
)
from .mesh import (
    LStrategy,
    SpatialMesh,
    TimeMesh,
    generalized_shishkin,
    standard_shishkin,
    uniform_mesh,
)
from .problem import TurningPointProblem, _boundary_eval

# above this many time steps a SolutionGrid keeps only a strided subset of levels
MAX_STORED_LEVELS = 4096


class Scheme(str, enum.Enum):
    HYBRID_GSHISHKIN = "hybrid-gshishkin"
    UPWIND_UNIFORM = "upwind-uniform"
    UPWIND_SHISHKIN = "upwind-shishkin"

    @property
    def family(self) -> int:
        return HYBRID if self is Scheme.HYBRID_GSHISHKIN else UPWIND

    @property
    def needs_shishkin(self) -> bool:
        return self is not Scheme.UPWIND_UNIFORM


@dataclass(frozen=True)
class MeshOptions:
    """Mesh parameters; ``None`` falls back to the problem's own constants, then to generic defaults.

    Generic defaults: tau0 = sigma = 2/alpha, L = ln N.
    """

    tau0: Optional[float] = None
    L_strategy: Optional[str] = None
    sigma: Optional[float] = None
    refine: str = "bisect"

    def __post_init__(self):
        if self.refine not in ("bisect", "regenerate"):
            raise ValueError(f"refine must be 'bisect' or 'regenerate', got {self.refine!r}")
        if self.L_strategy is not None:
            LStrategy.parse(self.L_strategy)

    def resolve(self, problem: TurningPointProblem) -> "MeshOptions":
        tau0 = self.tau0 if self.tau0 is not None else problem.tau0
        L = self.L_strategy if self.L_strategy is not None else problem.L_strategy
        sigma = self.sigma if self.sigma is not None else problem.sigma
        return MeshOptions(
            tau0=2.0 / problem.alpha if tau0 is None else float(tau0),
            L_strategy=LStrategy.parse(L or "logN").value,
            sigma=2.0 / problem.alpha if sigma is None else float(sigma),
            refine=self.refine,
        )


def build_mesh(problem, scheme, N: int, eps: float, options: MeshOptions | None = None) -> SpatialMesh:
    scheme = Scheme(scheme)
    opts = (options or MeshOptions()).resolve(problem)
    if scheme is Scheme.HYBRID_GSHISHKIN:
        return generalized_shishkin(N, eps, opts.tau0, problem, opts.L_strategy)
    if scheme is Scheme.UPWIND_SHISHKIN:
        return standard_shishkin(N, eps, opts.sigma, problem)
    return uniform_mesh(N, problem)


@njit(cache=True, nogil=True)
def _march(x, eps, dt, family, A, B, D, F, g_lo, g_hi, u, out, check_m):
    """Advance ``u`` through len(g_lo) levels, writing each into ``out``.

    Coefficient arrays are level-major; a single row means the coefficients do
    not depend on t, and the matrix is then factored once.
    Returns (pivot level, pivot row, first non-M-matrix level, its row), -1 when absent.
    """
    n = x.shape[0] - 1
    m = n - 1
    lower = np.empty(m)
    diag = np.empty(m)
    upper = np.empty(m)
    rhs = np.empty(m)
    tags = np.empty(m, dtype=np.int8)
    sol = np.empty(m)
    work = np.empty(m)
    pivots = np.empty(m)
    bad_level = -1
    bad_row = -1
    single = A.shape[0] == 1
    if single:
        # time-independent matrix: factor once, rebuild only the rhs per level
        _assemble_rows(x, eps, dt, family, A[0], B[0], D[0], F[0], u, lower, diag, upper, rhs, tags)
        lower_b = lower[0]
        upper_b = upper[m - 1]
        lower[0] = 0.0
        upper[m - 1] = 0.0
        if check_m:
            r = _m_matrix_violation(lower, diag, upper)
            if r >= 0:
                bad_level = 0
                bad_row = r
        piv = _factor(lower, diag, upper, work, pivots)
        if piv >= 0:
            return 0, piv, bad_level, bad_row
        for k in range(g_lo.shape[0]):
            _rhs_level(x, dt, tags, F[0], D[0], u, g_lo[k], g_hi[k], lower_b, upper_b, rhs)
            _solve_factored(lower, pivots, work, rhs, sol)
            u[0] = g_lo[k]
            for j in range(m):
                u[j + 1] = sol[j]
            u[n] = g_hi[k]
            for j in range(n + 1):
                out[k, j] = u[j]
        return -1, -1, bad_level, bad_row
    for k in range(g_lo.shape[0]):
        c = 0 if single else k
        _assemble_level(x, eps, dt, family, A[c], B[c], D[c], F[c], u, g_lo[k], g_hi[k],
                        lower, diag, upper, rhs, tags)
        if check_m and bad_level < 0:
            r = _m_matrix_violation(lower, diag, upper)
            if r >= 0:
                bad_level = k
                bad_row = r
        piv = _thomas(lower, diag, upper, rhs, sol, work)
        if piv >= 0:
            return k, piv, bad_level, bad_row
        u[0] = g_lo[k]
        for j in range(m):
            u[j + 1] = sol[j]
        u[n] = g_hi[k]
        for j in range(n + 1):
            out[k, j] = u[j]
    return -1, -1, bad_level, bad_row


class Marcher:
    """Stateful implicit Euler stepper; ``advance(k)`` returns the next k levels as a (k, N+1) array."""

    def __init__(self, problem: TurningPointProblem, mesh: SpatialMesh, time: TimeMesh, eps: float,
                 scheme, check_m_matrix: bool = False, chunk: int = 256):
        self.problem = problem
        self.mesh = mesh
        self.time = time
        self.eps = float(eps)
        self.family = Scheme(scheme).family
        self.check_m_matrix = check_m_matrix
        self.chunk = max(1, int(chunk))
        self.n = 0
        x = mesh.nodes
        self.u = np.array(_boundary_eval(problem.g_init, x), dtype=float)
        if not np.all(np.isfinite(self.u)):
            raise AssemblyError("initial data is not finite")
        self.m_matrix_failure: tuple[int, int] | None = None
        self._coef = None
        if problem.autonomous:
            self._coef = self._coefficients(np.array([time.time(1)]))

    def _coefficients(self, t: np.ndarray):
        coef = self.problem.coefficients(self.mesh.nodes, t)
        for arr, name in zip(coef, "abdf"):
            bad = ~np.isfinite(arr)
            if bad.any():
                lvl, i = np.unravel_index(np.flatnonzero(bad)[0], arr.shape)
                raise AssemblyError(f"coefficient {name} is not finite at node i={i}, t_n={t[lvl]:.6g}")
        return coef

    def advance(self, k: int) -> np.ndarray:
        if self.n + k > self.time.M:
            raise ValueError("cannot march past the final time")
        out = np.empty((k, self.mesh.nodes.size))
        done = 0
        while done < k:
            kk = min(self.chunk, k - done)
            levels = np.arange(self.n + 1, self.n + kk + 1)
            t = self.time.time(levels)
            A, B, D, F = self._coef if self._coef is not None else self._coefficients(t)
            g_lo = _boundary_eval(self.problem.g_left, t)
            g_hi = _boundary_eval(self.problem.g_right, t)
            if not (np.all(np.isfinite(g_lo)) and np.all(np.isfinite(g_hi))):
                raise AssemblyError(f"boundary data is not finite for t in [{t[0]:.6g}, {t[-1]:.6g}]")
            piv_lvl, piv_row, bad_lvl, bad_row = _march(
                self.mesh.nodes, self.eps, self.time.dt, self.family, A, B, D, F, g_lo, g_hi,
                self.u, out[done : done + kk], self.check_m_matrix,
            )
            if bad_lvl >= 0 and self.m_matrix_failure is None:
                self.m_matrix_failure = (int(levels[bad_lvl]), int(bad_row) + 1)
            if piv_lvl >= 0:
                n_fail = int(levels[piv_lvl])
                raise PivotError(int(piv_row) + 1,
                                 f"zero pivot at row {piv_row + 1}, level n={n_fail}, t_n={self.time.time(n_fail):.6g}")
            self.n += kk
            done += kk
        return out


@dataclass(eq=False)
class SolutionGrid:
    """Discrete solution on the space-time grid.

    ``values[i, j]`` is U at node i and time level ``levels[j]``. When M exceeds
    MAX_STORED_LEVELS only every ``stride``-th level (plus the last) is kept;
    ``max_abs`` and ``min_value`` always cover every level.
    """

    values: np.ndarray
    levels: np.ndarray
    space_mesh: SpatialMesh
    time_mesh: TimeMesh
    scheme: Scheme
    eps: float
    max_abs: float
    min_value: float
    m_matrix_failure: tuple[int, int] | None = None
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {int(n): j for j, n in enumerate(self.levels)}

    @property
    def complete(self) -> bool:
        return self.levels.size == self.time_mesh.M + 1

    def values_at(self, i: int, n: int) -> float:
        try:
            j = self._index[int(n)]
        except KeyError:
            raise KeyError(f"time level {n} was not retained") from None
        return float(self.values[i, j])

    def level(self, n: int) -> np.ndarray:
        try:
            return self.values[:, self._index[int(n)]]
        except KeyError:
            raise KeyError(f"time level {n} was not retained") from None

    def to_surface_csv(self, path) -> None:
        x = self.space_mesh.nodes
        t = self.time_mesh.time(self.levels)
        with open(Path(path), "w") as fh:
            fh.write("x,t,u\n")
            for j, tj in enumerate(t):
                for i, xi in enumerate(x):
                    fh.write(f"{xi:.6e},{tj:.6e},{self.values[i, j]:.6e}\n")


def _check_run_args(scheme: Scheme, N: int, M: int, eps: float) -> None:
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N!r}")
    if scheme.needs_shishkin and N % 4:
        raise ValueError(f"{scheme.value} needs N divisible by 4, got {N}")
    if int(M) != M or M < 1:
        raise ValueError(f"M must be a positive integer, got {M!r}")
    if not (eps > 0 and math.isfinite(eps)):
        raise ValueError(f"eps must be positive, got {eps!r}")


def solve(problem: TurningPointProblem, scheme, N: int, M: int, eps: float,
          mesh_options: MeshOptions | None = None, mesh: SpatialMesh | None = None,
          check_m_matrix: bool = False) -> SolutionGrid:
    """March from t = 0 to t = T with M implicit Euler steps on the scheme's mesh.

    ``mesh`` overrides mesh construction (used for bisected fine grids).
    """
    scheme = Scheme(scheme)
    _check_run_args(scheme, N, M, eps)
    if mesh is None:
        mesh = build_mesh(problem, scheme, N, eps, mesh_options)
    time = TimeMesh(int(M), problem.t_final)
    stride = 1 if M <= MAX_STORED_LEVELS else math.ceil(M / MAX_STORED_LEVELS)
    keep = np.arange(0, M + 1, stride)
    if keep[-1] != M:
        keep = np.append(keep, M)

    marcher = Marcher(problem, mesh, time, eps, scheme, check_m_matrix=check_m_matrix)
    stored = np.empty((keep.size, mesh.nodes.size))
    stored[0] = marcher.u
    max_abs = float(np.max(np.abs(marcher.u)))
    min_value = float(np.min(marcher.u))
    j = 1
    block = stride * max(1, 256 // stride)
    while marcher.n < M:
        start = marcher.n
        k = min(block, M - start)
        chunk = marcher.advance(k)
        max_abs = max(max_abs, float(np.max(np.abs(chunk))))
        min_value = min(min_value, float(np.min(chunk)))
        while j < keep.size and keep[j] <= start + k:
            stored[j] = chunk[keep[j] - start - 1]
            j += 1
    if not np.all(np.isfinite(stored)):
        raise ArithmeticError("solution contains non-finite values")
    return SolutionGrid(stored.T.copy(), keep, mesh, time, scheme, float(eps), max_abs, min_value,
                        marcher.m_matrix_failure)


def restrict_to_coarse(fine: SolutionGrid, coarse_mesh: SpatialMesh, coarse_time: TimeMesh) -> np.ndarray:
    """Sample a fine solution at the coarse (x_i, t_n); node i, level n map to (r i, s n)."""
    xf, xc = fine.space_mesh.nodes, coarse_mesh.nodes
    if (xf.size - 1) % (xc.size - 1) or fine.time_mesh.M % coarse_time.M:
        raise ValueError("fine grid is not an integer refinement of the coarse grid")
    r = (xf.size - 1) // (xc.size - 1)
    s = fine.time_mesh.M // coarse_time.M
    if not np.array_equal(xf[::r], xc):
        raise ValueError("coarse nodes are not contained in the fine mesh bit for bit")
    if fine.time_mesh.t_final != coarse_time.t_final:
        raise ValueError("time meshes cover different intervals")
    levels = np.arange(coarse_time.M + 1) * s
    return np.stack([fine.level(n)[::r] for n in levels], axis=1)
