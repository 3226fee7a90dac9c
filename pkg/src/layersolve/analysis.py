"""Double-mesh error estimation, convergence orders and table construction."""

from __future__ import annotations

import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .mesh import SpatialMesh, TimeMesh, bisect
from .problem import TurningPointProblem
from .solver import Marcher, MeshOptions, Scheme, _check_run_args, build_mesh

THREADS_ENV = "LAYERSOLVE_THREADS"
# coarse levels advanced per lockstep block
_BLOCK = 256


@dataclass(frozen=True)
class MPolicy:
    """Number of time steps as a function of N: ``equal-n``, ``n-squared`` or ``fixed:<M>``."""

    kind: str
    fixed: int | None = None

    @classmethod
    def parse(cls, text) -> "MPolicy":
        if isinstance(text, MPolicy):
            return text
        s = str(text).strip().lower().replace("_", "-")
        if s in ("equal-n", "equaln"):
            return cls("equal-n")
        if s in ("n-squared", "nsquared"):
            return cls("n-squared")
        m = re.fullmatch(r"fixed:(\d+)", s)
        if m and int(m.group(1)) >= 1:
            return cls("fixed", int(m.group(1)))
        raise ValueError(f"unknown M policy {text!r}; expected equal-n, n-squared or fixed:<M>")

    def __call__(self, N: int) -> int:
        if self.kind == "equal-n":
            return N
        if self.kind == "n-squared":
            return N * N
        return self.fixed

    def __str__(self) -> str:
        return f"fixed:{self.fixed}" if self.kind == "fixed" else self.kind


@dataclass(frozen=True)
class DoubleMeshResult:
    error: float
    N: int
    M: int
    # extremes over every level of both runs, for stability/positivity checks
    coarse_min: float
    coarse_max_abs: float
    fine_min: float
    fine_max_abs: float
    m_matrix_failure: tuple[int, int] | None


def _interp_weights(x_fine: np.ndarray, x: np.ndarray):
    idx = np.clip(np.searchsorted(x_fine, x, side="right") - 1, 0, x_fine.size - 2)
    w = (x - x_fine[idx]) / (x_fine[idx + 1] - x_fine[idx])
    return idx, w


def double_mesh(problem: TurningPointProblem, scheme, N: int, M: int, eps: float,
                mesh_options: MeshOptions | None = None, time_norm: str = "all",
                check_m_matrix: bool = False) -> DoubleMeshResult:
    """Run the (N, M) and (2N, 2M) problems in lockstep and compare at the coarse nodes.

    ``time_norm="all"`` takes the maximum over every coarse level, ``"final"`` only t = T.
    """
    scheme = Scheme(scheme)
    _check_run_args(scheme, N, M, eps)
    if time_norm not in ("all", "final"):
        raise ValueError(f"time_norm must be 'all' or 'final', got {time_norm!r}")
    opts = (mesh_options or MeshOptions()).resolve(problem)
    coarse_mesh = build_mesh(problem, scheme, N, eps, opts)
    if opts.refine == "bisect":
        fine_mesh = bisect(coarse_mesh)
        idx = w = None
    else:
        fine_mesh = build_mesh(problem, scheme, 2 * N, eps, opts)
        idx, w = _interp_weights(fine_mesh.nodes, coarse_mesh.nodes)

    def on_coarse(U: np.ndarray) -> np.ndarray:
        if idx is None:
            return U[..., ::2]
        return (1.0 - w) * U[..., idx] + w * U[..., idx + 1]

    coarse = Marcher(problem, coarse_mesh, TimeMesh(M, problem.t_final), eps, scheme, check_m_matrix)
    fine = Marcher(problem, fine_mesh, TimeMesh(2 * M, problem.t_final), eps, scheme, check_m_matrix)
    err = 0.0
    if time_norm == "all":
        err = float(np.max(np.abs(coarse.u - on_coarse(fine.u))))
    cmin, cmax = float(coarse.u.min()), float(np.abs(coarse.u).max())
    fmin, fmax = float(fine.u.min()), float(np.abs(fine.u).max())
    while coarse.n < M:
        k = min(_BLOCK, M - coarse.n)
        Uc = coarse.advance(k)
        Uf = fine.advance(2 * k)
        cmin = min(cmin, float(Uc.min()))
        cmax = max(cmax, float(np.abs(Uc).max()))
        fmin = min(fmin, float(Uf.min()))
        fmax = max(fmax, float(np.abs(Uf).max()))
        if time_norm == "all":
            err = max(err, float(np.max(np.abs(Uc - on_coarse(Uf[1::2])))))
        elif coarse.n == M:
            err = float(np.max(np.abs(Uc[-1] - on_coarse(Uf[-1]))))
    failure = coarse.m_matrix_failure
    if failure is None and fine.m_matrix_failure is not None:
        failure = fine.m_matrix_failure
    return DoubleMeshResult(err, N, M, cmin, cmax, fmin, fmax, failure)


def double_mesh_error(problem, scheme, N: int, M: int, eps: float,
                      mesh_options: MeshOptions | None = None, time_norm: str = "all") -> float:
    """Maximum nodal difference between U^{N,M} and U^{2N,2M} on the coarse grid."""
    return double_mesh(problem, scheme, N, M, eps, mesh_options, time_norm).error


def order(E_coarse: float, E_fine: float) -> float:
    """Observed order log2(E_coarse / E_fine)."""
    if not (E_coarse > 0 and E_fine > 0):
        raise ValueError(f"orders need positive errors, got {E_coarse!r}, {E_fine!r}")
    return math.log(E_coarse / E_fine) / math.log(2.0)


def _safe_order(e1: float, e2: float) -> float:
    if np.isfinite(e1) and np.isfinite(e2) and e1 > 0 and e2 > 0:
        return order(e1, e2)
    return float("nan")


@dataclass(eq=False)
class ConvergenceTable:
    scheme: Scheme
    problem: str
    p: int | None
    m_policy: MPolicy
    eps_list: list[float]
    n_list: list[int]
    E: np.ndarray  # (len(eps_list), len(n_list)), nan where a cell failed
    failures: dict = field(default_factory=dict)  # (eps, N) -> error message
    cells: dict = field(default_factory=dict, repr=False)  # (eps, N) -> DoubleMeshResult
    time_norm: str = "all"

    @property
    def M_list(self) -> list[int]:
        return [self.m_policy(N) for N in self.n_list]

    @property
    def q(self) -> np.ndarray:
        E = self.E
        out = np.full((E.shape[0], max(E.shape[1] - 1, 0)), np.nan)
        for r in range(E.shape[0]):
            for c in range(E.shape[1] - 1):
                out[r, c] = _safe_order(E[r, c], E[r, c + 1])
        return out

    @property
    def E_uniform(self) -> np.ndarray:
        out = np.full(self.E.shape[1], np.nan)
        for c in range(self.E.shape[1]):
            col = self.E[:, c]
            col = col[np.isfinite(col)]
            if col.size:
                out[c] = col.max()
        return out

    @property
    def q_uniform(self) -> np.ndarray:
        Eu = self.E_uniform
        return np.array([_safe_order(Eu[c], Eu[c + 1]) for c in range(Eu.size - 1)])

    @property
    def complete(self) -> bool:
        return not self.failures

    # ------------------------------------------------------------ rendering

    def to_csv(self, path=None) -> str:
        rows = ["eps,N,M,E,q"]
        q, Ms = self.q, self.M_list
        for r, eps in enumerate(self.eps_list):
            for c, N in enumerate(self.n_list):
                qq = q[r, c] if c < q.shape[1] else float("nan")
                rows.append(f"{_fmt(eps)},{N},{Ms[c]},{_fmt(self.E[r, c])},{_fmt(qq)}")
        Eu, qu = self.E_uniform, self.q_uniform
        for c, N in enumerate(self.n_list):
            qq = qu[c] if c < qu.size else float("nan")
            rows.append(f"uniform,{N},{Ms[c]},{_fmt(Eu[c])},{_fmt(qq)}")
        text = "\n".join(rows) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_markdown(self, path=None) -> str:
        head = "| eps | | " + " | ".join(f"N={N}" for N in self.n_list) + " |"
        sep = "|---|---|" + "---|" * len(self.n_list)
        title = f"**{self.scheme.value}, problem {self.problem}"
        title += (f", p={self.p}" if self.p is not None else "") + f", M policy {self.m_policy}**"
        lines = [title, "", head, sep]
        q = self.q
        for r, eps in enumerate(self.eps_list):
            lines.append(f"| {_eps_label(eps)} | E | " + " | ".join(_fmt(v) for v in self.E[r]) + " |")
            lines.append("| | q | " + " | ".join(_fmt(v) for v in q[r]) + " | |")
        lines.append("| **uniform** | E | " + " | ".join(_fmt(v) for v in self.E_uniform) + " |")
        lines.append("| | q | " + " | ".join(_fmt(v) for v in self.q_uniform) + " | |")
        if self.failures:
            lines += ["", "Failed cells:"]
            lines += [f"- eps={_fmt(e)}, N={n}: {msg}" for (e, n), msg in self.failures.items()]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def _fmt(v: float) -> str:
    if v is None or not np.isfinite(v):
        return ""
    return f"{v:.5e}"


def _eps_label(eps: float) -> str:
    k = math.log2(eps)
    return f"2^{int(k)}" if k == int(k) else _fmt(eps)


def read_table_csv(path) -> dict:
    """Parse a table CSV into {(eps or 'uniform', N): (M, E, q)}; blank fields become nan."""
    out = {}
    lines = Path(path).read_text().splitlines()
    if lines[0] != "eps,N,M,E,q":
        raise ValueError(f"unexpected header {lines[0]!r}")
    for line in lines[1:]:
        eps, N, M, E, q = line.split(",")
        key = eps if eps == "uniform" else float(eps)
        out[(key, int(N))] = (int(M), float(E) if E else float("nan"), float(q) if q else float("nan"))
    return out


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_experiment(problem: TurningPointProblem, scheme, eps_list: Sequence[float], n_list: Sequence[int],
                   m_policy="equal-n", mesh_options: MeshOptions | None = None, time_norm: str = "all",
                   threads: int | None = None, check_m_matrix: bool = False) -> ConvergenceTable:
    """Fill a table of double-mesh errors over eps x N.

    Cells are independent and may run on several threads; a failing cell is
    recorded in ``failures`` and left as nan.
    """
    scheme = Scheme(scheme)
    policy = MPolicy.parse(m_policy)
    n_list = [int(N) for N in n_list]
    eps_list = [float(e) for e in eps_list]
    if list(n_list) != sorted(n_list):
        raise ValueError("n_list must be ascending")
    for N in n_list:
        if N % 4:
            raise ValueError(f"N={N} is not divisible by 4")
    E = np.full((len(eps_list), len(n_list)), np.nan)
    table = ConvergenceTable(scheme, problem.name, problem.p if problem.name == "P2" else None,
                             policy, eps_list, n_list, E, time_norm=time_norm)

    # biggest cells first so the pool drains evenly
    jobs = sorted(((r, c) for r in range(len(eps_list)) for c in range(len(n_list))),
                  key=lambda rc: (-n_list[rc[1]] * policy(n_list[rc[1]]), rc))

    def cell(rc):
        r, c = rc
        N = n_list[c]
        try:
            return rc, double_mesh(problem, scheme, N, policy(N), eps_list[r], mesh_options,
                                   time_norm, check_m_matrix), None
        except Exception as exc:  # recorded per cell, the table carries on
            return rc, None, f"{type(exc).__name__}: {exc}"

    nthreads = threads or default_threads()
    if nthreads <= 1:
        results = [cell(rc) for rc in jobs]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            results = list(pool.map(cell, jobs))
    for (r, c), res, err in sorted(results, key=lambda item: item[0]):
        key = (eps_list[r], n_list[c])
        if res is None:
            table.failures[key] = err
        else:
            E[r, c] = res.error
            table.cells[key] = res
    return table
