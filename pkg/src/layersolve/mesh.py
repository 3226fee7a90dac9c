"""Spatial meshes (generalized Shishkin, standard Shishkin, uniform) and the time mesh."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .problem import TurningPointProblem


class MeshKind(str, enum.Enum):
    GENERALIZED_SHISHKIN = "generalized-shishkin"
    STANDARD_SHISHKIN = "standard-shishkin"
    UNIFORM = "uniform"


class Region(enum.IntEnum):
    LEFT_LAYER = 0
    INTERIOR = 1
    RIGHT_LAYER = 2


class LStrategy(str, enum.Enum):
    LOG_N = "logN"
    LAMBERT_W = "lambertW"

    @classmethod
    def parse(cls, value) -> "LStrategy":
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"unknown L strategy {value!r}; expected one of logN, lambertW")


@dataclass(frozen=True, eq=False)
class SpatialMesh:
    nodes: np.ndarray
    tau: float
    kind: MeshKind
    regions: np.ndarray  # region of interval i stored at regions[i - 1]
    L_value: float
    x_lo: float
    x_hi: float

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def steps(self) -> np.ndarray:
        """h_i = x_i - x_{i-1} for i = 1..N (stored at index i - 1)."""
        return np.diff(self.nodes)

    def region_of(self, i: int) -> Region:
        if not 1 <= i <= self.N:
            raise IndexError(f"interval index {i} outside 1..{self.N}")
        return Region(int(self.regions[i - 1]))

    def to_csv(self, path) -> None:
        """Write ``i,x,region``; the region column tags the interval ending at node i (node 0 tags interval 1)."""
        lines = ["i,x,region"]
        for i, x in enumerate(self.nodes):
            lines.append(f"{i},{float(x)!r},{Region(int(self.regions[max(i, 1) - 1])).name}")
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class TimeMesh:
    M: int
    t_final: float

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")

    @property
    def dt(self) -> float:
        return self.t_final / self.M

    def time(self, n) -> np.ndarray | float:
        # (T * n) / M keeps t_M == T exactly and t_{2n} on a 2M mesh equal to t_n here
        return (self.t_final * np.asarray(n, dtype=float)) / self.M

    @property
    def times(self) -> np.ndarray:
        return self.time(np.arange(self.M + 1))


def compute_L(N: int, strategy="logN") -> float:
    """Logarithmic factor L with exp(-L) <= L/N and L <= ln N.

    ``logN`` returns ln N. ``lambertW`` returns the root of L exp(L) = N,
    the smallest admissible value, by bisection run to full convergence.
    """
    if int(N) != N or N < 3:
        raise ValueError(f"compute_L needs N >= 3, got {N!r}")
    strategy = LStrategy.parse(strategy)
    lnN = math.log(N)
    if strategy is LStrategy.LOG_N:
        return lnN
    lo, hi = 0.0, lnN
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if mid * math.exp(mid) < N:
            lo = mid
        else:
            hi = mid
    return hi


def _check_shishkin_N(N: int) -> None:
    if int(N) != N or N < 4 or N % 4:
        raise ValueError(f"Shishkin meshes need N divisible by 4, got {N!r}")


def _piecewise_uniform(N: int, tau: float, x_lo: float, x_hi: float) -> np.ndarray:
    # left half built forward, right half mirrored so x_{N/2} = x_c and the mesh is symmetric
    q = N // 4
    x_c = 0.5 * (x_lo + x_hi)
    x = np.empty(N + 1)
    k = np.arange(q + 1, dtype=float)
    h = tau / q
    H = (x_hi - x_lo - 2.0 * tau) / (2 * q)
    x[: q + 1] = x_lo + k * h
    x[q] = x_lo + tau
    x[q : 2 * q + 1] = x[q] + k * H
    x[2 * q] = x_c
    x[2 * q + 1 :] = (x_lo + x_hi) - x[2 * q - 1 :: -1]
    x[0], x[N] = x_lo, x_hi
    return x


def _shishkin_regions(N: int) -> np.ndarray:
    q = N // 4
    r = np.full(N, Region.INTERIOR, dtype=np.int8)
    r[:q] = Region.LEFT_LAYER
    r[3 * q :] = Region.RIGHT_LAYER
    return r


def generalized_shishkin(
    N: int,
    eps: float,
    tau0: float,
    problem: TurningPointProblem,
    L_strategy="logN",
) -> SpatialMesh:
    """Piecewise-uniform mesh with N/4 intervals in each layer of width tau = min(W/8, tau0 eps L)."""
    _check_shishkin_N(N)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if tau0 < 1.0 / problem.alpha:
        raise ValueError(f"tau0={tau0} is below 1/alpha={1.0 / problem.alpha}")
    L = compute_L(N, L_strategy)
    tau = min(problem.width / 8.0, tau0 * eps * L)
    nodes = _piecewise_uniform(N, tau, problem.x_lo, problem.x_hi)
    return SpatialMesh(nodes, tau, MeshKind.GENERALIZED_SHISHKIN, _shishkin_regions(N), L,
                       problem.x_lo, problem.x_hi)


def standard_shishkin(N: int, eps: float, sigma: float, problem: TurningPointProblem) -> SpatialMesh:
    """Classical Shishkin mesh, tau = min(W/8, sigma eps ln N)."""
    _check_shishkin_N(N)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    L = math.log(N)
    tau = min(problem.width / 8.0, sigma * eps * L)
    nodes = _piecewise_uniform(N, tau, problem.x_lo, problem.x_hi)
    return SpatialMesh(nodes, tau, MeshKind.STANDARD_SHISHKIN, _shishkin_regions(N), L,
                       problem.x_lo, problem.x_hi)


def uniform_mesh(N: int, problem: TurningPointProblem) -> SpatialMesh:
    if int(N) != N or N < 2:
        raise ValueError(f"uniform mesh needs N >= 2, got {N!r}")
    N = int(N)
    nodes = problem.x_lo + problem.width * (np.arange(N + 1) / N)
    nodes[0], nodes[N] = problem.x_lo, problem.x_hi
    if N % 2 == 0:
        nodes[N // 2] = 0.5 * (problem.x_lo + problem.x_hi)
    regions = np.full(N, Region.INTERIOR, dtype=np.int8)
    return SpatialMesh(nodes, 0.0, MeshKind.UNIFORM, regions, 1.0, problem.x_lo, problem.x_hi)


def bisect(mesh: SpatialMesh) -> SpatialMesh:
    """Split every interval at its midpoint; original nodes are kept bit for bit."""
    x = mesh.nodes
    y = np.empty(2 * x.size - 1)
    y[::2] = x
    y[1::2] = 0.5 * (x[:-1] + x[1:])
    regions = np.repeat(mesh.regions, 2)
    return SpatialMesh(y, mesh.tau, mesh.kind, regions, mesh.L_value, mesh.x_lo, mesh.x_hi)
