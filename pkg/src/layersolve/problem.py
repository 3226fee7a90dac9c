"""Problem class for parabolic convection-diffusion with an interior turning point.

The operator is

    eps * u_xx + a(x, t) u_x - d(x, t) u_t - b(x, t) u = f(x, t)

on (x_lo, x_hi) x (0, T] with Dirichlet data on the left, right and bottom
edges, and a(x, t) = -a0(x, t) (x - x_c)**p vanishing at the midpoint x_c.

Coefficient callables take ``(x, t)`` and must broadcast over numpy arrays
(a scalar return value is broadcast to the requested shape).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

Coefficient = Callable[[np.ndarray, np.ndarray], np.ndarray]
BoundaryData = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TurningPointProblem:
    x_lo: float
    x_hi: float
    t_final: float
    x_c: float
    p: int
    a: Coefficient
    b: Coefficient
    d: Coefficient
    f: Coefficient
    g_init: BoundaryData
    g_left: BoundaryData
    g_right: BoundaryData
    alpha0: float
    beta: float
    gamma: float
    alpha: Optional[float] = None
    name: str = "custom"
    # a, b, d, f independent of t; lets the solver evaluate them once
    autonomous: bool = False
    # mesh constants tuned for this problem (None -> generic defaults)
    tau0: Optional[float] = None
    L_strategy: Optional[str] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.alpha is None:
            object.__setattr__(self, "alpha", float(self.alpha0))
        if not self.x_lo < self.x_hi:
            raise ValueError(f"need x_lo < x_hi, got {self.x_lo}, {self.x_hi}")
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo

    def coefficients(self, x: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, ...]:
        """Evaluate ``(a, b, d, f)`` on the grid ``t x x``; each result has shape (len(t), len(x))."""
        x = np.asarray(x, dtype=float)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return tuple(_grid_eval(fn, x, t) for fn in (self.a, self.b, self.d, self.f))


def _grid_eval(fn: Coefficient, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        v = np.asarray(fn(x[None, :], t[:, None]), dtype=float)
    return np.ascontiguousarray(np.broadcast_to(v, (t.size, x.size)))


def _boundary_eval(fn: BoundaryData, t: np.ndarray) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    with np.errstate(all="ignore"):
        v = np.asarray(fn(t), dtype=float)
    return np.ascontiguousarray(np.broadcast_to(v, t.shape))


def builtin_problem_1() -> TurningPointProblem:
    """eps u_xx - 2(2x-1) u_x - u_t - 4u = 0 on (0,1) x (0,1], all data equal to 1."""
    return TurningPointProblem(
        x_lo=0.0,
        x_hi=1.0,
        t_final=1.0,
        x_c=0.5,
        p=1,
        a=lambda x, t: -2.0 * (2.0 * x - 1.0) + 0.0 * t,
        b=lambda x, t: 4.0,
        d=lambda x, t: 1.0,
        f=lambda x, t: 0.0,
        g_init=lambda x: np.ones_like(x),
        g_left=lambda t: np.ones_like(t),
        g_right=lambda t: np.ones_like(t),
        alpha0=4.0,
        beta=4.0,
        gamma=1.0,
        name="P1",
        autonomous=True,
        tau0=2.2,
        L_strategy="lambertw",
        sigma=1.0,
    )


def builtin_problem_2(p: int = 1) -> TurningPointProblem:
    """eps u_xx - x^p u_x - u_t - u = 1 on (-1,1) x (0,1], all data equal to 1."""
    if isinstance(p, bool) or int(p) != p or p < 1 or p % 2 == 0:
        raise ValueError(f"p must be a positive odd integer, got {p!r}")
    p = int(p)
    return TurningPointProblem(
        x_lo=-1.0,
        x_hi=1.0,
        t_final=1.0,
        x_c=0.0,
        p=p,
        a=lambda x, t: -(x**p) + 0.0 * t,
        b=lambda x, t: 1.0,
        d=lambda x, t: 1.0,
        f=lambda x, t: 1.0,
        g_init=lambda x: np.ones_like(x),
        g_left=lambda t: np.ones_like(t),
        g_right=lambda t: np.ones_like(t),
        alpha0=1.0,
        beta=1.0,
        gamma=1.0,
        name="P2",
        autonomous=True,
        tau0=2.5,
        L_strategy="lambertw",
        sigma=1.0,
    )


def constant_problem(
    c: float = 1.0,
    x_lo: float = -1.0,
    x_hi: float = 1.0,
    p: int = 1,
    b: float = 2.0,
) -> TurningPointProblem:
    """Problem whose exact solution is u = c: f = -b c and all data equal to c."""
    x_c = 0.5 * (x_lo + x_hi)
    return TurningPointProblem(
        x_lo=x_lo,
        x_hi=x_hi,
        t_final=1.0,
        x_c=x_c,
        p=p,
        a=lambda x, t: -((x - x_c) ** p) + 0.0 * t,
        b=lambda x, t: b,
        d=lambda x, t: 1.0,
        f=lambda x, t: -b * c,
        g_init=lambda x: np.full_like(x, c),
        g_left=lambda t: np.full_like(t, c),
        g_right=lambda t: np.full_like(t, c),
        alpha0=1.0,
        beta=b,
        gamma=1.0,
        name="const",
        autonomous=True,
    )


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    samples: tuple[int, int] = (0, 0)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.passed


def validate(problem: TurningPointProblem, samples_x: int = 64, samples_t: int = 16) -> ValidationReport:
    """Check the structural assumptions on a uniform sample grid.

    Violations are collected, never raised. An empty report only means
    nothing was caught at this resolution.
    """
    if samples_x < 2 or samples_t < 2:
        raise ValueError("need at least 2 samples in each direction")
    report = ValidationReport(samples=(samples_x, samples_t))
    out = report.violations
    pr = problem

    if pr.x_c != 0.5 * (pr.x_lo + pr.x_hi):
        out.append(f"x_c is not the midpoint: x_c={pr.x_c}, midpoint={0.5 * (pr.x_lo + pr.x_hi)}")
    if int(pr.p) != pr.p or pr.p < 1 or pr.p % 2 == 0:
        out.append(f"p must be a positive odd integer: p={pr.p}")
    if not pr.alpha0 > 0:
        out.append(f"alpha0 > 0 fails: alpha0={pr.alpha0}")
    if not pr.beta > 0:
        out.append(f"beta > 0 fails: beta={pr.beta}")
    if not pr.gamma >= 0:
        out.append(f"gamma >= 0 fails: gamma={pr.gamma}")
    if not 0 < pr.alpha <= pr.alpha0:
        out.append(f"0 < alpha <= alpha0 fails: alpha={pr.alpha}, alpha0={pr.alpha0}")

    x = np.linspace(pr.x_lo, pr.x_hi, samples_x)
    t = np.linspace(0.0, pr.t_final, samples_t)
    a, b, d, _f = pr.coefficients(x, t)
    X = np.broadcast_to(x[None, :], a.shape)
    T = np.broadcast_to(t[:, None], a.shape)

    def flag(mask: np.ndarray, what: str) -> None:
        if mask.any():
            k = np.flatnonzero(mask.ravel())[0]
            out.append(f"{what} at {int(mask.sum())} sample(s), first (x={X.flat[k]:.6g}, t={T.flat[k]:.6g})")

    for arr, nm in ((a, "a"), (b, "b"), (d, "d"), (_f, "f")):
        flag(~np.isfinite(arr), f"{nm} is not finite")

    s = X - pr.x_c
    off = s != 0
    with np.errstate(all="ignore"):
        flag(off & ~(a * s < 0), "sign condition a*(x - x_c) < 0 fails")
        flag(~off & (a != 0), "a(x_c, t) = 0 fails")
        a0 = -a / s**pr.p
        flag(off & np.isfinite(a) & (a * s < 0) & ~(a0 >= pr.alpha0 * (1 - 1e-12)), "a0 >= alpha0 fails")
        flag(np.isfinite(b) & ~(b >= pr.beta), "b >= beta fails")
        flag(np.isfinite(d) & ~(d >= pr.gamma), "d >= gamma fails")
    return report
