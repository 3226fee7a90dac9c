"""Command-line driver: configuration, table runs and output files.

Example::

    layersolve --problem p2 --p 3 --scheme hybrid-gshishkin --m-policy n-squared --out-dir out/
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .analysis import ConvergenceTable, MPolicy, run_experiment
from .mesh import LStrategy
from .problem import TurningPointProblem, builtin_problem_1, builtin_problem_2
from .report import convergence_svg
from .solver import MeshOptions, Scheme, solve

log = logging.getLogger("layersolve")

DEFAULT_EPS = tuple(2.0 ** -k for k in range(6, 25, 2))
DEFAULT_N = (32, 64, 128, 256, 512, 1024, 2048)
N_SQUARED_CAP = 512
EMIT_KINDS = ("csv", "md", "svg", "surface")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "P2"
    p: int = 1
    schemes: list = field(default_factory=lambda: [s.value for s in Scheme])
    eps_list: list = field(default_factory=lambda: list(DEFAULT_EPS))
    n_list: Optional[list] = None  # None -> DEFAULT_N, capped for n-squared
    m_policy: str = "equal-n"
    tau0: Optional[float] = None  # None -> problem constant
    L_strategy: Optional[str] = None
    sigma: Optional[float] = None
    refine: str = "bisect"
    time_norm: str = "all"
    out_dir: str = "out"
    emit: list = field(default_factory=lambda: list(EMIT_KINDS))
    threads: Optional[int] = None

    def build_problem(self) -> TurningPointProblem:
        return builtin_problem_1() if self.problem == "P1" else builtin_problem_2(self.p)

    def mesh_options(self) -> MeshOptions:
        return MeshOptions(self.tau0, self.L_strategy, self.sigma, self.refine)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2) + "\n"


CONFIG_KEYS = tuple(f.name for f in dataclasses.fields(RunConfig))


# ------------------------------------------------------------ value parsing

def parse_eps(text) -> float:
    """Accept 0.015625, 2^-6 or 2**-6."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    s = str(text).strip().replace(" ", "")
    m = re.fullmatch(r"2(?:\^|\*\*)\(?(-?\d+)\)?", s)
    if m:
        return 2.0 ** int(m.group(1))
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"cannot read eps value {text!r}") from None


def _split(value) -> list:
    if isinstance(value, str):
        return [v for v in (x.strip() for x in value.split(",")) if v]
    return list(value)


def _as_int(value, what: str) -> int:
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be an integer, got {value!r}") from None
    if isinstance(value, bool) or not f.is_integer():
        raise ConfigError(f"{what} must be an integer, got {value!r}")
    return int(f)


def _normalize(cfg: RunConfig) -> RunConfig:
    """Type-coerce and check every field, raising ConfigError with a readable message."""
    prob = str(cfg.problem).strip().upper()
    if prob not in ("P1", "P2"):
        raise ConfigError(f"problem must be p1 or p2, got {cfg.problem!r}")
    cfg.problem = prob
    p = _as_int(cfg.p, "p")
    if p < 1 or p % 2 == 0:
        raise ConfigError(f"p must be a positive odd integer, got {p}")
    cfg.p = p

    schemes = []
    for s in _split(cfg.schemes):
        try:
            v = Scheme(str(s).strip().lower()).value
        except ValueError:
            raise ConfigError(f"unknown scheme {s!r}; choose from {', '.join(x.value for x in Scheme)}") from None
        if v not in schemes:
            schemes.append(v)
    if not schemes:
        raise ConfigError("the scheme set is empty")
    cfg.schemes = schemes

    eps = [parse_eps(e) for e in _split(cfg.eps_list)]
    if not eps:
        raise ConfigError("eps_list is empty")
    for e in eps:
        if not (0.0 < e <= 1.0) or not math.isfinite(e):
            raise ConfigError(f"eps values must lie in (0, 1], got {e!r}")
    cfg.eps_list = eps

    try:
        policy = MPolicy.parse(cfg.m_policy)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.m_policy = str(policy)

    if cfg.n_list is None:
        cap = N_SQUARED_CAP if policy.kind == "n-squared" else max(DEFAULT_N)
        n_list = [n for n in DEFAULT_N if n <= cap]
    else:
        n_list = [_as_int(n, "N") for n in _split(cfg.n_list)]
    if not n_list:
        raise ConfigError("n_list is empty")
    for n in n_list:
        if n < 4 or n % 4:
            raise ConfigError(f"every N must be a positive multiple of 4, got {n}")
    cfg.n_list = sorted(set(n_list))

    problem = cfg.build_problem()
    for name in ("tau0", "sigma"):
        val = getattr(cfg, name)
        if val is None:
            val = getattr(problem, name)
        if val is None:
            val = 2.0 / problem.alpha
        try:
            val = float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a number, got {val!r}") from None
        if not val > 0:
            raise ConfigError(f"{name} must be positive, got {val}")
        setattr(cfg, name, val)
    if cfg.tau0 < 1.0 / problem.alpha:
        raise ConfigError(f"tau0={cfg.tau0} is below 1/alpha={1.0 / problem.alpha}")
    try:
        cfg.L_strategy = LStrategy.parse(cfg.L_strategy or problem.L_strategy or "logN").value
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    if cfg.refine not in ("bisect", "regenerate"):
        raise ConfigError(f"refine must be bisect or regenerate, got {cfg.refine!r}")
    if cfg.time_norm not in ("all", "final"):
        raise ConfigError(f"time_norm must be all or final, got {cfg.time_norm!r}")
    emit = []
    for e in _split(cfg.emit):
        if e not in EMIT_KINDS:
            raise ConfigError(f"unknown output kind {e!r}; choose from {', '.join(EMIT_KINDS)}")
        if e not in emit:
            emit.append(e)
    cfg.emit = emit
    if cfg.threads is not None:
        cfg.threads = _as_int(cfg.threads, "threads")
        if cfg.threads < 1:
            raise ConfigError("threads must be at least 1")
    cfg.out_dir = str(cfg.out_dir)
    return cfg


# ------------------------------------------------------------ argument parsing

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="layersolve",
        description="Double-mesh convergence tables for singularly perturbed parabolic turning-point problems.",
    )
    ap.add_argument("--config", help="JSON file with RunConfig keys; flags override it")
    ap.add_argument("--problem", help="p1 or p2 (default p2)")
    ap.add_argument("--p", help="odd exponent of the turning point for p2 (default 1)")
    ap.add_argument("--scheme", action="append", dest="scheme",
                    help="scheme to run; repeat for several (default: all three)")
    ap.add_argument("--schemes", help="comma separated scheme list")
    ap.add_argument("--eps-list", help="comma separated, e.g. 2^-6,2^-8 (default 2^-6 ... 2^-24)")
    ap.add_argument("--n-list", help="comma separated N values (default 32 ... 2048, 512 for n-squared)")
    ap.add_argument("--m-policy", help="equal-n, n-squared or fixed:<M> (default equal-n)")
    ap.add_argument("--tau0", help="layer width constant of the generalized Shishkin mesh")
    ap.add_argument("--L-strategy", dest="L_strategy", help="logN or lambertW")
    ap.add_argument("--sigma", help="layer width constant of the standard Shishkin mesh")
    ap.add_argument("--refine", help="bisect (nested fine grid) or regenerate")
    ap.add_argument("--time-norm", help="all: max over every time level, final: t = T only")
    ap.add_argument("--out-dir", help="output directory (default ./out)")
    ap.add_argument("--emit", help=f"comma separated subset of {','.join(EMIT_KINDS)}")
    ap.add_argument("--threads", help="worker threads for table cells (env LAYERSOLVE_THREADS)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def parse_config(args: Sequence[str] | argparse.Namespace, config_file=None) -> RunConfig:
    """Defaults, then the JSON config file, then explicit flags."""
    ns = build_parser().parse_args(list(args)) if not isinstance(args, argparse.Namespace) else args
    config_file = config_file or getattr(ns, "config", None)
    values: dict = {}
    if config_file:
        try:
            raw = json.loads(Path(config_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {config_file}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        for key in raw:
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
        values.update(raw)

    flags = {k: getattr(ns, k, None) for k in CONFIG_KEYS if k != "schemes"}
    values.update({k: v for k, v in flags.items() if v is not None})
    chosen = []
    if getattr(ns, "schemes", None) is not None:
        chosen += _split(ns.schemes)
    if getattr(ns, "scheme", None):
        chosen += list(ns.scheme)
    if getattr(ns, "schemes", None) is not None or getattr(ns, "scheme", None):
        values["schemes"] = chosen
    return _normalize(RunConfig(**values))


# ------------------------------------------------------------ running

def run_tables(cfg: RunConfig) -> list[ConvergenceTable]:
    problem = cfg.build_problem()
    tables = []
    for scheme in cfg.schemes:
        log.info("running %s on %s (%d eps x %d N)", scheme, cfg.problem, len(cfg.eps_list), len(cfg.n_list))
        tables.append(run_experiment(problem, scheme, cfg.eps_list, cfg.n_list, cfg.m_policy,
                                     cfg.mesh_options(), cfg.time_norm, cfg.threads))
    return tables


def emit_outputs(tables: Sequence[ConvergenceTable], config: RunConfig) -> tuple[list[Path], list[str]]:
    """Write the requested files; returns (written paths, error messages)."""
    if not tables:
        raise ValueError("no tables to write")
    out = Path(config.out_dir)
    written, errors = [], []

    def attempt(path: Path, writer) -> None:
        try:
            writer(path)
            written.append(path)
        except Exception as exc:
            errors.append(f"{path}: {type(exc).__name__}: {exc}")

    for tab in tables:
        stem = f"{tab.scheme.value}_{config.problem}"
        if "csv" in config.emit:
            attempt(out / f"{stem}.csv", tab.to_csv)
        if "md" in config.emit:
            attempt(out / f"{stem}.md", tab.to_markdown)
    if "svg" in config.emit:
        title = f"{config.problem}" + (f", p={config.p}" if config.problem == "P2" else "") + f", M policy {config.m_policy}"
        attempt(out / f"convergence_{config.problem}.svg", lambda p: convergence_svg(tables, p, title))
    if "surface" in config.emit:
        problem = config.build_problem()
        eps, N = min(config.eps_list), config.n_list[0]
        M = MPolicy.parse(config.m_policy)(N)
        for tab in tables:
            def dump(path, scheme=tab.scheme):
                solve(problem, scheme, N, M, eps, config.mesh_options()).to_surface_csv(path)
            attempt(out / f"surface_{tab.scheme.value}_{config.problem}.csv", dump)
    return written, errors


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(ns)
    except ConfigError as exc:
        print(f"layersolve: error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"{out} is not writable")
        (out / "config.json").write_text(cfg.to_json())
    except OSError as exc:
        print(f"layersolve: error: cannot use output directory: {exc}", file=sys.stderr)
        return 2

    tables = run_tables(cfg)
    status = 0
    for tab in tables:
        for (eps, N), msg in tab.failures.items():
            print(f"layersolve: {tab.scheme.value} eps={eps:.6g} N={N} failed: {msg}", file=sys.stderr)
            status = 1
    written, errors = emit_outputs(tables, cfg)
    for msg in errors:
        print(f"layersolve: write failed: {msg}", file=sys.stderr)
        status = 1
    for path in written:
        log.info("wrote %s", path)
    return status


if __name__ == "__main__":
    sys.exit(main())
