"""Convergence studies, stability sweeps and profile dumps.

Studies are described by small dataclasses that can be read from an INI file.
Every study reads the shared ``[problem]`` section plus its own section; any
key may be overridden with ``section.key=value`` strings.
"""

from __future__ import annotations

import configparser
import csv
import datetime as dt
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, Iterable, Optional, Sequence, TypeVar

import numpy as np

from tempered_ldg.mesh import sample
from tempered_ldg.problems import ProblemSpec, make_problem
from tempered_ldg.projections import PROJECTIONS
from tempered_ldg.timestep import run

logger = logging.getLogger(__name__)

__version__ = "0.1.0"

STABILITY_RTOL = 1.0e-10
PROFILE_POINTS_PER_DEGREE = 10

T = TypeVar("T")
R = TypeVar("R")


class ConfigError(ValueError):
    """Invalid or inconsistent study configuration."""


class StudyError(RuntimeError):
    """A solver run inside a study failed."""

    def __init__(self, message: str, row: int) -> None:
        super().__init__(message)
        self.row = row


# {{{ configuration


def _floats(text: str) -> tuple[float, ...]:
    return tuple(_number(item) for item in text.replace(";", ",").split(",") if item.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(item) for item in text.replace(";", ",").split(",") if item.strip())


def _number(text: str) -> float:
    """Parse ``0.25``, ``1/40`` or ``2/3``."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


@dataclass(frozen=True)
class ProblemConfig:
    name: str = "example1"
    alpha: float = 0.5
    lam: float = 1.5
    kappa: float = 1.0
    beta: float = 4.0
    sigma: float = 0.01
    T: Optional[float] = None

    def build(self) -> ProblemSpec:
        kwargs: dict[str, float] = {"alpha": self.alpha, "lam": self.lam}
        if self.name == "example1":
            kwargs.update(kappa=self.kappa, beta=self.beta)
        elif self.name == "example3":
            kwargs["sigma"] = self.sigma
        if self.T is not None:
            kwargs["T"] = self.T
        try:
            return make_problem(self.name, **kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class SpatialStudy:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    k: int = 2
    q: int = 2
    r: float = 1.5
    meshes: tuple[int, ...] = (10, 20, 40, 80)
    initial_projection: str = "l2"
    timestamp: Optional[str] = None


@dataclass(frozen=True)
class TemporalStudy:
    problem: ProblemConfig = field(default_factory=lambda: ProblemConfig(lam=3.0))
    k: int = 2
    q: int = 1
    N: int = 500
    steps: tuple[int, ...] = (5, 10, 20, 40)
    initial_projection: str = "l2"
    timestamp: Optional[str] = None


@dataclass(frozen=True)
class StabilitySweep:
    problem: ProblemConfig = field(default_factory=lambda: ProblemConfig(name="example2"))
    alphas: tuple[float, ...] = (0.1, 0.5, 0.9)
    lambdas: tuple[float, ...] = (0.0, 1.0, 5.0)
    tau_rules: tuple[str, ...] = ("h^2", "h", "10h")
    N: int = 20
    k: int = 1
    q: int = 1


@dataclass(frozen=True)
class ProfileRun:
    problem: ProblemConfig = field(
        default_factory=lambda: ProblemConfig(name="example3", lam=2.0, T=0.1)
    )
    N: int = 320
    k: int = 1
    q: int = 1
    r: float = 2.0
    times: tuple[float, ...] = (0.01, 0.05, 0.1)
    initial_nodes: Optional[int] = None


@dataclass(frozen=True)
class SolveRun:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    N: int = 20
    k: int = 1
    q: int = 1
    steps: int = 100
    initial_projection: str = "l2"


SECTION_TYPES = {
    "solve": SolveRun,
    "converge-space": SpatialStudy,
    "converge-time": TemporalStudy,
    "stability": StabilitySweep,
    "profile": ProfileRun,
}

_PROBLEM_KEYS = {"name": str, "alpha": _number, "lambda": _number, "kappa": _number,
                 "beta": _number, "sigma": _number, "T": _number}
_FIELD_PARSERS: dict[str, Callable[[str], object]] = {
    "k": int, "q": int, "N": int, "r": _number, "steps": None, "meshes": _ints,
    "alphas": _floats, "lambdas": _floats, "times": _floats,
    "tau_rules": lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
    "initial_projection": str, "timestamp": str, "initial_nodes": int,
}  # fmt: skip


def read_config(
    path: Optional[str] = None,
    overrides: Iterable[str] = (),
    text: Optional[str] = None,
) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep "T" and "N" case
    try:
        if path is not None:
            with open(path, encoding="utf-8") as fp:
                parser.read_file(fp)
        if text is not None:
            parser.read_string(text)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from exc

    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, option = key.strip().rpartition(".")
        if not sep or not dot or not option:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, option, value.strip())
    return parser


def build_study(parser: configparser.ConfigParser, kind: str):
    """Instantiate the study dataclass for subcommand ``kind``."""
    try:
        cls = SECTION_TYPES[kind]
    except KeyError:
        raise ConfigError(f"unknown study {kind!r}") from None

    defaults = cls()
    problem = defaults.problem
    if parser.has_section("problem"):
        updates = {}
        for key, value in parser.items("problem"):
            if key not in _PROBLEM_KEYS:
                raise ConfigError(f"unknown key problem.{key}")
            try:
                updates["lam" if key == "lambda" else key] = _PROBLEM_KEYS[key](value)
            except ValueError as exc:
                raise ConfigError(f"bad value for problem.{key}: {value!r}") from exc
        problem = ProblemConfig(**{**asdict(problem), **updates})

    values: dict[str, object] = {"problem": problem}
    names = {f.name for f in fields(cls)} - {"problem"}
    if parser.has_section(kind):
        for key, value in parser.items(kind):
            if key not in names:
                raise ConfigError(f"unknown key {kind}.{key}")
            parse = _FIELD_PARSERS[key]
            if key == "steps":
                parse = int if cls is SolveRun else _ints
            try:
                values[key] = parse(value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {kind}.{key}: {value!r}") from exc

    study = cls(**{**{f.name: getattr(defaults, f.name) for f in fields(cls)}, **values})
    _validate(study)
    return study


def _validate(study) -> None:
    if getattr(study, "initial_projection", "l2") not in PROJECTIONS:
        raise ConfigError(f"unknown initial projection {study.initial_projection!r}")
    if hasattr(study, "k") and study.k < 0:
        raise ConfigError("k must be non-negative")
    if hasattr(study, "q") and not 1 <= study.q <= 5:
        raise ConfigError("q must be in 1..5")
    for name in ("meshes", "steps"):
        seq = getattr(study, name, None)
        if isinstance(seq, tuple) and (not seq or min(seq) < 1):
            raise ConfigError(f"{name} must be a non-empty list of positive integers")
    if isinstance(study, StabilitySweep):
        for rule in study.tau_rules:
            _tau_from_rule(rule, 1.0)
    if not 0.0 < study.problem.alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")


# }}}


# {{{ reports


def observed_orders(sizes: Sequence[float], errors: Sequence[float]) -> list[Optional[float]]:
    """``log(e_{i-1}/e_i) / log(s_{i-1}/s_i)``; ``None`` for the first row or zero errors."""
    orders: list[Optional[float]] = [None]
    for i in range(1, len(errors)):
        e0, e1 = errors[i - 1], errors[i]
        if e0 > 0.0 and e1 > 0.0 and sizes[i - 1] != sizes[i]:
            orders.append(math.log(e0 / e1) / math.log(sizes[i - 1] / sizes[i]))
        else:
            orders.append(None)
    return orders


@dataclass(frozen=True)
class ReportRow:
    h: float
    tau: float
    l2_error: float
    order: Optional[float]


@dataclass(frozen=True)
class ConvergenceReport:
    """Rows ordered by decreasing ``h`` (spatial) or ``tau`` (temporal)."""

    kind: str
    rows: tuple[ReportRow, ...]
    metadata: tuple[tuple[str, str], ...]

    @classmethod
    def from_errors(
        cls,
        kind: str,
        hs: Sequence[float],
        taus: Sequence[float],
        errors: Sequence[float],
        metadata: dict[str, object],
    ) -> ConvergenceReport:
        if kind not in ("space", "time"):
            raise ValueError(f"unknown report kind {kind!r}")
        sizes = hs if kind == "space" else taus
        orders = observed_orders(sizes, errors)
        rows = tuple(
            ReportRow(float(h), float(t), float(e), o)
            for h, t, e, o in zip(hs, taus, errors, orders)
        )
        meta = tuple((str(k), _format_meta(v)) for k, v in metadata.items() if k != "kind")
        return cls(kind, rows, (("kind", kind),) + meta)

    @property
    def orders(self) -> list[Optional[float]]:
        return [row.order for row in self.rows]

    @property
    def errors(self) -> list[float]:
        return [row.l2_error for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.metadata:
            buf.write(f"# {key}={value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["h", "tau", "l2_error", "order"])
        for row in self.rows:
            order = "" if row.order is None else f"{row.order:.4f}"
            writer.writerow([f"{row.h:.17g}", f"{row.tau:.17g}", f"{row.l2_error:.17g}", order])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> ConvergenceReport:
        meta: list[tuple[str, str]] = []
        body = []
        for line in text.splitlines():
            if line.startswith("# "):
                key, _, value = line[2:].partition("=")
                meta.append((key, value))
            elif line.strip():
                body.append(line)
        records = list(csv.DictReader(body))
        hs = [float(r["h"]) for r in records]
        taus = [float(r["tau"]) for r in records]
        errs = [float(r["l2_error"]) for r in records]
        metadata = dict(meta)
        kind = metadata.get("kind", "space")
        # orders are re-derived at full precision from the stored errors
        report = cls.from_errors(kind, hs, taus, errs, {})
        return cls(kind, report.rows, tuple(meta))


def _format_meta(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (tuple, list)):
        return ",".join(_format_meta(v) for v in value)
    return str(value)


def _timestamp(configured: Optional[str]) -> str:
    if configured:
        return configured
    return dt.datetime.now(dt.timezone.utc).replace(microsecond=0).isoformat()


# }}}


# {{{ studies


def _map_ordered(fn: Callable[[T], R], items: Sequence[T], threads: int) -> list[R]:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def steps_for(T_final: float, tau: float) -> int:
    """Number of uniform steps so that the step size is at most ``tau`` and divides ``T``."""
    # guard against ceil(4.000000000001)
    ratio = T_final / tau
    nearest = round(ratio)
    if abs(ratio - nearest) <= 1.0e-9 * max(1.0, ratio):
        return max(int(nearest), 1)
    return max(math.ceil(ratio), 1)


def _final_error(problem: ProblemSpec, N: int, k: int, q: int, M: int, proj: str) -> float:
    result = run(problem, N, k, q, M, initial_projection=proj, errors="final")
    err = result.final_error
    if err is None or not math.isfinite(err):
        raise FloatingPointError("error norm is not finite")
    return err


def _study_metadata(study, problem: ProblemSpec, extra: dict[str, object]) -> dict[str, object]:
    meta = problem.metadata()
    meta.update(
        {
            "beta": study.problem.beta if problem.label == "example1" else "",
            "k": study.k,
            "q": study.q,
            "initial_projection": study.initial_projection,
        }
    )
    meta.update(extra)
    meta["timestamp"] = _timestamp(study.timestamp)
    meta["version"] = __version__
    return meta


def run_spatial_study(study: SpatialStudy, *, threads: int = 1) -> ConvergenceReport:
    """One solve per mesh with ``tau = T / ceil(T / h^r)``."""
    problem = study.problem.build()
    if problem.exact is None:
        raise ConfigError(f"{problem.label} has no exact solution")

    width = problem.domain[1] - problem.domain[0]
    meshes = sorted(study.meshes)
    hs = [width / N for N in meshes]
    Ms = [steps_for(problem.T, h**study.r) for h in hs]

    def solve(i: int) -> float:
        try:
            return _final_error(problem, meshes[i], study.k, study.q, Ms[i],
                                study.initial_projection)
        except (ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
            raise StudyError(f"row {i} (N={meshes[i]}, M={Ms[i]}) failed: {exc}", i) from exc

    errors = _map_ordered(solve, list(range(len(meshes))), threads)
    taus = [problem.T / M for M in Ms]
    meta = _study_metadata(study, problem, {"r": study.r})
    return ConvergenceReport.from_errors("space", hs, taus, errors, meta)


def run_temporal_study(study: TemporalStudy, *, threads: int = 1) -> ConvergenceReport:
    """Fixed mesh, step counts from ``study.steps`` (coarse to fine)."""
    problem = study.problem.build()
    if problem.exact is None:
        raise ConfigError(f"{problem.label} has no exact solution")

    steps = sorted(study.steps)
    h = (problem.domain[1] - problem.domain[0]) / study.N

    def solve(i: int) -> float:
        try:
            return _final_error(problem, study.N, study.k, study.q, steps[i],
                                study.initial_projection)
        except (ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
            raise StudyError(f"row {i} (M={steps[i]}) failed: {exc}", i) from exc

    errors = _map_ordered(solve, list(range(len(steps))), threads)
    taus = [problem.T / M for M in steps]
    meta = _study_metadata(study, problem, {"N": study.N})
    return ConvergenceReport.from_errors("time", [h] * len(steps), taus, errors, meta)


def _tau_from_rule(rule: str, h: float) -> float:
    """``"h^2"``, ``"h"``, ``"10h"``, ``"0.5*h"`` or a plain number."""
    text = rule.replace(" ", "").replace("*", "")
    try:
        if text.endswith("h") or "h^" in text:
            coef, _, power = text.partition("h")
            c = _number(coef) if coef else 1.0
            p = _number(power[1:]) if power.startswith("^") else 1.0
            if power and not power.startswith("^"):
                raise ValueError(rule)
            return c * h**p
        return _number(text)
    except ValueError:
        raise ConfigError(f"cannot parse time-step rule {rule!r}") from None


@dataclass(frozen=True)
class StabilityResult:
    alpha: float
    lam: float
    tau_rule: str
    N: int
    tau: float
    norms: np.ndarray = field(repr=False)

    @property
    def max_ratio(self) -> float:
        if self.norms[0] == 0.0:
            return 0.0 if not np.any(self.norms) else math.inf
        return float(np.max(self.norms) / self.norms[0])

    @property
    def passed(self) -> bool:
        return bool(np.all(self.norms <= self.norms[0] * (1.0 + STABILITY_RTOL)))


def run_stability_sweep(sweep: StabilitySweep, *, threads: int = 1) -> list[StabilityResult]:
    base = sweep.problem
    if base.name == "example1":
        raise ConfigError("stability sweeps need a homogeneous problem (example2 or example3)")

    cases = [
        (a, lam, rule) for a in sweep.alphas for lam in sweep.lambdas for rule in sweep.tau_rules
    ]

    def solve(case: tuple[float, float, str]) -> StabilityResult:
        alpha, lam, rule = case
        cfg = ProblemConfig(**{**asdict(base), "alpha": alpha, "lam": lam})
        problem = cfg.build()
        h = (problem.domain[1] - problem.domain[0]) / sweep.N
        M = steps_for(problem.T, _tau_from_rule(rule, h))
        result = run(problem, sweep.N, sweep.k, sweep.q, M, errors="none")
        return StabilityResult(alpha, lam, rule, sweep.N, result.tau, result.norms)

    return _map_ordered(solve, cases, threads)


def stability_csv(results: Sequence[StabilityResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["alpha", "lambda", "tau_rule", "N", "tau", "n", "t", "norm", "passed"])
    for res in results:
        for n, norm in enumerate(res.norms):
            writer.writerow([
                f"{res.alpha:.17g}", f"{res.lam:.17g}", res.tau_rule, res.N,
                f"{res.tau:.17g}", n, f"{n * res.tau:.17g}", f"{norm:.17g}",
                int(res.passed),
            ])  # fmt: skip
    return buf.getvalue()


@dataclass(frozen=True)
class Profile:
    t: float
    x: np.ndarray
    u: np.ndarray


def run_profile(cfg: ProfileRun) -> list[Profile]:
    """Sample the solution at ``10 (k + 1)`` points per cell at each requested time.

    Requested times are rounded to the nearest time level.
    """
    problem = cfg.problem.build()
    h = (problem.domain[1] - problem.domain[0]) / cfg.N
    M = steps_for(problem.T, h**cfg.r)
    tau = problem.T / M

    wanted = []
    for t in cfg.times:
        if t < 0.0 or t > problem.T * (1.0 + 1.0e-12):
            raise ConfigError(f"sample time {t} lies outside [0, {problem.T}]")
        wanted.append(min(int(round(t / tau)), M))
    last = max(wanted, default=0)

    snapshots = {}

    def grab(state) -> None:
        if state.n in wanted:
            snapshots[state.n] = state.current

    # march only as far as the last requested time, on the full-horizon grid
    truncated = replace(problem, T=last * tau) if last > 0 else problem
    result = run(truncated, cfg.N, cfg.k, cfg.q, last, initial_nodes=cfg.initial_nodes,
                 errors="none", callback=grab)
    snapshots[0] = result.state.snapshot(0)

    points = PROFILE_POINTS_PER_DEGREE * (cfg.k + 1)
    profiles = []
    for n in wanted:
        x, u = sample(snapshots[n], points)
        profiles.append(Profile(n * tau, x, u))
    return profiles


def profile_csv(profiles: Sequence[Profile]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "x", "u"])
    for prof in profiles:
        for x, u in zip(prof.x, prof.u):
            writer.writerow([f"{prof.t:.17g}", f"{x:.17g}", f"{u:.17g}"])
    return buf.getvalue()


# }}}
