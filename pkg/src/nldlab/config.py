"""Problem ingestion: a strict YAML configuration surface.

The file has four sections -- ``problem``, ``run``, ``constants`` and
``output`` -- plus an optional ``sweep`` block.  Unknown keys are rejected
with path-qualified messages, every omitted field receives a documented
default, and parse -> emit -> parse is the identity.  See the README for the
full surface syntax.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from .coefficients import (
    ConstantCoefficient,
    DiffusionCoefficient,
    PiecewiseLinearCoefficient,
    RationalCoefficient,
    TabulatedCoefficient,
    build_staircase,
)
from .grids import RadialField, RadialGrid, build_grid

MODES = ("stationary", "pd_roots", "branch", "parabolic", "sweep", "verify")
FIELD_KINDS = ("constant", "polynomial", "tabulated")
COEFFICIENT_KINDS = ("constant", "rational", "piecewise_linear", "tabulated", "staircase")
FORMATS = ("csv", "xy")


class ConfigError(ValueError):
    pass


def _require(cond, path, message):
    if not cond:
        raise ConfigError(f"{path}: {message}")


def _check_keys(data: dict, allowed, path: str):
    _require(isinstance(data, dict), path, f"expected a mapping, got {type(data).__name__}")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


def _number(value, path, allow_none=False):
    if value is None and allow_none:
        return None
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             path, f"expected a number, got {value!r}")
    return float(value)


def _integer(value, path):
    _require(isinstance(value, int) and not isinstance(value, bool),
             path, f"expected an integer, got {value!r}")
    return int(value)


def _number_list(value, path):
    _require(isinstance(value, list) and len(value) > 0, path, "expected a nonempty list")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


@dataclass(frozen=True)
class FieldSpec:
    """Radial data: a constant, a polynomial in rho, or a sample table."""

    kind: str = "constant"
    value: float = 1.0
    coefficients: tuple = ()
    rho: tuple = ()
    values: tuple = ()

    def sample(self, grid: RadialGrid) -> np.ndarray:
        if self.kind == "constant":
            return np.full(grid.N + 1, self.value)
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(grid.nodes, list(self.coefficients))
        return np.interp(grid.nodes, list(self.rho), list(self.values))

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "polynomial":
            return {"kind": "polynomial", "coefficients": list(self.coefficients)}
        return {"kind": "tabulated", "rho": list(self.rho), "values": list(self.values)}


def _parse_field_spec(data, path, default_value=1.0, nonnegative=False) -> FieldSpec:
    if data is None:
        return FieldSpec(kind="constant", value=default_value)
    _require(isinstance(data, dict), path, "expected a field spec mapping")
    kind = data.get("kind", "constant")
    _require(kind in FIELD_KINDS, f"{path}.kind", f"expected one of {FIELD_KINDS}")
    if kind == "constant":
        _check_keys(data, {"kind", "value"}, path)
        value = _number(data.get("value", default_value), f"{path}.value")
        if nonnegative:
            _require(value >= 0, f"{path}.value", "must be nonnegative")
        return FieldSpec(kind="constant", value=value)
    if kind == "polynomial":
        _check_keys(data, {"kind", "coefficients"}, path)
        coeffs = _number_list(data.get("coefficients"), f"{path}.coefficients")
        return FieldSpec(kind="polynomial", coefficients=tuple(coeffs))
    _check_keys(data, {"kind", "rho", "values"}, path)
    rho = _number_list(data.get("rho"), f"{path}.rho")
    values = _number_list(data.get("values"), f"{path}.values")
    _require(len(rho) == len(values), path, "rho and values must have equal length")
    _require(all(b > a for a, b in zip(rho, rho[1:])), f"{path}.rho",
             "must be strictly increasing")
    if nonnegative:
        for i, v in enumerate(values):
            _require(v >= 0, f"{path}.values[{i}]", "must be nonnegative")
    return FieldSpec(kind="tabulated", rho=tuple(rho), values=tuple(values))


@dataclass(frozen=True)
class CoefficientSpec:
    kind: str = "constant"
    value: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.0
    domain: tuple = ()
    breakpoints: tuple = ()   # ((s, a), ...) for piecewise_linear
    s: tuple = ()
    a: tuple = ()
    c_min: float = 0.0
    c_max: float = 0.0
    a0: float = 1.0
    n1: int = 1

    def build(self) -> DiffusionCoefficient:
        if self.kind == "constant":
            return ConstantCoefficient(self.value)
        if self.kind == "rational":
            domain = self.domain if self.domain else None
            return RationalCoefficient(self.alpha, self.beta, self.gamma, domain=domain)
        if self.kind == "piecewise_linear":
            return PiecewiseLinearCoefficient([list(p) for p in self.breakpoints])
        if self.kind == "tabulated":
            return TabulatedCoefficient(list(self.s), list(self.a))
        coeff, _ = build_staircase(self.c_min, self.c_max, self.a0, self.n1)
        return coeff

    def staircase_breakpoints(self):
        """Breakpoints of a staircase spec, for the run manifest."""
        if self.kind != "staircase":
            return None
        _, bps = build_staircase(self.c_min, self.c_max, self.a0, self.n1)
        return [float(b) for b in bps]

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "rational":
            out = {"kind": "rational", "alpha": self.alpha, "beta": self.beta,
                   "gamma": self.gamma}
            if self.domain:
                out["domain"] = list(self.domain)
            return out
        if self.kind == "piecewise_linear":
            return {"kind": "piecewise_linear",
                    "breakpoints": [list(p) for p in self.breakpoints]}
        if self.kind == "tabulated":
            return {"kind": "tabulated", "s": list(self.s), "a": list(self.a)}
        return {"kind": "staircase", "c_min": self.c_min, "c_max": self.c_max,
                "a0": self.a0, "n1": self.n1}


def _parse_coefficient_spec(data, path) -> CoefficientSpec:
    if data is None:
        return CoefficientSpec()
    _require(isinstance(data, dict), path, "expected a coefficient spec mapping")
    kind = data.get("kind", "constant")
    _require(kind in COEFFICIENT_KINDS, f"{path}.kind",
             f"expected one of {COEFFICIENT_KINDS}")
    if kind == "constant":
        _check_keys(data, {"kind", "value"}, path)
        return CoefficientSpec(kind="constant",
                               value=_number(data.get("value", 1.0), f"{path}.value"))
    if kind == "rational":
        _check_keys(data, {"kind", "alpha", "beta", "gamma", "domain"}, path)
        domain = ()
        if data.get("domain") is not None:
            dlist = _number_list(data["domain"], f"{path}.domain")
            _require(len(dlist) == 2 and dlist[0] < dlist[1], f"{path}.domain",
                     "expected [lo, hi] with lo < hi")
            domain = tuple(dlist)
        return CoefficientSpec(
            kind="rational",
            alpha=_number(data.get("alpha", 1.0), f"{path}.alpha"),
            beta=_number(data.get("beta", 1.0), f"{path}.beta"),
            gamma=_number(data.get("gamma", 0.0), f"{path}.gamma"),
            domain=domain,
        )
    if kind == "piecewise_linear":
        _check_keys(data, {"kind", "breakpoints"}, path)
        bps = data.get("breakpoints")
        _require(isinstance(bps, list) and len(bps) >= 2, f"{path}.breakpoints",
                 "expected a list of at least two [s, a] pairs")
        parsed = []
        for i, pair in enumerate(bps):
            _require(isinstance(pair, list) and len(pair) == 2,
                     f"{path}.breakpoints[{i}]", "expected an [s, a] pair")
            parsed.append((_number(pair[0], f"{path}.breakpoints[{i}][0]"),
                           _number(pair[1], f"{path}.breakpoints[{i}][1]")))
        return CoefficientSpec(kind="piecewise_linear", breakpoints=tuple(parsed))
    if kind == "tabulated":
        _check_keys(data, {"kind", "s", "a"}, path)
        s = _number_list(data.get("s"), f"{path}.s")
        a = _number_list(data.get("a"), f"{path}.a")
        _require(len(s) == len(a), path, "s and a must have equal length")
        return CoefficientSpec(kind="tabulated", s=tuple(s), a=tuple(a))
    _check_keys(data, {"kind", "c_min", "c_max", "a0", "n1"}, path)
    return CoefficientSpec(
        kind="staircase",
        c_min=_number(data.get("c_min"), f"{path}.c_min"),
        c_max=_number(data.get("c_max"), f"{path}.c_max"),
        a0=_number(data.get("a0", 1.0), f"{path}.a0"),
        n1=_integer(data.get("n1", 1), f"{path}.n1"),
    )


@dataclass(frozen=True)
class ProblemBlock:
    n: int = 3
    R: float = 1.0
    N: int = 256
    r: float | None = None  # defaults to the diameter 2R
    f: FieldSpec = field(default_factory=FieldSpec)
    g: FieldSpec = field(default_factory=FieldSpec)
    u0: FieldSpec = field(default_factory=lambda: FieldSpec(value=0.0))
    coefficient: CoefficientSpec = field(default_factory=CoefficientSpec)

    @property
    def radius(self) -> float:
        return 2.0 * self.R if self.r is None else self.r


@dataclass(frozen=True)
class RunBlock:
    mode: str = "stationary"
    tol: float = 1e-10
    max_iter: int = 500
    dt: float | None = None
    T: float = 1.0
    stride: int = 100
    r_steps: int = 64
    t0: float | None = None  # absorbing-set settling window; defaults to T/4


@dataclass(frozen=True)
class ConstantsBlock:
    C1: float | None = None   # defaults to 1/sqrt(lambda_1) on the grid
    K_c: float = 1.0
    eps: float = 0.01
    mu_max: float | None = None


@dataclass(frozen=True)
class OutputBlock:
    directory: str = "out"
    formats: tuple = ("csv",)


@dataclass(frozen=True)
class SweepBlock:
    mode: str = "stationary"
    parameters: tuple = ()  # ((dotted path, (values...)), ...)


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemBlock = field(default_factory=ProblemBlock)
    run: RunBlock = field(default_factory=RunBlock)
    constants: ConstantsBlock = field(default_factory=ConstantsBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    sweep: SweepBlock | None = None

    def to_dict(self) -> dict:
        p = self.problem
        out = {
            "problem": {
                "n": p.n, "R": p.R, "N": p.N, "r": p.r,
                "f": p.f.to_dict(), "g": p.g.to_dict(), "u0": p.u0.to_dict(),
                "coefficient": p.coefficient.to_dict(),
            },
            "run": {
                "mode": self.run.mode, "tol": self.run.tol,
                "max_iter": self.run.max_iter, "dt": self.run.dt,
                "T": self.run.T, "stride": self.run.stride,
                "r_steps": self.run.r_steps, "t0": self.run.t0,
            },
            "constants": {
                "C1": self.constants.C1, "K_c": self.constants.K_c,
                "eps": self.constants.eps, "mu_max": self.constants.mu_max,
            },
            "output": {
                "directory": self.output.directory,
                "formats": list(self.output.formats),
            },
        }
        if self.sweep is not None:
            out["sweep"] = {
                "mode": self.sweep.mode,
                "parameters": {path: list(vals) for path, vals in self.sweep.parameters},
            }
        return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document (strict: unknown keys are
    errors, type mismatches carry the offending path)."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return parse_config_data(data)


def parse_config_data(data: dict | None) -> RunConfig:
    """Validate an already-deserialized configuration tree."""
    if data is None:
        data = {}
    _check_keys(data, {"problem", "run", "constants", "output", "sweep"}, "config")

    pdata = data.get("problem") or {}
    _check_keys(pdata, {"n", "R", "N", "r", "f", "g", "u0", "coefficient"}, "problem")
    n = _integer(pdata.get("n", 3), "problem.n")
    _require(n in (1, 2, 3), "problem.n", "must be 1, 2 or 3")
    R = _number(pdata.get("R", 1.0), "problem.R")
    _require(R > 0, "problem.R", "must be positive")
    N = _integer(pdata.get("N", 256), "problem.N")
    _require(N >= 8, "problem.N", "must be at least 8")
    r = _number(pdata.get("r"), "problem.r", allow_none=True)
    if r is not None:
        _require(0.0 <= r <= 2.0 * R, "problem.r", f"must lie in [0, {2 * R}]")
    problem = ProblemBlock(
        n=n, R=R, N=N, r=r,
        f=_parse_field_spec(pdata.get("f"), "problem.f", 1.0, nonnegative=True),
        g=_parse_field_spec(pdata.get("g"), "problem.g", 1.0, nonnegative=True),
        u0=_parse_field_spec(pdata.get("u0"), "problem.u0", 0.0),
        coefficient=_parse_coefficient_spec(pdata.get("coefficient"), "problem.coefficient"),
    )

    rdata = data.get("run") or {}
    _check_keys(rdata, {"mode", "tol", "max_iter", "dt", "T", "stride", "r_steps", "t0"}, "run")
    mode = rdata.get("mode", "stationary")
    _require(mode in MODES, "run.mode", f"expected one of {MODES}")
    run = RunBlock(
        mode=mode,
        tol=_number(rdata.get("tol", 1e-10), "run.tol"),
        max_iter=_integer(rdata.get("max_iter", 500), "run.max_iter"),
        dt=_number(rdata.get("dt"), "run.dt", allow_none=True),
        T=_number(rdata.get("T", 1.0), "run.T"),
        stride=_integer(rdata.get("stride", 100), "run.stride"),
        r_steps=_integer(rdata.get("r_steps", 64), "run.r_steps"),
        t0=_number(rdata.get("t0"), "run.t0", allow_none=True),
    )
    _require(run.tol > 0, "run.tol", "must be positive")
    _require(run.max_iter >= 1, "run.max_iter", "must be at least 1")
    _require(run.stride >= 1, "run.stride", "must be at least 1")
    _require(run.r_steps >= 1, "run.r_steps", "must be at least 1")
    if run.dt is not None:
        _require(run.dt > 0, "run.dt", "must be positive")
        _require(run.T >= run.dt, "run.T", "must cover at least one step")

    cdata = data.get("constants") or {}
    _check_keys(cdata, {"C1", "K_c", "eps", "mu_max"}, "constants")
    constants = ConstantsBlock(
        C1=_number(cdata.get("C1"), "constants.C1", allow_none=True),
        K_c=_number(cdata.get("K_c", 1.0), "constants.K_c"),
        eps=_number(cdata.get("eps", 0.01), "constants.eps"),
        mu_max=_number(cdata.get("mu_max"), "constants.mu_max", allow_none=True),
    )

    odata = data.get("output") or {}
    _check_keys(odata, {"directory", "formats"}, "output")
    directory = odata.get("directory", "out")
    _require(isinstance(directory, str) and directory, "output.directory",
             "expected a nonempty string")
    formats = odata.get("formats", ["csv"])
    _require(isinstance(formats, list) and formats, "output.formats",
             "expected a nonempty list")
    for i, fmt in enumerate(formats):
        _require(fmt in FORMATS, f"output.formats[{i}]", f"expected one of {FORMATS}")
    output = OutputBlock(directory=directory, formats=tuple(formats))

    sweep = None
    if "sweep" in data and data["sweep"] is not None:
        sdata = data["sweep"]
        _check_keys(sdata, {"mode", "parameters"}, "sweep")
        smode = sdata.get("mode", "stationary")
        _require(smode in MODES and smode not in ("sweep", "verify"), "sweep.mode",
                 "entries must run a non-sweep, non-verify mode")
        params = sdata.get("parameters") or {}
        _require(isinstance(params, dict) and params, "sweep.parameters",
                 "expected a nonempty mapping of dotted paths to value lists")
        parsed = []
        for path, values in params.items():
            _require(isinstance(values, list) and values, f"sweep.parameters.{path}",
                     "expected a nonempty list of values")
            parsed.append((path, tuple(values)))
        sweep = SweepBlock(mode=smode, parameters=tuple(sorted(parsed)))

    return RunConfig(problem=problem, run=run, constants=constants,
                     output=output, sweep=sweep)


def emit_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def realize_problem(cfg: RunConfig):
    """Build the grid, coefficient and data fields a run needs.

    Returns (grid, coefficient, f, g, u0, r).  Nonnegativity of f and g is
    enforced on the nodes; the initial value must satisfy the Dirichlet
    condition whenever a parabolic run will consume it.
    """
    p = cfg.problem
    grid = build_grid(p.n, p.R, p.N)
    f_vals = p.f.sample(grid)
    if np.any(f_vals < 0):
        node = int(np.argmin(f_vals))
        raise ConfigError(
            f"problem.f: negative value {f_vals[node]!r} at rho={grid.nodes[node]!r}; "
            "the source must be nonnegative"
        )
    g_vals = p.g.sample(grid)
    if np.any(g_vals < 0):
        node = int(np.argmin(g_vals))
        raise ConfigError(
            f"problem.g: negative value {g_vals[node]!r} at rho={grid.nodes[node]!r}; "
            "the interaction weight must be nonnegative"
        )
    u0_vals = p.u0.sample(grid)
    coeff = p.coefficient.build()
    return (grid, coeff, RadialField(grid, f_vals), RadialField(grid, g_vals),
            RadialField(grid, u0_vals), p.radius)
