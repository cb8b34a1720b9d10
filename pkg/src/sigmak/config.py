"""Run configuration: flat `key = value` text, parsed and echoed exactly.

The format is deliberately minimal so diffs stay readable and the echo into
an output directory re-parses to an identical configuration:

    # comment lines start with '#'; blank lines are skipped
    seed = 12345
    spec.case = "A"
    spec.alpha = "-0.1"
    background.ric0.(1,1) = "-1"
    solver.dt_init = 0.1

Values are quoted strings (no embedded quotes), integers, floats, or
true/false. Unknown keys, duplicate keys, and malformed values are rejected
with the line number. All randomness downstream flows from the single `seed`
key. The default background is the canonical one (ric0 = -identity,
schouten0 = +identity); providing any component replaces that default
entirely, with omitted components zero.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import fieldexpr
from .curvature import CASES, Background, ProblemSpec
from .errors import ConfigError, ExprSyntaxError, SigmaKError
from .grid import Grid
from .report import KNOWN_CHECKS, _normalize_checks
from .solver import Schedule

_DEFAULT_CHECKS = ",".join(KNOWN_CHECKS)

_INT_RE = re.compile(r"^[+-]?\d+$")


@dataclass
class RunConfig:
    """Everything a run needs, with the library defaults (canonical case A)."""

    seed: int = 12345
    workers: int = 0
    case: str = "A"
    n: int = 3
    k: int = 3
    N: int = 16
    alpha: str = "-0.1"
    f: str = "0.7"
    ric0: dict = field(default_factory=dict)
    schouten0: dict = field(default_factory=dict)
    dt_init: float = 0.1
    dt_max: float = 0.25
    dt_min: float = 1e-6
    newton_tol: float = 1e-10
    newton_max_iters: int = 30
    cone_factor: float = 0.1
    armijo_factor: float = 0.25
    check_samples: int = 2000
    u_star: str = "0.1*sin(x1)*cos(x2)"
    checks: str = _DEFAULT_CHECKS
    ceiling_sup_u: float = 10.0
    ceiling_sup_grad_u_sq: float = 100.0
    ceiling_sup_hess_u: float = 100.0

    def __post_init__(self):
        if not self.ric0:
            self.ric0 = {f"({i},{i})": "-1" for i in range(1, self.n + 1)}
        if not self.schouten0:
            self.schouten0 = {f"({i},{i})": "1" for i in range(1, self.n + 1)}

    # -- validation ------------------------------------------------------

    def validate(self) -> None:
        """Range-check every knob and parse every expression; ConfigError on
        the first problem. Case sign invariants are checked later, on the
        sampled fields (ProblemSpec.validate)."""
        if self.case not in CASES:
            raise ConfigError(f"spec.case must be one of {CASES}, "
                              f"got {self.case!r}")
        if not 3 <= self.n <= 6:
            raise ConfigError(f"spec.n must lie in [3, 6], got {self.n}")
        if not 3 <= self.k <= self.n:
            raise ConfigError(f"spec.k must lie in [3, n={self.n}], "
                              f"got {self.k}")
        if not 8 <= self.N <= 128:
            raise ConfigError(f"spec.N must lie in [8, 128], got {self.N}")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.workers < 0:
            raise ConfigError("workers must be nonnegative (0 = auto)")
        if self.check_samples < 1:
            raise ConfigError("check.samples must be positive")
        for label, value in (("monitor.ceiling_sup_u", self.ceiling_sup_u),
                             ("monitor.ceiling_sup_grad_u_sq",
                              self.ceiling_sup_grad_u_sq),
                             ("monitor.ceiling_sup_hess_u",
                              self.ceiling_sup_hess_u)):
            if value <= 0.0:
                raise ConfigError(f"{label} must be positive")
        try:
            self.schedule()
        except SigmaKError as err:
            raise ConfigError(f"solver schedule: {err}") from err
        for label, src in (("spec.alpha", self.alpha), ("spec.f", self.f),
                           ("verify.u_star", self.u_star)):
            try:
                fieldexpr.parse(src, self.n)
            except ExprSyntaxError as err:
                raise ConfigError(f"{label}: {err}") from err
        for prefix, components in (("background.ric0", self.ric0),
                                   ("background.schouten0", self.schouten0)):
            for key, src in components.items():
                try:
                    _parse_component_key(key, self.n)
                    fieldexpr.parse(src, self.n)
                except (ConfigError, ExprSyntaxError) as err:
                    raise ConfigError(f"{prefix}.{key}: {err}") from err
        _normalize_checks(self.check_names())

    # -- derived objects -------------------------------------------------

    def grid(self) -> Grid:
        return Grid(self.n, self.N)

    def background(self, grid: Grid) -> Background:
        return Background.from_components(grid, ric0=self.ric0,
                                          schouten0=self.schouten0)

    def problem(self, grid: Grid | None = None) -> ProblemSpec:
        g = grid if grid is not None else self.grid()
        return ProblemSpec.build(self.case, self.n, self.k, g,
                                 alpha=self.alpha, f=self.f,
                                 background=self.background(g))

    def schedule(self) -> Schedule:
        return Schedule(dt_init=self.dt_init, dt_max=self.dt_max,
                        dt_min=self.dt_min, newton_tol=self.newton_tol,
                        newton_max_iters=self.newton_max_iters,
                        cone_factor=self.cone_factor,
                        armijo_factor=self.armijo_factor)

    def check_names(self) -> list:
        return [name.strip() for name in self.checks.split(",")
                if name.strip()]

    def checks_mapping(self) -> dict:
        ceilings = {"bounded_sup_u": self.ceiling_sup_u,
                    "bounded_sup_grad_u_sq": self.ceiling_sup_grad_u_sq,
                    "bounded_sup_hess_u": self.ceiling_sup_hess_u}
        return {name: ceilings.get(name) for name in self.check_names()}

    # -- serialization ---------------------------------------------------

    def to_text(self) -> str:
        def fmt(value) -> str:
            if isinstance(value, bool):
                return "true" if value else "false"
            if isinstance(value, int):
                return str(value)
            if isinstance(value, float):
                return repr(value)
            return _quote(value)

        lines = [
            f"seed = {fmt(self.seed)}",
            f"workers = {fmt(self.workers)}",
            f"spec.case = {fmt(self.case)}",
            f"spec.n = {fmt(self.n)}",
            f"spec.k = {fmt(self.k)}",
            f"spec.N = {fmt(self.N)}",
            f"spec.alpha = {fmt(self.alpha)}",
            f"spec.f = {fmt(self.f)}",
        ]
        for prefix, components in (("background.ric0", self.ric0),
                                   ("background.schouten0", self.schouten0)):
            for key in sorted(components, key=_component_sort_key):
                lines.append(f"{prefix}.{key} = {_quote(components[key])}")
        lines.extend([
            f"solver.dt_init = {fmt(self.dt_init)}",
            f"solver.dt_max = {fmt(self.dt_max)}",
            f"solver.dt_min = {fmt(self.dt_min)}",
            f"solver.newton_tol = {fmt(self.newton_tol)}",
            f"solver.newton_max_iters = {fmt(self.newton_max_iters)}",
            f"solver.cone_factor = {fmt(self.cone_factor)}",
            f"solver.armijo_factor = {fmt(self.armijo_factor)}",
            f"check.samples = {fmt(self.check_samples)}",
            f"verify.u_star = {fmt(self.u_star)}",
            f"monitor.checks = {fmt(self.checks)}",
            f"monitor.ceiling_sup_u = {fmt(self.ceiling_sup_u)}",
            f"monitor.ceiling_sup_grad_u_sq = {fmt(self.ceiling_sup_grad_u_sq)}",
            f"monitor.ceiling_sup_hess_u = {fmt(self.ceiling_sup_hess_u)}",
        ])
        return "\n".join(lines) + "\n"


_SCALAR_KEYS = {
    "seed": ("seed", int),
    "workers": ("workers", int),
    "spec.case": ("case", str),
    "spec.n": ("n", int),
    "spec.k": ("k", int),
    "spec.N": ("N", int),
    "spec.alpha": ("alpha", str),
    "spec.f": ("f", str),
    "solver.dt_init": ("dt_init", float),
    "solver.dt_max": ("dt_max", float),
    "solver.dt_min": ("dt_min", float),
    "solver.newton_tol": ("newton_tol", float),
    "solver.newton_max_iters": ("newton_max_iters", int),
    "solver.cone_factor": ("cone_factor", float),
    "solver.armijo_factor": ("armijo_factor", float),
    "check.samples": ("check_samples", int),
    "verify.u_star": ("u_star", str),
    "monitor.checks": ("checks", str),
    "monitor.ceiling_sup_u": ("ceiling_sup_u", float),
    "monitor.ceiling_sup_grad_u_sq": ("ceiling_sup_grad_u_sq", float),
    "monitor.ceiling_sup_hess_u": ("ceiling_sup_hess_u", float),
}


def _quote(text: str) -> str:
    if '"' in text or "\n" in text:
        raise ConfigError("string values cannot contain quotes or newlines")
    return f'"{text}"'


def _parse_component_key(key: str, n: int) -> str:
    m = re.match(r"^\((\d+),(\d+)\)$", key.strip())
    if m is None:
        raise ConfigError(f"malformed tensor component {key!r}; "
                          f"expected (i,j)")
    i, j = int(m.group(1)), int(m.group(2))
    if not (1 <= i <= n and 1 <= j <= n):
        raise ConfigError(f"component ({i},{j}) out of range for n={n}")
    return f"({min(i, j)},{max(i, j)})"


def _component_sort_key(key: str):
    m = re.match(r"^\((\d+),(\d+)\)$", key)
    return (int(m.group(1)), int(m.group(2))) if m else (99, 99)


def _parse_value(raw: str, lineno: int):
    raw = raw.strip()
    if raw.startswith('"'):
        if not (raw.endswith('"') and len(raw) >= 2):
            raise ConfigError(f"line {lineno}: unterminated string")
        body = raw[1:-1]
        if '"' in body:
            raise ConfigError(f"line {lineno}: embedded quote in string")
        return body
    if raw in ("true", "false"):
        return raw == "true"
    if _INT_RE.match(raw):
        return int(raw)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value {raw!r}") from None


def parse_config_text(text: str) -> RunConfig:
    """Parse configuration text into a RunConfig (not yet validated)."""
    kwargs = {}
    ric0 = {}
    schouten0 = {}
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        value = _parse_value(raw, lineno)
        if key in _SCALAR_KEYS:
            attr, kind = _SCALAR_KEYS[key]
            if kind is int:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"line {lineno}: {key} wants an integer")
                kwargs[attr] = value
            elif kind is float:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"line {lineno}: {key} wants a number")
                kwargs[attr] = float(value)
            else:
                if not isinstance(value, str):
                    raise ConfigError(f"line {lineno}: {key} wants a "
                                      f"quoted string")
                kwargs[attr] = value
        elif key.startswith("background.ric0."):
            if not isinstance(value, str):
                raise ConfigError(f"line {lineno}: tensor components want "
                                  f"quoted expression strings")
            ric0[key[len("background.ric0."):]] = value
        elif key.startswith("background.schouten0."):
            if not isinstance(value, str):
                raise ConfigError(f"line {lineno}: tensor components want "
                                  f"quoted expression strings")
            schouten0[key[len("background.schouten0."):]] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if ric0:
        kwargs["ric0"] = ric0
    if schouten0:
        kwargs["schouten0"] = schouten0
    cfg = RunConfig(**kwargs)
    cfg.ric0 = _canonical_components(cfg.ric0, cfg.n, "background.ric0")
    cfg.schouten0 = _canonical_components(cfg.schouten0, cfg.n,
                                          "background.schouten0")
    return cfg


def _canonical_components(components: dict, n: int, prefix: str) -> dict:
    out = {}
    for key, src in components.items():
        canon = _parse_component_key(key, n)
        if canon in out:
            raise ConfigError(f"{prefix}.{canon} given twice "
                              f"(components are symmetric)")
        out[canon] = src
    return out


def parse_config_file(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fp:
        return parse_config_text(fp.read())
