"""Aggregates path monitors and diagnostics into verification reports.

A report answers, for one completed (possibly failed) continuation trace:
did the quantities the a priori estimates control stay bounded, did the
states stay in the cone, is the final state elliptic, and does the discrete
maximum-principle comparison hold there. Each configured check lands in the
report exactly once with a pass/fail/info status, a measured value, and the
tolerance it was held against. Reports carry no timestamps; identical runs
serialize to identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .curvature import ProblemSpec
from .errors import ConfigError
from .operators import c0_diagnostic
from .solver import ContinuationTrace

BOUNDED_CHECKS = {
    "bounded_sup_u": ("sup_u", 10.0),
    "bounded_sup_grad_u_sq": ("sup_grad_u_sq", 100.0),
    "bounded_sup_hess_u": ("sup_hess_u", 100.0),
}

KNOWN_CHECKS = (
    "bounded_sup_u",
    "bounded_sup_grad_u_sq",
    "bounded_sup_hess_u",
    "cone_margin",
    "ellipticity",
    "c0_comparison",
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str        # pass | fail | info
    value: float
    tolerance: float
    detail: str = ""

    def to_line(self) -> str:
        line = (f"check.{self.name}: {self.status} value={self.value!r} "
                f"tolerance={self.tolerance!r}")
        if self.detail:
            line += f" [{self.detail}]"
        return line


@dataclass
class VerificationReport:
    run_id: str
    spec_lines: list      # echo of the validated problem description
    trace_steps: int
    final_t: float
    reached_target: bool
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def to_text(self) -> str:
        lines = [f"run: {self.run_id}"]
        lines.extend(self.spec_lines)
        lines.append(f"trace.steps: {self.trace_steps}")
        lines.append(f"trace.final_t: {self.final_t!r}")
        lines.append(f"trace.reached_target: "
                     f"{'true' if self.reached_target else 'false'}")
        lines.extend(c.to_line() for c in self.checks)
        lines.append(f"result: {'pass' if self.ok else 'fail'}")
        return "\n".join(lines) + "\n"

    def to_json_text(self) -> str:
        def num(x):
            x = float(x)
            return x if np.isfinite(x) else None

        doc = {
            "run_id": self.run_id,
            "spec": list(self.spec_lines),
            "trace": {
                "steps": self.trace_steps,
                "final_t": num(self.final_t),
                "reached_target": self.reached_target,
            },
            "checks": [
                {
                    "name": c.name,
                    "status": c.status,
                    "value": num(c.value),
                    "tolerance": num(c.tolerance),
                    "detail": c.detail,
                }
                for c in self.checks
            ],
            "result": "pass" if self.ok else "fail",
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _normalize_checks(checks) -> tuple:
    """Accept None (all defaults), a sequence of names, or a mapping
    name -> ceiling override; return ((name, ceiling-or-None), ...)."""
    if checks is None:
        items = [(name, None) for name in KNOWN_CHECKS]
    elif isinstance(checks, dict):
        items = list(checks.items())
    else:
        items = [(name, None) for name in checks]
    seen = set()
    out = []
    for name, ceiling in items:
        if name not in KNOWN_CHECKS:
            raise ConfigError(f"unknown check '{name}'; known: "
                              f"{', '.join(KNOWN_CHECKS)}")
        if name in seen:
            raise ConfigError(f"check '{name}' listed twice")
        seen.add(name)
        out.append((name, None if ceiling is None else float(ceiling)))
    return tuple(out)


def _run_id(spec: ProblemSpec, trace: ContinuationTrace, items: tuple) -> str:
    digest = hashlib.sha256()
    digest.update(f"{spec.case}|{spec.n}|{spec.k}|{spec.grid.N}|"
                  f"{spec.alpha_src}|{spec.f_src}".encode())
    digest.update(trace.to_csv().encode())
    for name, ceiling in items:
        digest.update(f"{name}={ceiling}".encode())
    return digest.hexdigest()[:12]


def run_checks(trace: ContinuationTrace, spec: ProblemSpec,
               checks=None) -> VerificationReport:
    """Evaluate the configured checks against a trace.

    checks may be None (all known checks at default ceilings), a sequence of
    names, or a mapping of names to ceiling overrides for the bounded-*
    family. Unknown or duplicated names raise ConfigError. Inputs are not
    mutated; rerunning yields an identical report.
    """
    items = _normalize_checks(checks)
    rows = trace.rows
    results = []
    for name, ceiling in items:
        if name in BOUNDED_CHECKS:
            attr, default_ceiling = BOUNDED_CHECKS[name]
            limit = default_ceiling if ceiling is None else ceiling
            if rows:
                value = max(getattr(row, attr) for row in rows)
                status = "pass" if value <= limit else "fail"
                detail = ""
            else:
                value, status, detail = float("nan"), "fail", "empty trace"
            results.append(CheckResult(name, status, value, limit, detail))
        elif name == "cone_margin":
            if rows:
                value = min(row.cone_margin for row in rows)
                status = "pass" if value > 0.0 else "fail"
                detail = ""
            else:
                value, status, detail = float("nan"), "fail", "empty trace"
            results.append(CheckResult(name, status, value, 0.0, detail))
        elif name == "ellipticity":
            if trace.records:
                cert = trace.records[-1].ellipticity
                status = "pass" if cert.passed else "fail"
                detail = (f"quotient_trace_min={cert.quotient_trace_min!r} "
                          f"trace_bound={cert.trace_bound!r}")
                results.append(CheckResult(
                    name, status, cert.newton_min_eig, 0.0, detail))
            else:
                results.append(CheckResult(
                    name, "fail", float("nan"), 0.0, "empty trace"))
        elif name == "c0_comparison":
            if trace.final_state is not None:
                final = trace.final_state
                rep = c0_diagnostic(final.u, final.t, spec)
                gap = min(rep.gap_at_max, rep.gap_at_min)
                status = "pass" if rep.within_slack else "fail"
                detail = (f"gap_at_max={rep.gap_at_max!r} "
                          f"gap_at_min={rep.gap_at_min!r}")
                results.append(CheckResult(
                    name, status, gap, -rep.slack_delta, detail))
            else:
                results.append(CheckResult(
                    name, "fail", float("nan"), 0.0, "empty trace"))
    final_t = trace.final_t
    return VerificationReport(
        run_id=_run_id(spec, trace, items),
        spec_lines=spec.validate(strict=False).to_lines(),
        trace_steps=len(rows),
        final_t=final_t,
        reached_target=bool(rows and final_t == 1.0),
        checks=results)
