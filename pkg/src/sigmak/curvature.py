"""Conformal curvature tensors on the periodic box.

Three symmetric tensors drive the equations, all assembled pointwise from a
scalar field u, its grid derivatives, and prescribed background data (flat
g0 = identity; all background curvature is injected as tensor fields):

  U(u, t) = Hess u + (1/(n-2)) (Lap u) I + |grad u|^2 I - du x du
            - t ric0/(n-2) + ((1-t)/n) I

  V(U, t) = t U + (1-t) (tr U) I            (the cone interpolation)

  W(u)    = Hess u + du x du - (1/2)|grad u|^2 I + schouten0

Cases A and B use the conformal factor g = e^{2u} g0 and the tensor V built
from U; case C uses g = e^{-2u} g0 and W (the Schouten tensor of the
conformal metric). The homotopy parameter t in U and V deforms the problem
to the t = 0 reference equation whose unique solution is u = 0.

ProblemSpec bundles the case tag, (n, k), coefficient expressions alpha and
f, and the background; validate() samples the coefficients and enforces the
per-case sign conditions before any solve touches the data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fieldexpr
from . import symfunc
from .errors import DomainError, ValidationError
from .grid import (
    Grid, ScalarField, SymmetricTensorField,
    comp_index, grad_values, hess, laplacian, sample,
)

__all__ = [
    "Background", "ProblemSpec", "ValidationReport",
    "build_u_tensor", "build_v_tensor", "build_w_tensor", "conformal_ricci",
    "cone_margins", "worst_cone_node",
]

CASES = ("A", "B", "C")


def _component_key(n: int, key) -> tuple:
    """Normalize a component designator: (i, j) tuple or "(i,j)" string,
    1-based as written in configuration files."""
    if isinstance(key, str):
        body = key.strip().strip("()")
        parts = body.split(",")
        if len(parts) != 2:
            raise DomainError(f"malformed tensor component name {key!r}")
        i, j = (int(p) for p in parts)
    else:
        i, j = key
    if not (1 <= i <= n and 1 <= j <= n):
        raise DomainError(f"component ({i},{j}) out of range for n={n}")
    return min(i, j), max(i, j)


@dataclass
class Background:
    """Prescribed background curvature: Ric_{g0} and the Schouten tensor
    A_{g0}, sampled from per-component expression strings."""

    ric0: SymmetricTensorField
    schouten0: SymmetricTensorField
    ric0_source: dict = field(default_factory=dict)
    schouten0_source: dict = field(default_factory=dict)

    @classmethod
    def from_components(cls, grid: Grid, ric0: dict | None = None,
                        schouten0: dict | None = None) -> "Background":
        """Build from maps of component name "(i,j)" (1-based) to expression
        text; omitted components are zero."""
        def build(components: dict | None):
            tensor = SymmetricTensorField.zeros(grid)
            source = {}
            for key, src in (components or {}).items():
                i, j = _component_key(grid.n, key)
                ast = fieldexpr.parse(src, grid.n)
                tensor.comps[..., comp_index(grid.n, i - 1, j - 1)] = \
                    sample(ast, grid).values
                source[f"({i},{j})"] = src
            return tensor, source

        ric_t, ric_src = build(ric0)
        sch_t, sch_src = build(schouten0)
        return cls(ric0=ric_t, schouten0=sch_t,
                   ric0_source=ric_src, schouten0_source=sch_src)

    @classmethod
    def isotropic(cls, grid: Grid, ric0_scale: float,
                  schouten0_scale: float = 1.0) -> "Background":
        n = grid.n
        return cls.from_components(
            grid,
            ric0={(i, i): repr(float(ric0_scale)) for i in range(1, n + 1)},
            schouten0={(i, i): repr(float(schouten0_scale)) for i in range(1, n + 1)},
        )

    def ric0_admissibility(self, k: int):
        """Cone margins of -ric0/(n-2) for Gamma_k (the case A/B precondition
        on the background). Returns (margins, worst node, worst report)."""
        n = self.ric0.grid.n
        mats = -self.ric0.as_matrices() / (n - 2)
        return cone_margins(mats, k)

    def schouten0_admissibility(self, k: int):
        """Cone margins of schouten0 for Gamma_k (case C precondition)."""
        return cone_margins(self.schouten0.as_matrices(), k)


def cone_margins(mats: np.ndarray, k: int):
    """Pointwise Gamma_k margins (min over j <= k of sigma_j of the
    eigenvalues) for stacked matrices. Returns (margins, argmin index tuple,
    ConeReport at the worst node)."""
    sig = symfunc.sigma_matrix_all_batch(mats, k)[..., 1:]
    margins = sig.min(axis=-1)
    flat = int(np.argmin(margins))
    node = (tuple(int(i) for i in np.unravel_index(flat, margins.shape))
            if margins.ndim else ())
    node = tuple(int(i) for i in node)
    worst = symfunc.ConeReport(
        k=k,
        sigmas=tuple(float(s) for s in sig[node]),
        inside=bool(margins[node] > 0.0),
        margin=float(margins[node]),
    )
    return margins, node, worst


def worst_cone_node(tensor: SymmetricTensorField, k: int):
    return cone_margins(tensor.as_matrices(), k)


@dataclass
class ValidationReport:
    case: str
    n: int
    k: int
    N: int
    conformal_sign: int
    alpha_min: float
    alpha_max: float
    f_min: float
    f_max: float
    theta: float
    background_cone_k: int
    background_margin_min: float
    problems: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.problems

    def to_lines(self) -> list:
        lines = [
            f"case: {self.case}",
            f"n: {self.n}",
            f"k: {self.k}",
            f"N: {self.N}",
            f"conformal_sign: {self.conformal_sign:+d}",
            f"alpha_min: {self.alpha_min!r}",
            f"alpha_max: {self.alpha_max!r}",
            f"f_min: {self.f_min!r}",
            f"f_max: {self.f_max!r}",
            f"theta: {self.theta!r}",
            f"background_cone_k: {self.background_cone_k}",
            f"background_margin_min: {self.background_margin_min!r}",
            f"valid: {str(self.ok).lower()}",
        ]
        for p in self.problems:
            lines.append(f"problem: {p}")
        return lines


@dataclass
class ProblemSpec:
    """One concrete equation: case tag, dimensions, coefficients, background.

    alpha and f are kept both as expression text (for echoing) and as sampled
    fields (what the solver actually reads). Case C may carry a manufactured
    f field with no expression source.
    """

    case: str
    n: int
    k: int
    grid: Grid
    alpha_src: str
    f_src: str
    alpha_field: ScalarField
    f_field: ScalarField
    background: Background

    @classmethod
    def build(cls, case: str, n: int, k: int, grid: Grid,
              alpha: str = "0", f: str = "0",
              background: Background | None = None) -> "ProblemSpec":
        if case not in CASES:
            raise DomainError(f"case must be one of {CASES}, got {case!r}")
        if grid.n != n:
            raise DomainError(f"grid dimension {grid.n} != spec n={n}")
        if not 3 <= k <= n:
            raise DomainError(f"need 3 <= k <= n={n}, got k={k}")
        if background is None:
            background = Background.from_components(grid)
        alpha_ast = fieldexpr.parse(alpha, n)
        f_ast = fieldexpr.parse(f, n)
        return cls(
            case=case, n=n, k=k, grid=grid,
            alpha_src=alpha, f_src=f,
            alpha_field=sample(alpha_ast, grid),
            f_field=sample(f_ast, grid),
            background=background,
        )

    def with_f_field(self, f_field: ScalarField, label: str = "<manufactured>"):
        """Copy of this spec with a directly prescribed f field."""
        return ProblemSpec(
            case=self.case, n=self.n, k=self.k, grid=self.grid,
            alpha_src=self.alpha_src, f_src=label,
            alpha_field=self.alpha_field, f_field=f_field,
            background=self.background,
        )

    @property
    def conformal_sign(self) -> int:
        """+1 when g = e^{2u} g0 (cases A, B); -1 when g = e^{-2u} g0 (C)."""
        return -1 if self.case == "C" else +1

    @property
    def required_cone(self) -> int:
        """Cone the homotopy tensor must stay in: Gamma_{k-1} for the
        quotient-type cases A and C, Gamma_k for case B."""
        return self.k if self.case == "B" else self.k - 1

    def validate(self, strict: bool = True) -> ValidationReport:
        """Check the per-case sign conditions on alpha and f and record the
        background admissibility margin. With strict=True a violated sign
        condition raises ValidationError."""
        a = self.alpha_field.values
        f = self.f_field.values
        problems = []
        if self.case == "A":
            if a.max() > 0.0:
                problems.append("case A requires alpha <= 0 pointwise")
            if f.min() <= 0.0:
                problems.append("case A requires f > 0 pointwise")
        elif self.case == "B":
            if a.max() >= 0.0:
                problems.append("case B requires alpha < 0 pointwise")
            if np.any(f != 0.0):
                problems.append("case B requires f identically 0")
        else:
            if f.min() <= 0.0:
                problems.append("case C requires f >= theta > 0 pointwise")
            if a.max() > 0.0:
                problems.append("case C requires alpha <= 0 pointwise")
        cone_k = self.k if self.case in ("A", "B") else self.k - 1
        if self.case in ("A", "B"):
            margins, _, _ = self.background.ric0_admissibility(cone_k)
        else:
            margins, _, _ = self.background.schouten0_admissibility(cone_k)
        report = ValidationReport(
            case=self.case, n=self.n, k=self.k, N=self.grid.N,
            conformal_sign=self.conformal_sign,
            alpha_min=float(a.min()), alpha_max=float(a.max()),
            f_min=float(f.min()), f_max=float(f.max()),
            theta=float(f.min()) if self.case == "C" else 0.0,
            background_cone_k=cone_k,
            background_margin_min=float(margins.min()),
            problems=tuple(problems),
        )
        if strict and problems:
            raise ValidationError("; ".join(problems))
        return report


def build_u_tensor(u: ScalarField, t: float, spec: ProblemSpec) -> SymmetricTensorField:
    """The homotopy curvature tensor U(u, t); affine in t."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"homotopy parameter t must lie in [0, 1], got {t}")
    g = u.grid
    n = g.n
    hess_u = hess(u)
    lap_u = laplacian(u).values
    gv = grad_values(u)
    grad_sq = np.einsum("...a,...a->...", gv, gv)
    iso = lap_u / (n - 2) + grad_sq + (1.0 - t) / n
    comps = hess_u.comps.copy()
    ric = spec.background.ric0.comps
    c = 0
    for i in range(n):
        comps[..., c] += iso - gv[..., i] * gv[..., i] - t * ric[..., c] / (n - 2)
        c += 1
        for j in range(i + 1, n):
            comps[..., c] += -gv[..., i] * gv[..., j] - t * ric[..., c] / (n - 2)
            c += 1
    return SymmetricTensorField(g, comps)


def build_v_tensor(u_tensor: SymmetricTensorField, t: float) -> SymmetricTensorField:
    """V = t U + (1 - t) (tr U) identity, the cone interpolation."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"homotopy parameter t must lie in [0, 1], got {t}")
    g = u_tensor.grid
    tr = u_tensor.trace()
    comps = t * u_tensor.comps
    c = 0
    for i in range(g.n):
        comps[..., c] += (1.0 - t) * tr
        c += 1 + (g.n - i - 1)
    return SymmetricTensorField(g, comps)


def build_w_tensor(u: ScalarField, spec: ProblemSpec) -> SymmetricTensorField:
    """W = Hess u + du x du - (1/2)|grad u|^2 I + schouten0 (case C)."""
    if spec.case != "C":
        raise DomainError(f"W is the case C tensor; spec case is {spec.case}")
    g = u.grid
    n = g.n
    hess_u = hess(u)
    gv = grad_values(u)
    grad_sq = np.einsum("...a,...a->...", gv, gv)
    comps = hess_u.comps.copy()
    sch = spec.background.schouten0.comps
    c = 0
    for i in range(n):
        for j in range(i, n):
            comps[..., c] += gv[..., i] * gv[..., j] + sch[..., c]
            if i == j:
                comps[..., c] -= 0.5 * grad_sq
            c += 1
    return SymmetricTensorField(g, comps)


def conformal_ricci(u: ScalarField, spec: ProblemSpec) -> SymmetricTensorField:
    """Ricci tensor of g = e^{2u} g0:
    Ric_g = (n-2)(-Hess u - (Lap u/(n-2)) I - |grad u|^2 I + du x du
            + ric0/(n-2)). Reporting/verification only."""
    g = u.grid
    n = g.n
    hess_u = hess(u)
    lap_u = laplacian(u).values
    gv = grad_values(u)
    grad_sq = np.einsum("...a,...a->...", gv, gv)
    comps = -hess_u.comps.copy()
    ric = spec.background.ric0.comps
    c = 0
    for i in range(n):
        for j in range(i, n):
            comps[..., c] += gv[..., i] * gv[..., j] + ric[..., c] / (n - 2)
            if i == j:
                comps[..., c] -= lap_u / (n - 2) + grad_sq
            c += 1
    comps *= (n - 2)
    return SymmetricTensorField(g, comps)
