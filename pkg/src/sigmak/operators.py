"""Residuals, linearizations, and numerical certificates.

The solver iterates on the multiplied form of the curvature equation,

    sigma_k(T) + a e^{2su} sigma_{k-1}(T) - r e^{2ksu} = 0,

where T is the case's curvature tensor (V for cases A and B, W for case C),
s is the conformal sign, and the weights (a, r) collect the case data:

    case A:  a = t alpha,                                r = (1-t) C(n,k) + t f
    case B:  a = -((1-t) C(n,k)/C(n,k-1) - t alpha),     r = 0
    case C:  a = alpha,                                  r = f.

The multiplied form is polynomial in T and needs no cone membership to
evaluate. The quotient form divides through by sigma_{k-1}(T); it is the
concave one, so it drives the diagnostics (ellipticity trace bound, the C0
comparison), but it demands the cone and a denominator floor.

The linearization is assembled analytically. Writing S for the matrix
weight d sigma_k(T) + a e^{2su} d sigma_{k-1}(T) and pushing it through the
tensor construction gives, for cases A and B with P = t S + (1-t) tr(S) I,

    second order   P + (tr P / (n-2)) I
    first order    2 tr(P) grad u - 2 P grad u
    zeroth order   2s (a e^{2su} sigma_{k-1}(T) - k r e^{2ksu}),

and for case C simply S, 2 S grad u - tr(S) grad u, and the same zeroth
pattern. For case A with alpha <= 0 (and case B with its positive quotient
weight) the zeroth coefficient is strictly negative, which is what makes the
linearized operator invertible on the periodic box.

A caution recorded here because it is easy to trip over: the second-order
coefficient family of the multiplied form is positive definite near solution
states but not at arbitrary cone points (the identity

    S = sigma_{k-1} F_quot + (residual'/sigma_{k-1}) d sigma_{k-1}

ties its definiteness to the size of the residual). The quotient-form family
is the one that is positive definite on the whole cone, and the ellipticity
certificate therefore reports both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix

from .curvature import ProblemSpec, build_u_tensor, build_v_tensor, build_w_tensor
from .errors import AdmissibilityError, DomainError, SingularityError, ValidationError
from .grid import (
    Grid,
    ScalarField,
    SymmetricTensorField,
    _d1,
    _d2,
    _dcross,
    grad_values,
    spectral_grad,
    spectral_hess,
)
from .symfunc import (
    ConeReport,
    sample_gamma,
    sigma_and_dsigma_batch,
    sigma_matrix_all_batch,
    sigma_matrix_batch,
)

# Floor under sigma_{k-1} for quotient-form evaluation: below it the state is
# treated as a cone exit rather than divided through.
SIGMA_FLOOR = 1e-12

# Concavity certificate knobs: probe step for line second differences, the
# cone margin required of sampled base spectra, and the (far smaller) margin
# required of the probe endpoints so every evaluation stays in the cone.
CONCAVITY_STEP = 1e-4
CONCAVITY_MARGIN = 1e-2
PROBE_MARGIN = 1e-8

# Truncation slack constant for the discrete C0 comparison: the maximum
# principle argument is exact in the continuum, and the discrete extremum
# obeys it up to O(h) from the stencil truncation.
C0_SLACK_CONSTANT = 1.0


def _argmin_node(values: np.ndarray) -> tuple:
    """Grid index of the minimizing entry, as a tuple of plain ints."""
    idx = np.unravel_index(int(np.argmin(values)), values.shape)
    return tuple(int(i) for i in idx)


def _argmax_node(values: np.ndarray) -> tuple:
    return _argmin_node(-values)


@dataclass(frozen=True)
class ResidualField:
    """Pointwise equation residual, tagged with the form that produced it
    so tolerances compare like with like."""

    values: ScalarField
    form: str

    def __post_init__(self):
        if self.form not in ("multiplied", "quotient"):
            raise DomainError(f"unknown residual form '{self.form}'")

    def max_abs(self) -> float:
        return self.values.max_abs()


@dataclass
class StateData:
    """Per-node quantities cached for one (u, t) state.

    Holding these in one place lets residual, linearization, certificates,
    and the solver's line search share a single recurrence pass.
    """

    spec: ProblemSpec
    t: float
    u: ScalarField
    gv: np.ndarray        # gradient of u, grid.shape + (n,)
    tensor: SymmetricTensorField   # V for cases A/B, W for case C
    mats: np.ndarray      # tensor as stacked matrices, grid.shape + (n, n)
    sig: np.ndarray       # sigma_0..sigma_k of the tensor, grid.shape + (k+1,)
    dk: np.ndarray        # d sigma_k / dM
    dkm1: np.ndarray      # d sigma_{k-1} / dM
    margins: np.ndarray   # grid.shape, min of sigma_1..sigma_m (m = required cone)
    e2su: np.ndarray      # exp(2 s u)
    e2ksu: np.ndarray     # exp(2 k s u)
    a_weight: np.ndarray  # weight multiplying e^{2su} sigma_{k-1}
    r_weight: np.ndarray  # right-hand side coefficient multiplying e^{2ksu}

    @property
    def cone_margin(self) -> float:
        return float(self.margins.min())

    def worst_node(self):
        """Grid index with the smallest cone margin, plus its ConeReport."""
        node = _argmin_node(self.margins)
        m = self.spec.required_cone
        sigmas = tuple(float(x) for x in self.sig[node][1:m + 1])
        margin = float(self.margins[node])
        return node, ConeReport(k=m, sigmas=sigmas, inside=margin > 0.0,
                                margin=margin)


def prepare_state(u: ScalarField, t: float, spec: ProblemSpec) -> StateData:
    """Build the cached state for (u, t): curvature tensor, sigma values and
    derivatives, cone margins, and the case weights."""
    if u.grid != spec.grid:
        raise DomainError("field grid does not match the problem grid")
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"homotopy parameter t must lie in [0, 1], got {t}")
    n, k = spec.n, spec.k
    if spec.case == "C":
        tensor = build_w_tensor(u, spec)
    else:
        tensor = build_v_tensor(build_u_tensor(u, t, spec), t)
    mats = tensor.as_matrices()
    sig, dk, dkm1 = sigma_and_dsigma_batch(mats, k)
    m = spec.required_cone
    margins = sig[..., 1:m + 1].min(axis=-1)

    s = spec.conformal_sign
    e2su = np.exp(2.0 * s * u.values)
    e2ksu = np.exp(2.0 * k * s * u.values)
    alpha = spec.alpha_field.values
    if spec.case == "A":
        a_weight = t * alpha
        r_weight = (1.0 - t) * math.comb(n, k) + t * spec.f_field.values
    elif spec.case == "B":
        q = (1.0 - t) * math.comb(n, k) / math.comb(n, k - 1) - t * alpha
        a_weight = -q
        r_weight = np.zeros(spec.grid.shape)
    else:
        a_weight = alpha
        r_weight = spec.f_field.values
    return StateData(spec=spec, t=t, u=u, gv=grad_values(u), tensor=tensor,
                     mats=mats, sig=sig, dk=dk, dkm1=dkm1, margins=margins,
                     e2su=e2su, e2ksu=e2ksu,
                     a_weight=np.broadcast_to(a_weight, spec.grid.shape),
                     r_weight=np.broadcast_to(r_weight, spec.grid.shape))


def _require_cone(sd: StateData, what: str) -> None:
    if sd.cone_margin <= 0.0:
        node, report = sd.worst_node()
        raise AdmissibilityError(
            f"{what} needs the state inside Gamma_{sd.spec.required_cone}",
            node=node, margin=report.margin)


def residual(u: ScalarField, t: float, spec: ProblemSpec,
             form: str = "multiplied", state: StateData | None = None) -> ResidualField:
    """Equation residual per node, in multiplied or quotient form.

    The multiplied form is defined everywhere. The quotient form requires the
    tensor inside the case's cone at every node (AdmissibilityError) and
    sigma_{k-1} at least SIGMA_FLOOR (SingularityError).
    """
    if form not in ("multiplied", "quotient"):
        raise DomainError(f"unknown residual form '{form}'")
    sd = state if state is not None else prepare_state(u, t, spec)
    k = spec.k
    sk = sd.sig[..., k]
    skm1 = sd.sig[..., k - 1]
    if form == "multiplied":
        vals = sk + sd.a_weight * sd.e2su * skm1 - sd.r_weight * sd.e2ksu
    else:
        _require_cone(sd, "quotient-form residual")
        low = float(skm1.min())
        if low < SIGMA_FLOOR:
            node = _argmin_node(skm1)
            raise SingularityError(
                f"sigma_{k - 1} = {low:.3e} below floor {SIGMA_FLOOR:.0e} "
                f"at node {node}")
        vals = sk / skm1 + sd.a_weight * sd.e2su - sd.r_weight * sd.e2ksu / skm1
    return ResidualField(values=ScalarField(spec.grid, vals), form=form)


@dataclass
class LinearOperator:
    """The linearized equation  L[phi] = G:hess(phi) + b.grad(phi) + c phi
    with periodic second-order stencils.

    second has shape grid.shape + (n, n) and is symmetric per node, first has
    shape grid.shape + (n,), zeroth has shape grid.shape. apply() acts on a
    full grid array; as_csr() assembles the same stencil as a sparse matrix
    (they agree to roundoff, which the tests pin down).
    """

    grid: Grid
    second: np.ndarray
    first: np.ndarray
    zeroth: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        g = self.grid
        h = g.h
        out = self.zeroth * values
        for i in range(g.n):
            out += self.second[..., i, i] * _d2(values, i, h)
            out += self.first[..., i] * _d1(values, i, h)
            for j in range(i + 1, g.n):
                out += 2.0 * self.second[..., i, j] * _dcross(values, i, j, h)
        return out

    def matvec(self, flat: np.ndarray) -> np.ndarray:
        """apply() on a flattened field; the shape scipy's solvers want."""
        return self.apply(flat.reshape(self.grid.shape)).ravel()

    def diagonal(self) -> np.ndarray:
        """Flattened stencil diagonal (for Jacobi preconditioning)."""
        trace = np.einsum("...ii->...", self.second)
        return (self.zeroth - 2.0 * trace / self.grid.h ** 2).ravel()

    def min_second_eigenvalues(self) -> np.ndarray:
        """Per-node smallest eigenvalue of the second-order coefficients."""
        return np.linalg.eigvalsh(self.second)[..., 0]

    def as_csr(self):
        g = self.grid
        n, h = g.n, g.h
        idx = np.arange(g.size).reshape(g.shape)
        rows, cols, vals = [], [], []

        def add(col_block, val_block):
            rows.append(idx.ravel())
            cols.append(col_block.ravel())
            vals.append(np.ascontiguousarray(val_block, dtype=float).ravel())

        trace = np.einsum("...ii->...", self.second)
        add(idx, self.zeroth - 2.0 * trace / h ** 2)
        for i in range(n):
            plus = np.roll(idx, -1, axis=i)
            minus = np.roll(idx, 1, axis=i)
            aii = self.second[..., i, i] / h ** 2
            bi = self.first[..., i] / (2.0 * h)
            add(plus, aii + bi)
            add(minus, aii - bi)
            for j in range(i + 1, n):
                aij = self.second[..., i, j] / (2.0 * h ** 2)
                add(np.roll(plus, -1, axis=j), aij)
                add(np.roll(minus, 1, axis=j), aij)
                add(np.roll(plus, 1, axis=j), -aij)
                add(np.roll(minus, -1, axis=j), -aij)
        mat = coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(g.size, g.size))
        return mat.tocsr()


def _coefficients(sd: StateData):
    """Analytic (second, first, zeroth) coefficient fields of the multiplied
    form's Frechet derivative at the cached state."""
    spec = sd.spec
    n, k, t = spec.n, spec.k, sd.t
    eye = np.eye(n)
    weight = (sd.a_weight * sd.e2su)[..., None, None]
    S = sd.dk + weight * sd.dkm1
    trS = np.einsum("...ii->...", S)
    if spec.case == "C":
        second = S
        first = 2.0 * np.einsum("...ij,...j->...i", S, sd.gv) \
            - trS[..., None] * sd.gv
    else:
        P = t * S + (1.0 - t) * trS[..., None, None] * eye
        trP = (t + n * (1.0 - t)) * trS
        second = P + (trP / (n - 2.0))[..., None, None] * eye
        first = 2.0 * trP[..., None] * sd.gv \
            - 2.0 * np.einsum("...ij,...j->...i", P, sd.gv)
    s = spec.conformal_sign
    zeroth = 2.0 * s * (sd.a_weight * sd.e2su * sd.sig[..., k - 1]
                        - k * sd.r_weight * sd.e2ksu)
    return second, first, zeroth


def linearize(u: ScalarField, t: float, spec: ProblemSpec,
              state: StateData | None = None) -> LinearOperator:
    """Frechet derivative of the multiplied-form residual with respect to u.

    Assembled analytically: d sigma terms via the derivative matrices from the
    recurrence, composed with the dependence of the curvature tensor on
    (hess u, grad u, u); zeroth-order terms from the explicit exponentials.
    """
    sd = state if state is not None else prepare_state(u, t, spec)
    _require_cone(sd, "linearization")
    second, first, zeroth = _coefficients(sd)
    return LinearOperator(grid=spec.grid, second=second, first=first,
                          zeroth=zeroth)


def _quotient_coefficients(sd: StateData, valid: np.ndarray):
    """Second-order coefficient family of the quotient-form operator
    G = sigma_k/sigma_{k-1} - (r e^{2ksu})/sigma_{k-1} + a e^{2su},
    evaluated where `valid` (cone membership and denominator floor) holds."""
    spec = sd.spec
    n, t = spec.n, sd.t
    k = spec.k
    eye = np.eye(n)
    skm1 = np.where(valid, sd.sig[..., k - 1], 1.0)
    sk = sd.sig[..., k]
    d_quot = sd.dk / skm1[..., None, None] \
        - (sk / skm1 ** 2)[..., None, None] * sd.dkm1
    h_field = sd.r_weight * sd.e2ksu
    pq = d_quot + (h_field / skm1 ** 2)[..., None, None] * sd.dkm1
    if spec.case == "C":
        return pq
    trp = np.einsum("...ii->...", pq)
    return t * pq + (1.0 - t) * trp[..., None, None] * eye


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, tuple):
        return "(" + ", ".join(str(int(v)) for v in value) + ")"
    return str(value)


@dataclass
class EllipticityReport:
    """Pointwise ellipticity audit of one state.

    newton_* rates the second-order coefficients the solver actually inverts
    (multiplied form); quotient_* rates the concave quotient family, whose
    smallest eigenvalue is positive on the whole cone and whose trace obeys
    the (n-k+1)/k lower bound.
    """

    case: str
    n: int
    k: int
    N: int
    t: float
    nodes: int
    nodes_outside_cone: int
    worst_margin: float
    worst_margin_node: tuple
    newton_min_eig: float
    newton_min_eig_node: tuple
    quotient_min_eig: float
    quotient_trace_min: float
    trace_bound: float
    trace_slack: float
    passed: bool

    def to_lines(self, prefix: str = "ellipticity") -> list:
        fields = [
            ("case", self.case), ("n", self.n), ("k", self.k), ("N", self.N),
            ("t", self.t), ("nodes", self.nodes),
            ("nodes_outside_cone", self.nodes_outside_cone),
            ("worst_margin", self.worst_margin),
            ("worst_margin_node", self.worst_margin_node),
            ("newton_min_eig", self.newton_min_eig),
            ("newton_min_eig_node", self.newton_min_eig_node),
            ("quotient_min_eig", self.quotient_min_eig),
            ("quotient_trace_min", self.quotient_trace_min),
            ("trace_bound", self.trace_bound),
            ("trace_slack", self.trace_slack),
            ("passed", self.passed),
        ]
        return [f"{prefix}.{key}: {_fmt(val)}" for key, val in fields]


def ellipticity_certificate(u: ScalarField, t: float, spec: ProblemSpec,
                            state: StateData | None = None) -> EllipticityReport:
    """Audit ellipticity at one state. Never raises: nodes outside the cone
    (or under the denominator floor) are counted and fail the certificate."""
    sd = state if state is not None else prepare_state(u, t, spec)
    n, k = spec.n, spec.k
    second, _, _ = _coefficients(sd)
    newton_eigs = np.linalg.eigvalsh(second)[..., 0]
    nm_node = _argmin_node(newton_eigs)
    worst_node = _argmin_node(sd.margins)

    valid = (sd.margins > 0.0) & (sd.sig[..., k - 1] >= SIGMA_FLOOR)
    outside = int(sd.margins.size - valid.sum())
    if valid.any():
        gq = _quotient_coefficients(sd, valid)
        q_eigs = np.where(valid, np.linalg.eigvalsh(gq)[..., 0], np.inf)
        q_traces = np.where(valid, np.einsum("...ii->...", gq), np.inf)
        q_min = float(q_eigs.min())
        q_trace_min = float(q_traces.min())
    else:
        q_min = float("nan")
        q_trace_min = float("nan")
    bound = (n - k + 1.0) / k
    slack = q_trace_min - bound
    newton_min = float(newton_eigs.min())
    passed = bool(outside == 0 and newton_min > 0.0 and q_min > 0.0
                  and slack >= -1e-10)
    return EllipticityReport(
        case=spec.case, n=n, k=k, N=spec.grid.N, t=float(t),
        nodes=int(sd.margins.size), nodes_outside_cone=outside,
        worst_margin=sd.cone_margin, worst_margin_node=worst_node,
        newton_min_eig=newton_min, newton_min_eig_node=nm_node,
        quotient_min_eig=q_min, quotient_trace_min=q_trace_min,
        trace_bound=bound, trace_slack=slack, passed=passed)


def _sigma_all_generic(lams: np.ndarray, kmax: int) -> np.ndarray:
    """Coefficient recurrence for sigma_0..sigma_kmax preserving the input
    dtype (the certificate runs it in extended precision)."""
    out = np.zeros(lams.shape[:-1] + (kmax + 1,), dtype=lams.dtype)
    out[..., 0] = 1.0
    for i in range(lams.shape[-1]):
        lam = lams[..., i]
        for j in range(min(i + 1, kmax), 0, -1):
            out[..., j] = out[..., j] + lam * out[..., j - 1]
    return out


def _quotient_g(xs: np.ndarray, ts: np.ndarray, hs: np.ndarray, k: int) -> np.ndarray:
    """G(x) = (sigma_k - h)/sigma_{k-1} evaluated at mu = t x + (1-t) tr(x) e."""
    mu = ts[:, None] * xs + ((1.0 - ts) * xs.sum(axis=-1))[:, None]
    sig = _sigma_all_generic(mu, k)
    return (sig[..., k] - hs) / sig[..., k - 1]


def line_second_difference(eta, t: float, h: float, d, k: int,
                           step: float = CONCAVITY_STEP) -> float:
    """Second central difference of G along eta + s*d at the given step,
    computed in extended precision. Concavity makes it nonpositive whenever
    the probe segment stays inside Gamma_{k-1}."""
    ld = np.longdouble
    eta = np.asarray(eta, dtype=ld)[None, :]
    d = np.asarray(d, dtype=ld)[None, :]
    ts = np.array([t], dtype=ld)
    hs = np.array([h], dtype=ld)
    s = ld(step)
    g0 = _quotient_g(eta, ts, hs, k)
    gp = _quotient_g(eta + s * d, ts, hs, k)
    gm = _quotient_g(eta - s * d, ts, hs, k)
    return float((gp - 2.0 * g0 + gm)[0] / s ** 2)


@dataclass
class ConcavityReport:
    """Sampling audit of concavity: line second differences of the quotient
    operator, and the sharpened Hessian inequality for G0 = -1/sigma_{k-1}
    (checked in the equivalent polynomial form

        sigma * sigma''  <=  (k/(k+1)) * (sigma')^2

    along matrix directions, obtained from the quadratic-form statement by
    multiplying through by sigma^3 > 0; the slack is reported relative to
    max(1, |terms|))."""

    n: int
    k: int
    samples: int
    seed: int
    step: float
    margin_floor: float
    line_max_second_diff: float
    line_violations: int
    hess_min_slack: float
    hess_violations: int
    passed: bool

    def to_lines(self, prefix: str = "concavity") -> list:
        fields = [
            ("n", self.n), ("k", self.k), ("samples", self.samples),
            ("seed", self.seed), ("step", self.step),
            ("margin_floor", self.margin_floor),
            ("line_max_second_diff", self.line_max_second_diff),
            ("line_violations", self.line_violations),
            ("hess_min_slack", self.hess_min_slack),
            ("hess_violations", self.hess_violations),
            ("passed", self.passed),
        ]
        return [f"{prefix}.{key}: {_fmt(val)}" for key, val in fields]


def _draw_concavity_samples(n: int, k: int, count: int,
                            rng: np.random.Generator):
    """Sample (eta, t, h, d, psi) tuples whose whole probe segment lies in
    Gamma_{k-1} (the hypothesis of the concavity statement), with enough
    margin at the endpoints to keep G finite."""
    step = CONCAVITY_STEP
    etas = np.empty((0, n))
    ts = np.empty(0)
    hs = np.empty(0)
    ds = np.empty((0, n))
    psis = np.empty((0, n, n))
    h_top = 2.0 * math.comb(n, k)
    while etas.shape[0] < count:
        m = max(count - etas.shape[0], 256)
        eta = sample_gamma(n, k - 1, m, rng, min_margin=CONCAVITY_MARGIN)
        t = rng.uniform(0.0, 1.0, m)
        h = rng.uniform(0.1, h_top, m)
        d = rng.normal(size=(m, n))
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        raw = rng.normal(size=(m, n, n))
        psi = 0.5 * (raw + np.swapaxes(raw, -1, -2))
        psi /= np.linalg.norm(psi, axis=(-2, -1), keepdims=True)
        ok = np.ones(m, dtype=bool)
        for shift in (0.0, step, -step):
            mu = t[:, None] * (eta + shift * d) \
                + ((1.0 - t) * (eta + shift * d).sum(axis=-1))[:, None]
            sig = _sigma_all_generic(mu, k - 1)
            ok &= sig[:, 1:].min(axis=-1) > PROBE_MARGIN
        etas = np.concatenate([etas, eta[ok]])
        ts = np.concatenate([ts, t[ok]])
        hs = np.concatenate([hs, h[ok]])
        ds = np.concatenate([ds, d[ok]])
        psis = np.concatenate([psis, psi[ok]])
    sl = slice(0, count)
    return etas[sl], ts[sl], hs[sl], ds[sl], psis[sl]


def _eq93_slacks(etas: np.ndarray, ts: np.ndarray, psis: np.ndarray,
                 k: int) -> np.ndarray:
    """Relative slack of the sharpened Hessian inequality for
    G0(U) = -1/sigma_{k-1}(t U + (1-t) tr(U) I) along matrix directions psi.

    sigma(s) = sigma_{k-1}(V + s Psi) is a polynomial of degree k-1 in s, so
    its derivatives at 0 are recovered exactly (to roundoff) from values at
    k integer nodes; no small-step cancellation is involved. The inequality

        -G0'' >= (1 + 1/(k+1)) (G0')^2 / G0

    is equivalent, after multiplying by sigma^3 > 0, to
    sigma sigma'' <= (k/(k+1)) (sigma')^2.
    """
    count, n = etas.shape
    m = k - 1
    nodes = np.arange(m + 1, dtype=float) - (m // 2)
    eye = np.eye(n)
    lam = np.zeros((count, n, n))
    lam[:, np.arange(n), np.arange(n)] = etas
    v = ts[:, None, None] * lam + ((1.0 - ts) * etas.sum(-1))[:, None, None] * eye
    trp = np.einsum("...ii->...", psis)
    big_psi = ts[:, None, None] * psis + ((1.0 - ts) * trp)[:, None, None] * eye
    stack = v[:, None] + nodes[None, :, None, None] * big_psi[:, None]
    vals = sigma_matrix_batch(stack.reshape(-1, n, n), m).reshape(count, m + 1)
    ainv = np.linalg.inv(np.vander(nodes, increasing=True))
    coef = vals @ ainv.T
    sig0 = vals[:, m // 2]
    d1 = coef[:, 1]
    d2 = 2.0 * coef[:, 2]
    num = (k / (k + 1.0)) * d1 ** 2 - sig0 * d2
    scale = np.maximum(1.0, d1 ** 2 + np.abs(sig0 * d2))
    return num / scale


def concavity_certificate(spec: ProblemSpec, samples: int,
                          seed: int) -> ConcavityReport:
    """Sampling certificate of operator concavity for the (n, k) of `spec`.

    Draws spectra in Gamma_{k-1} (margin floor CONCAVITY_MARGIN), homotopy
    weights t in [0, 1], equation weights h, unit line directions, and unit
    symmetric matrix directions. Checks (a) second central differences of
    G = (sigma_k - h)/sigma_{k-1} at mu = t eta + (1-t) tr(eta) e along
    lines, in extended precision, against +1e-8, and (b) the sharpened
    Hessian inequality for G0 in exact polynomial form against a relative
    -1e-8. Diagonal base points lose no generality: any base tensor is
    orthogonally equivalent to one, with the matrix direction transformed
    along."""
    if samples < 1:
        raise DomainError("samples must be positive")
    n, k = spec.n, spec.k
    rng = np.random.default_rng(seed)
    etas, ts, hs, ds, psis = _draw_concavity_samples(n, k, samples, rng)

    ld = np.longdouble
    step = ld(CONCAVITY_STEP)
    e_ld, t_ld, h_ld, d_ld = (a.astype(ld) for a in (etas, ts, hs, ds))
    g0 = _quotient_g(e_ld, t_ld, h_ld, k)
    gp = _quotient_g(e_ld + step * d_ld, t_ld, h_ld, k)
    gm = _quotient_g(e_ld - step * d_ld, t_ld, h_ld, k)
    d2 = ((gp - 2.0 * g0 + gm) / step ** 2).astype(float)
    line_max = float(d2.max())
    line_viol = int((d2 > 1e-8).sum())

    slack = _eq93_slacks(etas, ts, psis, k)
    hess_min = float(slack.min())
    hess_viol = int((slack < -1e-8).sum())
    return ConcavityReport(
        n=n, k=k, samples=samples, seed=seed, step=float(CONCAVITY_STEP),
        margin_floor=float(CONCAVITY_MARGIN),
        line_max_second_diff=line_max, line_violations=line_viol,
        hess_min_slack=hess_min, hess_violations=hess_viol,
        passed=bool(line_viol == 0 and hess_viol == 0))


def manufactured_forcing(u_star: ScalarField, t: float,
                         spec: ProblemSpec) -> ScalarField:
    """The forcing f that makes u_star an exact continuum solution.

    Derivatives of u_star are taken spectrally, so for band-limited u_star
    the returned field carries no truncation error and the discrete solve's
    deviation from u_star measures pure stencil error (the basis of the
    convergence study). Case A needs t > 0 (the f term enters with weight t);
    case B has no forcing to manufacture. The curvature tensor of u_star must
    be admissible and the resulting f positive, otherwise ValidationError.
    """
    if u_star.grid != spec.grid:
        raise DomainError("field grid does not match the problem grid")
    n, k = spec.n, spec.k
    eye = np.eye(n)
    gv = spectral_grad(u_star)
    hmat = spectral_hess(u_star).as_matrices()
    gsq = (gv ** 2).sum(axis=-1)
    outer = gv[..., :, None] * gv[..., None, :]
    alpha = spec.alpha_field.values
    uv = u_star.values
    if spec.case == "C":
        mats = hmat + outer - 0.5 * gsq[..., None, None] * eye \
            + spec.background.schouten0.as_matrices()
    elif spec.case == "A":
        if t <= 0.0:
            raise DomainError("case A forcing needs t > 0 (f enters with "
                              "weight t)")
        lap = np.einsum("...ii->...", hmat)
        u_mat = hmat + (lap / (n - 2.0))[..., None, None] * eye \
            + gsq[..., None, None] * eye - outer \
            - t * spec.background.ric0.as_matrices() / (n - 2.0) \
            + ((1.0 - t) / n) * eye
        tru = np.einsum("...ii->...", u_mat)
        mats = t * u_mat + (1.0 - t) * tru[..., None, None] * eye
    else:
        raise DomainError("case B prescribes f identically 0; nothing to "
                          "manufacture")
    sig = sigma_matrix_all_batch(mats, k)
    margins = sig[..., 1:k].min(axis=-1)
    worst = float(margins.min())
    if worst <= 0.0:
        node = _argmin_node(margins)
        raise ValidationError(
            f"curvature tensor of u_star leaves Gamma_{k - 1} at node "
            f"{node} (margin {worst:.3e})")
    s = spec.conformal_sign
    e2su = np.exp(2.0 * s * uv)
    e2ksu = np.exp(2.0 * k * s * uv)
    if spec.case == "C":
        f = (sig[..., k] + alpha * e2su * sig[..., k - 1]) / e2ksu
    else:
        f = ((sig[..., k] + t * alpha * e2su * sig[..., k - 1]) / e2ksu
             - (1.0 - t) * math.comb(n, k)) / t
    low = float(f.min())
    if low <= 0.0:
        node = _argmin_node(f)
        raise ValidationError(
            f"manufactured forcing must be positive; f = {low:.3e} at node "
            f"{node}")
    return ScalarField(spec.grid, f)


@dataclass
class C0Report:
    """Discrete analogue of the maximum-principle comparison behind the sup
    bound: at the discrete argmax of u the full quotient cannot exceed the
    quotient of the gradient-free comparison tensor (and conversely at the
    argmin), up to O(h) truncation slack."""

    case: str
    n: int
    k: int
    t: float
    h: float
    slack_delta: float
    max_node: tuple
    u_max: float
    min_node: tuple
    u_min: float
    quotient_at_max: float
    comparison_at_max: float
    gap_at_max: float
    quotient_at_min: float
    comparison_at_min: float
    gap_at_min: float
    sup_estimate: float
    inf_estimate: float
    within_slack: bool

    def to_lines(self, prefix: str = "c0") -> list:
        fields = [
            ("case", self.case), ("n", self.n), ("k", self.k), ("t", self.t),
            ("h", self.h), ("slack_delta", self.slack_delta),
            ("max_node", self.max_node), ("u_max", self.u_max),
            ("min_node", self.min_node), ("u_min", self.u_min),
            ("quotient_at_max", self.quotient_at_max),
            ("comparison_at_max", self.comparison_at_max),
            ("gap_at_max", self.gap_at_max),
            ("quotient_at_min", self.quotient_at_min),
            ("comparison_at_min", self.comparison_at_min),
            ("gap_at_min", self.gap_at_min),
            ("sup_estimate", self.sup_estimate),
            ("inf_estimate", self.inf_estimate),
            ("within_slack", self.within_slack),
        ]
        return [f"{prefix}.{key}: {_fmt(val)}" for key, val in fields]


def _mats_at(tensor: SymmetricTensorField, node: tuple) -> np.ndarray:
    comps = tensor.comps[node]
    n = tensor.grid.n
    mat = np.zeros((n, n))
    c = 0
    for i in range(n):
        for j in range(i, n):
            mat[i, j] = comps[c]
            mat[j, i] = comps[c]
            c += 1
    return mat


def _quotient_of(mat: np.ndarray, k: int) -> float:
    sig = _sigma_all_generic(np.linalg.eigvalsh(mat), k)
    if sig[1:k].min() <= 0.0 or sig[k - 1] < SIGMA_FLOOR:
        return float("nan")
    return float(sig[k] / sig[k - 1])


def c0_diagnostic(u: ScalarField, t: float, spec: ProblemSpec,
                  state: StateData | None = None) -> C0Report:
    """Check the discrete extremum comparison and emit the implied bounds.

    At the argmax of u the Hessian contribution is nonpositive and the
    gradient vanishes, so the state tensor is dominated by the comparison
    tensor B (cases A/B: -t ric0/(n-2) + ((1-t)/n) I pushed through the V
    map; case C: the background Schouten tensor), and quotient monotonicity
    plus concavity force quotient(state) <= quotient(comparison) there. The
    discrete check allows an O(h) slack. For cases A and B the comparison
    value feeds the closed-form sup/inf estimates; for case C the bound
    machinery targets the other conformal sign, so only the gaps are
    reported."""
    sd = state if state is not None else prepare_state(u, t, spec)
    n, k = spec.n, spec.k
    grid = spec.grid
    node_max = _argmax_node(u.values)
    node_min = _argmin_node(u.values)
    u_max = float(u.values[node_max])
    u_min = float(u.values[node_min])

    def state_quotient(node):
        sig = sd.sig[node]
        if sig[1:k].min() <= 0.0 or sig[k - 1] < SIGMA_FLOOR:
            return float("nan")
        return float(sig[k] / sig[k - 1])

    def comparison_matrix(node):
        if spec.case == "C":
            return _mats_at(spec.background.schouten0, node)
        b = -t * _mats_at(spec.background.ric0, node) / (n - 2.0) \
            + ((1.0 - t) / n) * np.eye(n)
        return t * b + (1.0 - t) * np.trace(b) * np.eye(n)

    q_max = state_quotient(node_max)
    q_min = state_quotient(node_min)
    bmat_max = comparison_matrix(node_max)
    bmat_min = comparison_matrix(node_min)
    qb_max = _quotient_of(bmat_max, k)
    qb_min = _quotient_of(bmat_min, k)
    gap_max = qb_max - q_max
    gap_min = q_min - qb_min
    delta = C0_SLACK_CONSTANT * grid.h

    sup_est = float("nan")
    inf_est = float("nan")
    if spec.case == "A":
        alpha = spec.alpha_field.values
        f = spec.f_field.values
        h_max = (1.0 - t) * math.comb(n, k) + t * float(f[node_max])
        h_min = (1.0 - t) * math.comb(n, k) + t * float(f[node_min])
        sig_b_max = _sigma_all_generic(np.linalg.eigvalsh(bmat_max), k)
        sig_b_min = _sigma_all_generic(np.linalg.eigvalsh(bmat_min), k)
        if sig_b_max[k] > 0.0:
            sup_est = math.log(sig_b_max[k] / h_max) / (2.0 * k)
        low = sig_b_min[k] + t * float(alpha[node_min]) \
            * math.exp(2.0 * u_min) * sig_b_min[k - 1]
        if low > 0.0:
            inf_est = math.log(low / h_min) / (2.0 * k)
    elif spec.case == "B":
        alpha = spec.alpha_field.values
        q_w_max = (1.0 - t) * math.comb(n, k) / math.comb(n, k - 1) \
            - t * float(alpha[node_max])
        q_w_min = (1.0 - t) * math.comb(n, k) / math.comb(n, k - 1) \
            - t * float(alpha[node_min])
        if qb_max > 0.0:
            sup_est = 0.5 * math.log(qb_max / q_w_max)
        if qb_min > 0.0:
            inf_est = 0.5 * math.log(qb_min / q_w_min)

    within = bool(gap_max >= -delta and gap_min >= -delta) \
        if np.isfinite(gap_max) and np.isfinite(gap_min) else False
    return C0Report(
        case=spec.case, n=n, k=k, t=float(t), h=grid.h, slack_delta=delta,
        max_node=node_max, u_max=u_max, min_node=node_min, u_min=u_min,
        quotient_at_max=q_max, comparison_at_max=qb_max, gap_at_max=gap_max,
        quotient_at_min=q_min, comparison_at_min=qb_min, gap_at_min=gap_min,
        sup_estimate=sup_est, inf_estimate=inf_est, within_slack=within)
