"""Residuals, linearization, and the certificate machinery."""

import math

import numpy as np
import pytest

from helpers import canonical_problem
from sigmak import (Grid, ScalarField, c0_diagnostic, concavity_certificate,
                    ellipticity_certificate, linearize, manufactured_forcing,
                    prepare_state, residual, sample_text)
from sigmak.errors import (AdmissibilityError, DomainError, SingularityError,
                           ValidationError)
from sigmak.grid import random_smooth_field
from sigmak.operators import line_second_difference
from sigmak.solver import solve_linear


# -- residual oracles --------------------------------------------------------

def test_residual_zero_at_homotopy_start():
    """At t=0 the tensor V(0) is the identity and u = 0 solves exactly."""
    for case in ("A", "B"):
        spec = canonical_problem(case)
        res = residual(ScalarField.zeros(spec.grid), 0.0, spec)
        assert res.max_abs() == 0.0


def test_residual_zero_at_constant_solutions():
    # Case A canonical: sigma_3(I) + alpha sigma_2(I) = 1 - 0.3 = 0.7 = f.
    spec = canonical_problem("A")
    assert residual(ScalarField.zeros(spec.grid), 1.0, spec).max_abs() == 0.0
    # Case B with alpha = -1/3: sigma_3(I) = (1/3) sigma_2(I).
    spec = canonical_problem("B")
    assert residual(ScalarField.zeros(spec.grid), 1.0, spec).max_abs() == 0.0
    # Case B with alpha = -1/(3 e^2): constant solution u = 1.
    spec = canonical_problem("B", alpha=repr(-1.0 / (3.0 * math.e ** 2)))
    u1 = ScalarField(spec.grid, np.ones(spec.grid.shape))
    assert residual(u1, 1.0, spec).max_abs() <= 1e-14
    # Case C with f = 1 + 3 alpha: W(0) = schouten0 = identity.
    spec = canonical_problem("C", alpha="-0.05", f="0.85")
    assert residual(ScalarField.zeros(spec.grid), 1.0, spec).max_abs() == 0.0


def test_quotient_form_is_multiplied_over_sigma():
    spec = canonical_problem("A")
    rng = np.random.default_rng(14)
    u = random_smooth_field(spec.grid, rng, amplitude=0.02)
    sd = prepare_state(u, 0.6, spec)
    mult = residual(u, 0.6, spec, form="multiplied", state=sd)
    quot = residual(u, 0.6, spec, form="quotient", state=sd)
    skm1 = sd.sig[..., spec.k - 1]
    back = quot.values.values * skm1
    assert np.abs(back - mult.values.values).max() <= 1e-12


def test_quotient_form_rejects_states_outside_cone():
    spec = canonical_problem("A")
    u = sample_text("0.5*sin(x1)*cos(x2)", spec.grid)  # exits Gamma_2
    sd = prepare_state(u, 1.0, spec)
    assert sd.cone_margin <= 0.0
    # Multiplied form still evaluates.
    residual(u, 1.0, spec, form="multiplied", state=sd)
    with pytest.raises(AdmissibilityError) as exc:
        residual(u, 1.0, spec, form="quotient", state=sd)
    assert exc.value.margin is not None and exc.value.margin <= 0.0
    with pytest.raises(AdmissibilityError):
        linearize(u, 1.0, spec, state=sd)


def test_residual_rejects_bad_inputs():
    spec = canonical_problem("A")
    u = ScalarField.zeros(spec.grid)
    with pytest.raises(DomainError):
        residual(u, -0.1, spec)
    with pytest.raises(DomainError):
        residual(u, 1.1, spec)
    with pytest.raises(DomainError):
        residual(u, 0.5, spec, form="exotic")
    other = ScalarField.zeros(Grid(3, 8))
    with pytest.raises(DomainError):
        residual(other, 0.5, spec)


# -- linearization ------------------------------------------------------------

def _directional_fd(u, t, spec, phi, eps=1e-6):
    up = ScalarField(spec.grid, u.values + eps * phi.values)
    um = ScalarField(spec.grid, u.values - eps * phi.values)
    rp = residual(up, t, spec).values.values
    rm = residual(um, t, spec).values.values
    return (rp - rm) / (2.0 * eps)


@pytest.mark.parametrize("case,t", [("A", 0.0), ("A", 0.7), ("B", 0.4),
                                    ("B", 1.0), ("C", 1.0)])
def test_linearize_matches_central_differences(case, t):
    spec = canonical_problem(case)
    rng = np.random.default_rng(hash((case, t)) % 2 ** 31)
    u = random_smooth_field(spec.grid, rng, amplitude=0.02)
    phi = random_smooth_field(spec.grid, rng, amplitude=1.0)
    op = linearize(u, t, spec)
    got = op.apply(phi.values)
    want = _directional_fd(u, t, spec, phi)
    scale = max(1.0, np.abs(want).max())
    assert np.abs(got - want).max() <= 1e-6 * scale


def test_linear_operator_routes_agree():
    spec = canonical_problem("A")
    rng = np.random.default_rng(15)
    u = random_smooth_field(spec.grid, rng, amplitude=0.02)
    op = linearize(u, 0.5, spec)
    phi = rng.standard_normal(spec.grid.shape)
    dense_route = op.apply(phi)
    flat_route = op.matvec(phi.ravel()).reshape(spec.grid.shape)
    csr_route = (op.as_csr() @ phi.ravel()).reshape(spec.grid.shape)
    assert np.abs(dense_route - flat_route).max() == 0.0
    assert np.abs(dense_route - csr_route).max() <= 1e-12
    diag = op.diagonal().reshape(spec.grid.shape)
    e0 = np.zeros(spec.grid.shape)
    e0[0, 0, 0] = 1.0
    assert op.apply(e0)[0, 0, 0] == pytest.approx(diag[0, 0, 0], rel=1e-12)


def test_zeroth_order_sign_matches_case():
    """c < 0 for the positive-sign cases (A, B), c > 0 for case C."""
    for case, sign in (("A", -1.0), ("B", -1.0), ("C", +1.0)):
        spec = canonical_problem(case)
        op = linearize(ScalarField.zeros(spec.grid), 1.0, spec)
        assert np.all(sign * op.zeroth > 0.0)


# -- certificates -------------------------------------------------------------

def test_ellipticity_certificate_closed_form_values():
    spec = canonical_problem("A")
    u0 = ScalarField.zeros(spec.grid)
    cert0 = ellipticity_certificate(u0, 0.0, spec)
    # second = k C(n,k) (2n-2)/(n-2) I at the start: 3*1*4/1 = 12.
    assert cert0.passed
    assert cert0.newton_min_eig == pytest.approx(12.0, rel=1e-12)
    assert cert0.quotient_min_eig == pytest.approx(1.0, rel=1e-12)
    assert cert0.quotient_trace_min == pytest.approx(3.0, rel=1e-12)
    assert cert0.trace_bound == pytest.approx(1.0 / 3.0, rel=1e-15)
    cert1 = ellipticity_certificate(u0, 1.0, spec)
    assert cert1.passed
    assert cert1.newton_min_eig == pytest.approx(3.2, rel=1e-12)
    assert cert1.quotient_min_eig == pytest.approx(4.0 / 15.0, rel=1e-12)
    assert cert1.quotient_trace_min == pytest.approx(0.8, rel=1e-12)


def test_ellipticity_certificate_flags_cone_exit():
    spec = canonical_problem("A")
    u = sample_text("0.5*sin(x1)*cos(x2)", spec.grid)
    cert = ellipticity_certificate(u, 1.0, spec)
    assert not cert.passed
    assert cert.nodes_outside_cone > 0
    assert cert.worst_margin < 0.0


def test_ellipticity_can_fail_inside_cone_for_multiplied_family():
    """The multiplied-form second-order family is not unconditionally
    positive on the cone; a state can sit inside Gamma_2 and still fail
    the Newton-family eigenvalue check while the quotient family stays
    elliptic. The certificate must report this honestly."""
    spec = canonical_problem("A")
    u = sample_text("0.5*sin(x1)", spec.grid)
    cert = ellipticity_certificate(u, 1.0, spec)
    assert cert.nodes_outside_cone == 0
    assert cert.worst_margin > 0.0
    assert not cert.passed
    assert cert.newton_min_eig < 0.0
    assert cert.quotient_min_eig > 0.0


def test_ellipticity_trace_bound_all_cases():
    for case in ("A", "B", "C"):
        spec = canonical_problem(case)
        rng = np.random.default_rng(16)
        u = random_smooth_field(spec.grid, rng, amplitude=0.02)
        cert = ellipticity_certificate(u, 1.0, spec)
        assert cert.passed, (case, cert.to_lines())
        assert cert.quotient_trace_min >= cert.trace_bound - 1e-10


def test_concavity_certificate_passes_and_is_deterministic():
    spec = canonical_problem("A")
    a = concavity_certificate(spec, samples=500, seed=3)
    b = concavity_certificate(spec, samples=500, seed=3)
    assert a.passed
    assert a.line_violations == 0 and a.hess_violations == 0
    assert a.line_max_second_diff <= 1e-8
    assert a.hess_min_slack >= -1e-8
    assert a.to_lines() == b.to_lines()


def test_line_second_difference_negative_inside_cone():
    # G restricted to a line through a well-interior point must curve down.
    eta = np.array([1.0, 1.0, 1.0])
    d = np.array([1.0, -0.5, 0.2])
    d = d / np.linalg.norm(d)
    val = line_second_difference(eta, 0.7, 0.5, d, 3, 1e-4)
    assert val < 0.0


# -- manufactured forcing ------------------------------------------------------

def test_manufactured_forcing_constant_oracles():
    # Case A at t=1, u* = 0: f = sigma_3(I) + alpha sigma_2(I) = 0.7.
    spec = canonical_problem("A")
    f = manufactured_forcing(ScalarField.zeros(spec.grid), 1.0, spec)
    assert np.abs(f.values - 0.7).max() <= 1e-14
    # Case C, u* = 0: f = sigma_3(I) + alpha sigma_2(I) = 0.85.
    spec = canonical_problem("C")
    f = manufactured_forcing(ScalarField.zeros(spec.grid), 1.0, spec)
    assert np.abs(f.values - 0.85).max() <= 1e-14


def test_manufactured_forcing_rejections():
    with pytest.raises(DomainError):
        manufactured_forcing(ScalarField.zeros(Grid(3, 16)), 1.0,
                             canonical_problem("B"))
    specA = canonical_problem("A")
    with pytest.raises(DomainError):
        manufactured_forcing(ScalarField.zeros(specA.grid), 0.0, specA)
    big = sample_text("5*sin(x1)*cos(x2)", specA.grid)
    with pytest.raises(ValidationError):
        manufactured_forcing(big, 1.0, specA)


def test_manufactured_forcing_roundtrip_residual():
    """With spectral derivatives the discrete residual at u* is O(h^2),
    not zero; check it shrinks by ~4x under grid doubling."""
    norms = {}
    for N in (16, 32):
        spec = canonical_problem("C", N=N)
        star = sample_text("0.1*sin(x1)*cos(x2)", spec.grid)
        f = manufactured_forcing(star, 1.0, spec)
        spec2 = spec.with_f_field(f)
        norms[N] = residual(star, 1.0, spec2).max_abs()
    assert norms[16] / norms[32] == pytest.approx(4.0, rel=0.35)


# -- C0 comparison -------------------------------------------------------------

def test_c0_diagnostic_exact_at_constant_state():
    spec = canonical_problem("A")
    diag = c0_diagnostic(ScalarField.zeros(spec.grid), 1.0, spec)
    assert diag.within_slack
    assert diag.gap_at_max == 0.0 and diag.gap_at_min == 0.0
    # sup estimate: e^{2k u} <= sigma_k(V_B)/f = 1/0.7.
    assert diag.sup_estimate == pytest.approx(math.log(1.0 / 0.7) / 6.0,
                                              rel=1e-12)
    assert diag.inf_estimate == pytest.approx(0.0, abs=1e-12)


def test_c0_diagnostic_case_c_reports_gaps_only():
    spec = canonical_problem("C")
    diag = c0_diagnostic(ScalarField.zeros(spec.grid), 1.0, spec)
    assert diag.within_slack
    assert math.isnan(diag.sup_estimate) and math.isnan(diag.inf_estimate)


def test_c0_diagnostic_holds_along_a_solve():
    from sigmak.solver import Schedule, continue_path
    spec = canonical_problem("A", alpha="-0.1",
                             f="0.7 + 0.05*sin(x1)*cos(x2)")
    spec.validate(strict=True)
    trace = continue_path(spec, Schedule())
    final = trace.final_state
    diag = c0_diagnostic(final.u, final.t, spec)
    assert diag.within_slack, diag.to_lines()
    assert final.u.max_abs() <= diag.sup_estimate + spec.grid.h
