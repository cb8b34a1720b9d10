"""Symmetric-function layer: recurrences, cones, inequalities, derivatives."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_sigma, brute_sigma_all
from sigmak import (dsigma_matrix, in_gamma, newton_maclaurin_gap,
                    quotient_ratio_gap, sigma, sigma_matrix, sigma_minor)
from sigmak.errors import DomainError
from sigmak.symfunc import (sample_gamma, sigma_all, sigma_all_batch,
                            sigma_and_dsigma_batch, sigma_matrix_all_batch)


def test_sigma_small_hand_values():
    lam = np.array([1.0, 2.0, 3.0])
    assert sigma(lam, 1) == 6.0
    assert sigma(lam, 2) == 11.0
    assert sigma(lam, 3) == 6.0
    assert sigma_all(lam, 3).tolist() == [1.0, 6.0, 11.0, 6.0]


def test_sigma_identity_spectrum_binomials():
    for n in range(3, 7):
        lam = np.ones(n)
        for k in range(n + 1):
            assert sigma(lam, k) == math.comb(n, k)


def test_sigma_matches_brute_force_randoms():
    rng = np.random.default_rng(42)
    for n in range(3, 7):
        lams = rng.uniform(-3.0, 3.0, size=(50, n))
        got = sigma_all_batch(lams, n)
        for lam, row in zip(lams, got):
            want = brute_sigma_all(lam, n)
            scale = np.maximum(1.0, np.abs(brute_sigma_all(np.abs(lam), n)))
            assert np.all(np.abs(row - want) <= 1e-13 * scale)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(min_value=-4.0, max_value=4.0,
                          allow_nan=False), min_size=3, max_size=6),
       st.data())
def test_sigma_matches_brute_force_property(lam, data):
    lam = np.array(lam)
    k = data.draw(st.integers(min_value=1, max_value=lam.size))
    got = sigma(lam, k)
    want = brute_sigma(lam, k)
    scale = max(1.0, brute_sigma(np.abs(lam), k))
    assert abs(got - want) <= 1e-13 * scale


def test_sigma_domain_errors():
    lam = np.array([1.0, 2.0, 3.0])
    with pytest.raises(DomainError):
        sigma(lam, -1)
    with pytest.raises(DomainError):
        sigma(lam, 4)


def test_sigma_minor_expansion_identity():
    """sigma_k(lam) = lam_i sigma_{k-1}(lam \\ i) + sigma_k(lam \\ i)."""
    rng = np.random.default_rng(3)
    lam = rng.uniform(-2.0, 2.0, size=5)
    for k in range(1, 6):
        for i in range(5):
            rest_km1 = sigma_minor(lam, k - 1, i) if k - 1 >= 0 else 0.0
            rest_k = sigma_minor(lam, k, i) if k <= 4 else 0.0
            assert sigma(lam, k) == pytest.approx(
                lam[i] * rest_km1 + rest_k, rel=1e-12, abs=1e-12)


def test_in_gamma_membership_and_margin():
    inside = in_gamma(np.array([2.0, 1.0, 0.5]), 3)
    assert inside.inside and inside.margin == 1.0  # min(3.5, 3.5, 1.0)
    border = in_gamma(np.array([1.0, 1.0, -0.5]), 2)
    assert not border.inside and border.margin == 0.0
    outside = in_gamma(np.array([3.0, 1.0, -1.0]), 3)
    assert not outside.inside and outside.margin == -3.0
    # Gamma_1 only constrains the trace.
    assert in_gamma(np.array([3.0, 1.0, -1.0]), 1).inside


def test_gamma_chain_is_nested():
    rng = np.random.default_rng(8)
    for lam in sample_gamma(4, 4, 64, rng):
        for k in range(1, 5):
            assert in_gamma(lam, k).inside


def test_newton_maclaurin_equality_on_diagonal_ray():
    # On lam = c*(1,...,1) the inequality is tight for every (k, l).
    for c in (0.5, 1.0, math.e):
        lam = np.full(4, c)
        for k in range(2, 5):
            for l in range(1, k):
                assert newton_maclaurin_gap(lam, k, l) == pytest.approx(
                    0.0, abs=1e-12)


def test_newton_maclaurin_nonnegative_on_cone():
    rng = np.random.default_rng(5)
    for n in (3, 4, 5, 6):
        for k in range(3, n + 1):
            for lam in sample_gamma(n, k, 200, rng):
                for l in range(1, k):
                    assert newton_maclaurin_gap(lam, k, l) >= -1e-10


def test_newton_maclaurin_can_fail_outside_cone():
    # Informational boundary: part (1) of the lemma is a cone statement.
    lam = np.array([2.0, -1.0, 0.0])
    assert newton_maclaurin_gap(lam, 3, 1) < 0.0


def test_newton_maclaurin_domain_errors():
    lam = np.array([1.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        newton_maclaurin_gap(lam, 1, 1)
    with pytest.raises(DomainError):
        newton_maclaurin_gap(lam, 4, 1)


def test_ratio_monotonicity_on_cone():
    rng = np.random.default_rng(6)
    for n in (3, 4, 5):
        for lam in sample_gamma(n, n, 200, rng):
            for j in range(2, n + 1):
                assert quotient_ratio_gap(lam, j, 0, j - 1, 0) >= -1e-10


def test_ratio_gap_rejects_outside_cone():
    with pytest.raises(DomainError):
        quotient_ratio_gap(np.array([3.0, 1.0, -1.0]), 3, 0, 2, 0)


def test_sigma_matrix_diagonal_matches_spectrum():
    lam = np.array([0.5, 1.5, 2.5, -0.25])
    m = np.diag(lam)
    for k in range(1, 5):
        assert sigma_matrix(m, k) == pytest.approx(brute_sigma(lam, k),
                                                   rel=1e-13, abs=1e-13)


def test_sigma_matrix_invariant_under_conjugation():
    rng = np.random.default_rng(12)
    lam = rng.uniform(-2.0, 2.0, size=5)
    q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    m = q @ np.diag(lam) @ q.T
    m = 0.5 * (m + m.T)
    for k in range(1, 6):
        want = brute_sigma(lam, k)
        scale = max(1.0, brute_sigma(np.abs(lam), k))
        assert abs(sigma_matrix(m, k) - want) <= 1e-12 * scale


def test_dsigma_matrix_diagonal_values():
    """On diagonal matrices, (dsigma_k)_ii = sigma_{k-1} of the other
    eigenvalues and off-diagonal entries vanish."""
    lam = np.array([1.0, 2.0, 3.0, 4.0])
    m = np.diag(lam)
    for k in range(1, 5):
        d = dsigma_matrix(m, k).entries
        off = d - np.diag(np.diag(d))
        assert np.abs(off).max() <= 1e-12
        for i in range(4):
            assert d[i, i] == pytest.approx(sigma_minor(lam, k - 1, i),
                                            rel=1e-12, abs=1e-12)


def test_dsigma_euler_identity():
    rng = np.random.default_rng(9)
    raw = rng.standard_normal((100, 4, 4))
    mats = 0.5 * (raw + np.swapaxes(raw, -1, -2))
    for k in range(1, 5):
        sig, dk, dkm1 = sigma_and_dsigma_batch(mats, k)
        lhs = np.einsum("bij,bji->b", dk, mats)
        scale = np.maximum(1.0, np.abs(k * sig[:, k]))
        assert np.all(np.abs(lhs - k * sig[:, k]) <= 1e-12 * scale)
        if k >= 2:
            lhs2 = np.einsum("bij,bji->b", dkm1, mats)
            assert np.all(np.abs(lhs2 - (k - 1) * sig[:, k - 1])
                          <= 1e-12 * np.maximum(1.0, np.abs(sig[:, k - 1])))


def test_dsigma_matches_finite_differences():
    rng = np.random.default_rng(10)
    raw = rng.standard_normal((4, 4))
    m = 0.5 * (raw + raw.T)
    eps = 1e-6
    for k in range(1, 5):
        d = dsigma_matrix(m, k).entries
        for i in range(4):
            for j in range(i, 4):
                e = np.zeros((4, 4))
                e[i, j] = e[j, i] = 1.0
                fd = (sigma_matrix(m + eps * e, k)
                      - sigma_matrix(m - eps * e, k)) / (2 * eps)
                want = d[i, j] * (2.0 if i != j else 1.0)
                assert fd == pytest.approx(want, rel=1e-6, abs=1e-7)


def test_batch_shapes_and_scalar_agreement():
    rng = np.random.default_rng(11)
    mats = rng.standard_normal((2, 3, 5, 5))
    mats = 0.5 * (mats + np.swapaxes(mats, -1, -2))
    all_sig = sigma_matrix_all_batch(mats, 4)
    assert all_sig.shape == (2, 3, 5)
    assert all_sig[1, 2, 3] == pytest.approx(sigma_matrix(mats[1, 2], 3),
                                             rel=1e-12, abs=1e-12)


def test_sample_gamma_contract():
    rng = np.random.default_rng(21)
    out = sample_gamma(5, 3, 300, rng, min_margin=0.05)
    assert out.shape == (300, 5)
    margins = sigma_all_batch(out, 3)[:, 1:].min(axis=-1)
    assert margins.min() > 0.05
    # Deterministic under the same seed.
    again = sample_gamma(5, 3, 300, np.random.default_rng(21),
                         min_margin=0.05)
    assert np.array_equal(out, again)
    with pytest.raises(DomainError):
        sample_gamma(4, 5, 10, rng)
