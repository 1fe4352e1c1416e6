import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dcmvoter.degseq import alternate, degree_stats, eulerian, in_regular, out_regular, regular
from dcmvoter.theory import (
    DomainError,
    TABLE_COLUMNS,
    closed_form_theta,
    constants_from_tuple,
    epsilon_fn,
    figure1_sequences,
    g_table,
    g_weight,
    limit_scalings,
    phi,
    return_law,
    table_row,
    theory_constants,
    theta_design_form,
)


def test_regular3_constants():
    c = theory_constants(regular(3, 100))
    assert c.p_frak == pytest.approx(1.0, rel=1e-14)
    assert c.q_frak == pytest.approx(1 / 3, rel=1e-14)
    assert c.r_frak == pytest.approx(math.sqrt(1.5), rel=1e-14)
    assert c.theta == pytest.approx(math.sqrt(1.5), rel=1e-14)
    assert c.phi == pytest.approx(math.sqrt(1.5) - 1, rel=1e-13)


def test_alternate24_constants():
    # rational stats feed the oracle; only the square root is irrational
    delta, beta, rho, gamma = Fraction(3), Fraction(10, 3), Fraction(5, 12), Fraction(3, 2)
    alpha = (gamma - rho) / (1 - rho)
    p = (alpha + beta - 1) / delta
    q = alpha / (alpha + beta - 1)
    r = float(rho) / (float(rho) - float(q) * (1 - math.sqrt(1 - float(rho))))
    c = theory_constants(alternate(2, 4, 1000))
    assert c.p_frak == pytest.approx(float(p), rel=1e-14)
    assert c.q_frak == pytest.approx(float(q), rel=1e-14)
    assert c.r_frak == pytest.approx(r, rel=1e-13)
    assert (c.p_frak, c.q_frak, c.r_frak, c.theta) == pytest.approx((1.396825, 0.443182, 1.335595, 0.956167), abs=2e-6)
    assert theta_design_form(3, 10 / 3, 5 / 12, 1.5) == pytest.approx(c.theta, rel=1e-12)


def test_eulerian_theta():
    c = theory_constants(eulerian([2, 4], 1000))
    expected = 1 / (10 / 9 - 1 + math.sqrt(2 / 3))
    assert c.theta == pytest.approx(expected, rel=1e-12)
    assert c.theta == pytest.approx(1.078041, abs=1e-6)


def test_rho_outside_domain():
    with pytest.raises(DomainError):
        constants_from_tuple(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        constants_from_tuple(2.0, 2.0, 0.0, 1.0)


def test_closed_forms():
    assert closed_form_theta("regular", d=2) == pytest.approx(math.sqrt(2))
    assert closed_form_theta("out_regular", d=3, beta=5) == pytest.approx(math.sqrt(6) / 4, rel=1e-14)
    assert closed_form_theta("undirected_regular", d=3) == 2.0
    assert closed_form_theta("in_regular", d=2, rho=0.3) == pytest.approx(math.sqrt(2))
    with pytest.raises(DomainError):
        closed_form_theta("undirected_regular", d=2)


@pytest.mark.parametrize(
    "family, seq, params",
    [
        ("regular", regular(4, 60), {"d": 4}),
        ("out_regular", out_regular(3, [2, 4], 60), {"d": 3, "beta": 10 / 3}),
        ("in_regular", in_regular([2, 4], 3, 60), {"d": 3, "rho": 3 / 8}),
        ("in_regular", regular(2, 60), {"d": 2}),
        ("eulerian", eulerian([2, 4], 60), {"delta": 3, "beta": 10 / 3}),
    ],
)
def test_closed_form_matches_constants(family, seq, params):
    assert closed_form_theta(family, **params) == pytest.approx(theory_constants(seq).theta, rel=1e-10)


def test_epsilon_values():
    assert epsilon_fn(0.0) == 0.5
    assert epsilon_fn(0.5) == pytest.approx(2 * (1 - math.sqrt(0.5)), rel=1e-14)
    assert epsilon_fn(1 / 3) == pytest.approx(3 * (1 - math.sqrt(2 / 3)), rel=1e-14)
    for bad in (-0.1, 0.6):
        with pytest.raises(DomainError):
            epsilon_fn(bad)


@given(st.floats(0.0, 0.5))
def test_epsilon_range(x):
    assert 0.5 <= epsilon_fn(x) < 0.59


def test_return_law_examples():
    assert return_law(1, 1 / 3, 1 / 3) == pytest.approx(1 / 6, rel=1e-14)
    assert return_law(2, 1 / 3, 1 / 3) == pytest.approx(1 / 72, rel=1e-14)
    t = np.arange(1, 61)
    assert math.fsum(return_law(t, 1 / 3, 1.0)) == pytest.approx(0.5505103, abs=1e-7)
    assert math.fsum(return_law(t, 1 / 3, 1.0)) == pytest.approx(epsilon_fn(1 / 3), abs=1e-12)


def test_return_law_log_branch_continuous():
    a = return_law(np.arange(495, 506), 0.5, 0.5)
    assert np.all(np.diff(a) < 0)
    assert np.all(np.isfinite(a)) and np.all(a > 0)


@pytest.mark.parametrize("rho", np.linspace(0.05, 0.5, 6))
@pytest.mark.parametrize("q", np.linspace(0.05, 0.5, 6))
def test_return_law_total_mass(rho, q):
    t = np.arange(1, 20001)
    # the tail decays like rho^t t^(-3/2); at rho = 1/2 the truncation error is tiny
    total = math.fsum(return_law(t, rho, q))
    assert total == pytest.approx(q * (1 - math.sqrt(1 - rho)) / rho, abs=1e-12)
    assert 1 + phi(rho, q) == pytest.approx(1 / (1 - total), rel=1e-11)


def test_phi_examples():
    assert phi(0.3, 0.0) == 0.0
    assert phi(1 / 3, 1 / 3) == pytest.approx(math.sqrt(1.5) - 1, rel=1e-13)


def test_g_weights():
    seq = regular(3, 40)
    assert g_table(seq) == {(3, 3): pytest.approx(1 / 40, rel=1e-14)}
    seq = alternate(2, 4, 1000)
    assert g_weight(4, 2, seq) == pytest.approx(float(Fraction(68, 63000)), rel=1e-14)
    assert g_weight(4, 2, seq) == pytest.approx(1.0794e-3, abs=1e-7)
    assert g_weight(5, 2, seq) == 0.0
    p = theory_constants(seq).p_frak
    assert 1000 * (g_weight(4, 2, seq) + g_weight(2, 4, seq)) == pytest.approx(p, rel=1e-13)


def test_limit_scalings():
    assert limit_scalings(0.5) == (2.0, pytest.approx(2 * math.log(2), rel=1e-15))
    assert limit_scalings(0.1)[1] == pytest.approx(0.6501659, abs=1e-7)
    with pytest.raises(DomainError):
        limit_scalings(0.0)


@given(st.floats(1e-6, 1 - 1e-6))
def test_consensus_factor_symmetric(u):
    assert limit_scalings(u)[1] == pytest.approx(limit_scalings(1 - u)[1], rel=1e-9, abs=1e-15)


@st.composite
def valid_tuples(draw):
    n = draw(st.integers(2, 40))
    dp = draw(st.lists(st.integers(2, 8), min_size=n, max_size=n))
    heads = draw(st.lists(st.integers(0, n - 1), min_size=sum(dp), max_size=sum(dp)))
    s = degree_stats(type(regular(2, 1))(dp, np.bincount(heads, minlength=n)))
    return s


@given(valid_tuples())
def test_route_agreement_and_ranges(s):
    c = theory_constants(s)
    assert c.theta == pytest.approx(theta_design_form(s.delta, s.beta, s.rho, s.gamma), rel=1e-10)
    assert c.p_frak >= 1 - 1e-12
    assert c.q_frak <= 1 + 1e-12
    assert c.r_frak >= 1 - 1e-12
    assert c.theta == c.r_frak / c.p_frak
    assert 1 + phi(s.rho, c.q_frak) == pytest.approx(c.r_frak, rel=1e-12)


@given(st.floats(0.01, 0.5), st.floats(1.0, 5.0), st.floats(1.0, 30.0), st.floats(2.0, 20.0))
def test_route_agreement_random_tuples(rho, gamma, beta, delta):
    c = constants_from_tuple(delta, beta, rho, gamma)
    assert c.theta == pytest.approx(theta_design_form(delta, beta, rho, gamma), rel=1e-10)


@pytest.mark.parametrize("d", range(3, 11))
def test_alternate_monotone_in_a(d):
    thetas = [theory_constants(alternate(a, 2 * d - a, 20)).theta for a in range(2, d + 1)]
    assert all(x < y for x, y in zip(thetas, thetas[1:]))


@pytest.mark.parametrize("d", range(2, 12))
def test_regular_range(d):
    assert 1 < theory_constants(regular(d, 10)).theta <= math.sqrt(2) + 1e-15


@st.composite
def out_regular_seqs(draw):
    n = draw(st.integers(2, 30))
    d = draw(st.integers(2, 6))
    heads = draw(st.lists(st.integers(0, n - 1), min_size=n * d, max_size=n * d))
    return d, type(regular(2, 1))(np.full(n, d), np.bincount(heads, minlength=n))


@st.composite
def in_regular_seqs(draw):
    n = draw(st.integers(2, 30))
    d = draw(st.integers(3, 6))
    # split n*d tails into n out-degrees, each at least 2
    cuts = sorted(draw(st.lists(st.integers(0, n * d - 2 * n), min_size=n - 1, max_size=n - 1)))
    extra = np.diff([0, *cuts, n * d - 2 * n])
    return d, type(regular(2, 1))(extra + 2, np.full(n, d))


@given(out_regular_seqs())
def test_out_regular_range(case):
    d, seq = case
    theta = theory_constants(seq).theta
    assert 0 < theta <= math.sqrt(d / (d - 1)) * (1 + 1e-12)
    beta = degree_stats(seq).beta
    assert theta == pytest.approx(closed_form_theta("out_regular", d=d, beta=beta), rel=1e-10)


@given(in_regular_seqs())
def test_in_regular_range(case):
    d, seq = case
    s = degree_stats(seq)
    theta = theory_constants(s).theta
    assert d / (d - 1) / math.sqrt(2) < theta <= math.sqrt(d / (d - 1)) * (1 + 1e-12)
    assert theta == pytest.approx(closed_form_theta("in_regular", d=d, rho=s.rho), rel=1e-10)


def test_figure1_table():
    rows = [table_row(seq, name) for name, seq in figure1_sequences(1000)]
    assert len(rows) == 5
    assert list(rows[0]) == TABLE_COLUMNS
    assert rows[0]["theta"] == pytest.approx(math.sqrt(1.5))
    assert rows[4]["theta"] == pytest.approx(0.956167, abs=2e-6)
