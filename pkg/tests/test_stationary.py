import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dcmvoter.degseq import DegreeSequence, eulerian, regular
from dcmvoter.graph import NonErgodicError, ergodicity, from_edges, sample_dcm, sample_ergodic
from dcmvoter.stationary import (
    CostGuardError,
    StationaryDist,
    entropic_time,
    extremal_check,
    general_formula_check,
    mu_T,
    pi_diag_stats,
    stationary,
    stationary_linear,
    tv_profile,
)


def test_single_vertex(loop_graph):
    assert stationary(loop_graph).pi.tolist() == [1.0]


def test_k3_uniform(k3_graph):
    d = stationary(k3_graph)
    assert d.pi == pytest.approx([1 / 3] * 3, abs=1e-14)
    assert d.pi2_sum == pytest.approx(1 / 3)
    n_pi2, q_hat = pi_diag_stats(d, k3_graph.degree_seq)
    assert n_pi2 == pytest.approx(1.0)
    assert q_hat == pytest.approx(0.5)


def test_non_ergodic_raises():
    g = from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
    with pytest.raises(NonErgodicError):
        stationary(g)


def test_periodic_chain_converges():
    # a directed 2-cycle with double edges is periodic; plain power iteration oscillates
    g = from_edges(2, [(0, 1, 2), (1, 0, 2)])
    d = stationary(g)
    assert d.pi == pytest.approx([0.5, 0.5], abs=1e-12)


@given(st.integers(0, 10_000))
def test_eulerian_pi_proportional_to_degree(seed):
    seq = eulerian([2, 3, 5], 12)
    g = sample_dcm(seq, seed)
    rep = ergodicity(g)
    if not rep.is_ergodic or rep.support.size < g.n:
        return
    d = stationary(g)
    assert np.max(np.abs(d.pi - seq.out_degrees / seq.m)) <= 1e-11


@given(st.integers(0, 10_000))
def test_stationary_invariants(seed):
    seq = DegreeSequence([2, 3, 2, 2, 4, 2], [1, 4, 0, 4, 3, 3])
    g = sample_dcm(seq, seed)
    if not ergodicity(g).is_ergodic:
        return
    d = stationary(g)
    P = g.transition_matrix()
    assert math.isclose(d.pi.sum(), 1.0, rel_tol=1e-13)
    assert np.abs(P.T @ d.pi - d.pi).sum() <= 1e-11
    assert d.mu_tilde.sum() == pytest.approx(1.0, rel=1e-14)
    assert np.max(np.abs(d.mu_tilde * d.pi2_sum - d.pi**2)) <= 1e-14
    assert d.pi == pytest.approx(stationary_linear(g).pi, abs=1e-11)


def test_csv(tmp_path, k3_graph):
    stationary(k3_graph).to_csv(tmp_path / "pi.csv")
    assert (tmp_path / "pi.csv").read_text().splitlines()[0] == "v,pi"


def test_general_formula_rhs():
    seq = regular(3, 100)
    g = sample_ergodic(seq, 1)
    d = stationary(g)
    from dcmvoter.theory import theory_constants

    c = theory_constants(seq)
    _, rhs1 = general_formula_check(d, seq, lambda dm, dp: 1.0)
    _, rhs2 = general_formula_check(d, seq, lambda dm, dp: 1.0 / dp)
    assert rhs1 == pytest.approx(c.p_frak, rel=1e-13)
    assert rhs2 == pytest.approx(c.p_frak * c.q_frak, rel=1e-13)


@pytest.mark.slow
def test_regular3_pi_square_mean():
    seq = regular(3, 2000)
    vals, qs, gaps = [], [], []
    for s in range(50):
        d = stationary(sample_ergodic(seq, s))
        n_pi2, q_hat = pi_diag_stats(d, seq)
        vals.append(n_pi2)
        qs.append(q_hat)
        lhs, rhs = general_formula_check(d, seq, lambda dm, dp: dm + 1.0 / dp)
        gaps.append(abs(lhs - rhs) / abs(rhs))
        assert extremal_check(d, seq.n)["ok"]
    assert np.mean(vals) == pytest.approx(1.0, rel=0.1)
    assert np.mean(qs) == pytest.approx(1 / 3, rel=0.1)
    assert np.mean(gaps) <= 0.1


def test_mu_T_examples(k3_graph):
    assert mu_T(k3_graph, 0) == pytest.approx([1 / 3] * 3)
    assert mu_T(k3_graph, 1) == pytest.approx([1 / 3] * 3)


def test_mu_T_close_to_pi():
    g = sample_ergodic(regular(3, 1000), 7)
    T = math.ceil(math.log(1000) ** 3)
    assert np.max(np.abs(mu_T(g, T) - stationary(g).pi)) <= 1e-6


def test_entropic_time_regular():
    assert entropic_time(regular(3, 1000)) == pytest.approx(math.log(1000) / math.log(3))
    assert entropic_time(regular(3, 1000)) == pytest.approx(6.288, abs=1e-3)


def test_tv_profile_monotone_and_guard():
    g = sample_ergodic(regular(3, 300), 2)
    d = stationary(g)
    prof = tv_profile(g, d, [0.5, 1.0, 2.0, 4.0, 8.0])
    assert all(a >= b for a, b in zip(prof.tv_values, prof.tv_values[1:]))
    assert prof.tv_values[-1] < 1e-3
    big = sample_ergodic(regular(3, 5001), 0)
    with pytest.raises(CostGuardError):
        tv_profile(big, stationary(big), [1.0])


def test_tv_cutoff_sampled_starts():
    g = sample_ergodic(regular(3, 5000), 3)
    prof = tv_profile(g, stationary(g), [0.5, 1.5], starts=100, seed=4)
    assert prof.starts.size == 100
    assert prof.tv_values[0] >= 0.5
    assert prof.tv_values[1] <= 0.25


def test_from_vector_roundtrip():
    d = StationaryDist.from_vector(np.array([0.25, 0.75, 0.0]))
    assert np.flatnonzero(d.support).tolist() == [0, 1]
    assert d.pi_min_support == 0.25
