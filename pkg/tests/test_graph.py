import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from dcmvoter.degseq import DegreeSequence, alternate, regular
from dcmvoter.graph import (
    NonErgodicError,
    default_depth,
    ergodicity,
    from_edges,
    read_edge_csv,
    sample_dcm,
    sample_ergodic,
    tree_neighborhoods,
)
from dcmvoter.stationary import stationary


def test_single_vertex_two_loops():
    g = sample_dcm(DegreeSequence([2], [2]), 5)
    assert g.targets.tolist() == [0, 0]
    rep = ergodicity(g)
    assert rep.is_ergodic and rep.support.tolist() == [0]


def test_matching_uniform_chi_square():
    seq = regular(2, 2)
    index = {p: i for i, p in enumerate(itertools.permutations(range(4)))}
    counts = np.zeros(24)
    for s in range(100_000):
        counts[index[tuple(sample_dcm(seq, s).matching.tolist())]] += 1
    expected = 100_000 / 24
    sigma = np.sqrt(expected * (1 - 1 / 24))
    assert np.all(np.abs(counts - expected) <= 5 * sigma)
    assert sps.chisquare(counts).pvalue > 1e-4


def test_sampling_deterministic():
    seq = regular(3, 1000)
    a, b = sample_dcm(seq, 99), sample_dcm(seq, 99)
    assert np.array_equal(a.targets, b.targets)
    assert not np.array_equal(a.targets, sample_dcm(seq, 100).targets)


@given(st.integers(1, 25), st.integers(0, 2**63), st.data())
def test_degrees_preserved(n, seed, data):
    dp = data.draw(st.lists(st.integers(1, 5), min_size=n, max_size=n))
    heads = data.draw(st.lists(st.integers(0, n - 1), min_size=sum(dp), max_size=sum(dp)))
    seq = DegreeSequence(dp, np.bincount(heads, minlength=n))
    g = sample_dcm(seq, seed)
    assert np.array_equal(np.diff(g.offsets), seq.out_degrees)
    assert np.array_equal(np.bincount(g.targets, minlength=n), seq.in_degrees)
    assert sum(e[2] for e in g.edge_list()) == seq.m
    assert np.array_equal(np.sort(g.matching), np.arange(seq.m))


def test_two_disjoint_cycles_not_ergodic():
    g = from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
    rep = ergodicity(g)
    assert not rep.is_ergodic
    assert rep.n_recurrent == 2


def test_transient_vertices_outside_support():
    # 2 feeds the cycle {0, 1} but nothing returns to it
    g = from_edges(3, [(0, 1, 2), (1, 0, 2), (2, 0), (2, 1)])
    rep = ergodicity(g)
    assert rep.is_ergodic
    assert rep.support.tolist() == [0, 1]


def test_non_ergodic_policy_fail():
    seq = DegreeSequence([1, 1, 1, 1], [1, 1, 1, 1])
    seed = next(s for s in range(100) if not ergodicity(sample_dcm(seq, s)).is_ergodic)
    with pytest.raises(NonErgodicError):
        sample_ergodic(seq, seed, policy="fail")
    g = sample_ergodic(seq, seed)
    assert g.retries >= 1 and ergodicity(g).is_ergodic


@pytest.mark.slow
def test_regular3_ergodic_whp():
    seq = regular(3, 1000)
    hits = sum(ergodicity(sample_dcm(seq, s)).is_ergodic for s in range(100))
    assert hits >= 99


@given(st.integers(0, 10_000), st.sampled_from([regular(2, 12), alternate(2, 4, 10), DegreeSequence([2, 3, 2, 2], [1, 4, 0, 4])]))
def test_support_matches_positive_pi(seed, seq):
    g = sample_dcm(seq, seed)
    rep = ergodicity(g)
    if not rep.is_ergodic:
        return
    dist = stationary(g)
    assert np.array_equal(np.flatnonzero(dist.pi > 0), rep.support)


def test_tree_examples():
    g = from_edges(3, [(0, 0), (0, 1), (1, 2, 2), (2, 0), (2, 1)])
    rep = tree_neighborhoods(g, depth=1)
    # 0 has a self-loop, 1 has a double edge, 2 has distinct non-self targets
    assert rep.v_star.tolist() == [2]
    assert rep.fraction == pytest.approx(1 / 3)


def test_default_depth_floor():
    g = sample_dcm(regular(3, 1000), 0)
    assert default_depth(g) == 1


@pytest.mark.slow
def test_tree_fraction_large_n():
    seq = regular(3, 10_000)
    good = sum(tree_neighborhoods(sample_dcm(seq, s)).fraction >= 0.95 for s in range(20))
    assert good >= 19


def test_edge_csv_roundtrip(tmp_path):
    g = sample_dcm(alternate(2, 4, 10), 3)
    g.to_csv(tmp_path / "g.csv")
    h = read_edge_csv(tmp_path / "g.csv", n=10)
    assert g.edge_list() == h.edge_list()
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "src,dst,multiplicity"
