from collections import Counter

import pytest

from plgraph import pairing as pr
from plgraph.degree_model import load_and_validate
from plgraph.oracle import enumerate_pairings

from conftest import make_pairing, params_for


def test_random_pairing_is_involution():
    d = load_and_validate([4, 3, 3, 2, 2, 1, 1])
    P = pr.random_pairing(pr.Bins(d), pr.Rng.from_seed(1))
    assert all(P.mate[P.mate[p]] == p and P.mate[p] != p for p in range(len(P.mate)))


def test_random_pairing_large_path_is_involution():
    d = load_and_validate([3] * 400)
    P = pr.random_pairing(pr.Bins(d), pr.Rng.from_seed(1))
    assert all(P.mate[P.mate[p]] == p and P.mate[p] != p for p in range(len(P.mate)))


def test_forced_pairings():
    P = pr.random_pairing(pr.Bins(load_and_validate([1, 1])), pr.Rng.from_seed(0))
    assert P.multiplicity(0, 1) == 1
    P = pr.random_pairing(pr.Bins(load_and_validate([2])), pr.Rng.from_seed(0))
    assert P.multiplicity(0, 0) == 1


def test_random_pairing_uniform_on_four_points():
    bins = pr.Bins(load_and_validate([1, 1, 1, 1]))
    rng = pr.Rng.from_seed(11)
    N = 300_000
    c = Counter(tuple(pr.random_pairing(bins, rng).mate) for _ in range(N))
    assert len(c) == 3
    assert all(abs(v / N - 1 / 3) < 0.01 for v in c.values())


def test_degree_conservation():
    d = load_and_validate([3, 3, 2, 2, 1, 1])
    for seed in range(20):
        P = pr.random_pairing(pr.Bins(d), pr.Rng.from_seed(seed))
        for i in range(d.n):
            total = sum(P.multiplicity(i, j) for j in range(d.n) if j != i) + 2 * P.multiplicity(i, i)
            assert total == d.degrees[i]


def test_census_double():
    P = make_pairing([2, 2], [(0, 2), (1, 3)])
    c = pr.census(P, params_for([2, 2]))
    assert (c.D_count, c.L_count, c.T_count) == (1, 0, 0)


def test_census_heavy_loop():
    P = make_pairing([2], [(0, 1)])
    c = pr.census(P, params_for([2], heavy=[0]))
    assert c.heavy_multi == [(0, 0, 1)] and c.L_count == 0


def test_census_triple():
    P = make_pairing([3, 3], [(0, 3), (1, 4), (2, 5)])
    assert pr.census(P, params_for([3, 3])).T_count == 1


def test_census_numpy_path_matches_python_path():
    d = load_and_validate([6] * 100 + [3] * 20)
    p = params_for(d.degrees, heavy=range(5))
    P = pr.random_pairing(pr.Bins(d), pr.Rng.from_seed(5))
    fast = pr.census(P, p).defects()
    items = [(k, m) for k, m in P.full_mult().items() if m >= 2 or k[0] == k[1]]
    assert fast == pr._classify(items, p.is_heavy).defects()


def test_signature_and_W():
    # d=(4,4,1,...): m(1,2)=3 and a loop at vertex 1 is impossible with degree 4, so use (5,4,1,...)
    degrees = [5, 4, 1, 1, 1, 1, 1]
    # vertex 0: points 0-4, vertex 1: points 5-8, leaves: 9..13
    P = make_pairing(degrees, [(0, 5), (1, 6), (2, 7), (3, 4), (8, 9), (10, 11), (12, 13)])
    p = params_for(degrees, heavy=[0, 1])
    sig = pr.signature(P, p)
    assert sig == {(0, 1): 3, (0, 0): 1}
    assert pr.W_pair(sig, 0, 1) == 2 and pr.W_pair(sig, 1, 0) == 0
    assert pr.W_loop(sig, 0) == 3


def test_membership_phi0_simple_cases():
    P = make_pairing([2, 2, 2], [(0, 2), (1, 4), (3, 5)])
    assert pr.membership_phi0(P, params_for([2, 2, 2], heavy=[0]))


def test_membership_phi0_global_bound():
    degrees = [4, 4, 1, 1, 1, 1, 1, 1]
    # m(1,2)=3 with the remaining heavy points sent to leaves
    P = make_pairing(degrees, [(0, 4), (1, 5), (2, 6), (3, 8), (7, 9), (10, 11), (12, 13)])
    p = params_for(degrees, heavy=[0, 1])
    assert pr.signature(P, p) == {(0, 1): 3}
    # W is zero for a lone multi-edge, so only the global count matters
    assert pr.membership_phi0(P, p) == (3 <= 4 * p.M[2] ** 2 / p.M[1] ** 2)


def test_membership_a0_rejects_quadruple():
    P = make_pairing([4, 4], [(0, 4), (1, 5), (2, 6), (3, 7)])
    assert not pr.membership_a0(P, params_for([4, 4]))
    Q = make_pairing([2, 2, 2], [(0, 2), (1, 4), (3, 5)])
    assert pr.membership_a0(Q, params_for([2, 2, 2]))


def test_membership_a0_rate_matches_enumeration():
    degrees = (2, 2, 2, 1, 1)
    d = load_and_validate(degrees)
    p = params_for(degrees)
    bins = pr.Bins(d)
    U = enumerate_pairings(d)
    exact = sum(pr.membership_a0(pr.Pairing(bins, list(m)), p) for m in U.pairings) / len(U.pairings)
    rng = pr.Rng.from_seed(2)
    N = 50_000
    emp = sum(pr.membership_a0(pr.random_pairing(bins, rng), p) for _ in range(N)) / N
    assert abs(emp - exact) < 0.01


def test_project():
    assert pr.project(make_pairing([1, 1], [(0, 1)])) == [(1, 2)]
    assert pr.project(make_pairing([2, 2, 2], [(0, 2), (1, 4), (3, 5)])) == [(1, 2), (1, 3), (2, 3)]
    with pytest.raises(pr.NotSimpleError):
        pr.project(make_pairing([2], [(0, 1)]))


def test_project_uses_original_labels():
    # input order (1, 2, 1): sorted vertex 0 is the caller's vertex 2
    d = load_and_validate([1, 2, 1])
    P = pr.Pairing(pr.Bins(d), [2, 3, 0, 1])
    assert pr.project(P) == [(1, 2), (2, 3)]
