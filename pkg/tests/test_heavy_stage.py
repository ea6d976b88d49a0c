import pytest

from plgraph import heavy_stage as hs
from plgraph import oracle as orc
from plgraph.degree_model import load_and_validate
from plgraph.pairing import Bins, Rng, random_pairing, signature
from plgraph.sampler import RunStats

from conftest import make_pairing, params_for


def small_instance():
    P = make_pairing([1, 1, 1, 1], [(0, 1), (2, 3)])
    return P, params_for([1, 1, 1, 1], heavy=[0, 1])


def test_forward_one_way_uses_the_light_pair():
    P, p = small_instance()
    assert hs.count_f_ij(P, p, 0, 1) == 2 == orc.bf_f_ij(P, p, 0, 1)
    assert hs.heavy_mway_apply(P, p, 0, 1, ([(0, 1)], [(2, 3)]))
    assert P.multiplicity(0, 2) == 1 and P.multiplicity(1, 3) == 1


def test_inverse_then_forward_is_identity():
    P, p = small_instance()
    hs.heavy_mway_apply(P, p, 0, 1, ([(0, 1)], [(3, 2)]))
    after = list(P.mate)
    assert hs.heavy_mway_apply(P, p, 0, 1, ((0,), (1,)), inverse=True)
    assert P.mate == [1, 0, 3, 2]
    assert hs.heavy_mway_apply(P, p, 0, 1, ([(0, 1)], [(3, 2)]))
    assert P.mate == after


def test_forward_count_zero_without_light_pairs():
    P = make_pairing([1, 1], [(0, 1)])
    assert hs.count_f_ij(P, params_for([1, 1], heavy=[0, 1]), 0, 1) == 0


def test_forward_count_needs_an_edge():
    P, p = small_instance()
    with pytest.raises(hs.NoEdgeError):
        hs.count_f_ij(P, p, 0, 2)


def test_backward_count_zero_when_points_are_blocked():
    # vertex 0 spends all its points on a heavy double edge to vertex 2
    degrees = [2, 2, 2, 1, 1]
    P = make_pairing(degrees, [(0, 4), (1, 5), (2, 6), (3, 7)])
    p = params_for(degrees, heavy=[0, 1, 2])
    sig = signature(P, p)
    assert sig == {(0, 2): 2}
    assert hs.count_b_ij(P, p, 0, 1, 1, sig) == 0 == orc.bf_b_ij(P, p, 0, 1, 1)


@pytest.mark.parametrize("degrees, heavy", [((3, 3, 2, 2, 1, 1), (0, 1)), ((4, 3, 2, 2, 2, 1), (0, 1, 2)),
                                            ((5, 2, 2, 1, 1, 1), (0, 1))])
def test_counts_match_brute_force(degrees, heavy):
    d = load_and_validate(degrees)
    p = params_for(degrees, heavy)
    bins = Bins(d)
    for seed in range(40):
        P = random_pairing(bins, Rng.from_seed(seed))
        sig = signature(P, p)
        for i in heavy:
            for j in heavy:
                if i >= j:
                    continue
                if P.multiplicity(i, j):
                    assert hs.count_f_ij(P, p, i, j) == orc.bf_f_ij(P, p, i, j)
                else:
                    for m in (1, 2):
                        assert hs.count_b_ij(P, p, i, j, m, sig) == orc.bf_b_ij(P, p, i, j, m)
        if any(a != b for a, b in sig):
            continue
        for i in heavy:
            if P.multiplicity(i, i):
                assert hs.count_f_loop(P, p, i) == orc.bf_f_loop(P, p, i)
            else:
                assert hs.count_b_loop(P, p, i, 1, sig) == orc.bf_b_loop(P, p, i, 1)


def test_phases_leave_no_heavy_defects():
    d = load_and_validate([8, 7, 6, 5] + [2] * 20 + [1] * 6)
    p = params_for(d.degrees, heavy=[0, 1, 2, 3])
    bins = Bins(d)
    done = 0
    for seed in range(200):
        rng = Rng.from_seed(seed)
        P = random_pairing(bins, rng)
        if not signature(P, p):
            continue
        stats = RunStats()
        if hs.phase1(P, p, False, rng, stats) is not None:
            continue
        assert all(i == j for i, j in signature(P, p))
        if hs.phase2(P, p, False, rng, stats) is not None:
            continue
        assert signature(P, p) == {}
        done += 1
    assert done > 20


def test_phases_noop_without_heavy_defects():
    P = make_pairing([2, 2, 2], [(0, 2), (1, 4), (3, 5)])
    p = params_for([2, 2, 2], heavy=[0])
    before = list(P.mate)
    assert hs.phase1(P, p, True, Rng.from_seed(0)) is None
    assert hs.phase2(P, p, True, Rng.from_seed(0)) is None
    assert P.mate == before


def test_accept_flags_bound_violation():
    with pytest.raises(hs.BoundViolation):
        hs._accept(Rng.from_seed(0), 5, 3)
    assert not hs._accept(Rng.from_seed(0), 0, 3)
