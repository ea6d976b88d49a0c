from collections import Counter
from math import factorial, prod

import pytest

from plgraph import oracle as orc
from plgraph.degree_model import load_and_validate
from plgraph.pairing import project

from conftest import params_for


def test_pairing_counts():
    assert len(orc.enumerate_pairings([1, 1, 1, 1]).pairings) == 3
    assert len(orc.enumerate_pairings([2]).pairings) == 1
    U = orc.enumerate_pairings([2, 2, 2])
    assert len(U.pairings) == 15
    simple = [m for m in U.pairings if orc.pairing_from_mate(U.d, m).is_simple()]
    assert len(simple) == 8
    assert {tuple(project(orc.pairing_from_mate(U.d, m))) for m in simple} == {((1, 2), (1, 3), (2, 3))}


def test_graph_counts():
    assert orc.enumerate_simple_graphs([2, 2, 2]).graphs == (((1, 2), (1, 3), (2, 3)),)
    assert orc.enumerate_simple_graphs([2, 2, 1, 1]).graphs == (((1, 2), (1, 3), (2, 4)), ((1, 2), (1, 4), (2, 3)))
    assert len(orc.enumerate_simple_graphs([1, 1]).graphs) == 1


def test_graph_keys_use_original_labels():
    # vertex 3 carries degree 2
    U = orc.enumerate_simple_graphs([1, 1, 2])
    assert U.graphs == (((1, 3), (2, 3)),)


def test_guards():
    with pytest.raises(orc.TooLarge):
        orc.enumerate_pairings([1] * 16)
    with pytest.raises(orc.TooLarge):
        orc.enumerate_simple_graphs([1] * 12)
    P = orc.pairing_from_mate([1, 1], [1, 0])
    with pytest.raises(orc.UnknownQuery):
        orc.brute_force_counts(P, params_for([1, 1]), "nope")


def test_brute_force_dispatch():
    P = orc.pairing_from_mate([1, 1, 1, 1], [1, 0, 3, 2])
    assert orc.brute_force_counts(P, params_for([1, 1, 1, 1], heavy=[0, 1]), "f_ij", 0, 1) == 2


def test_chi_square_closed_forms():
    keys = ["a", "b", "c"]
    rep = orc.uniformity_test(["a", "b", "c"] * 100, keys)
    assert rep.chi2 == 0 and rep.tv == 0 and rep.dof == 2
    rep = orc.uniformity_test(["a"] * 300, keys)
    assert rep.chi2 == pytest.approx(600) and rep.p < 1e-100
    assert rep.tv == pytest.approx(2 / 3)


def test_uniformity_errors():
    with pytest.raises(orc.TooFewSamples):
        orc.uniformity_test(["a"] * 10, ["a", "b"])
    with pytest.raises(orc.UnknownKey):
        orc.uniformity_test(["z"] * 100, ["a", "b"])


def test_universe_accepts_degree_sequence():
    d = load_and_validate([2, 2, 2])
    assert orc.enumerate_simple_graphs(d).d is d


@pytest.mark.parametrize("degrees", [(2, 2, 2), (2, 2, 1, 1), (3, 2, 2, 2, 1), (2, 2, 2, 1, 1)])
def test_each_graph_has_prod_factorial_preimages(degrees):
    U = orc.enumerate_pairings(degrees)
    hits = Counter()
    for m in U.pairings:
        P = orc.pairing_from_mate(U.d, m)
        if P.is_simple():
            hits[tuple(project(P))] += 1
    graphs = orc.enumerate_simple_graphs(degrees).graphs
    assert set(hits) == set(graphs)
    assert set(hits.values()) == {prod(factorial(x) for x in degrees)}
