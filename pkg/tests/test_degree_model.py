import math

import numpy as np
import pytest

from plgraph import degree_model as dm


def test_load_minimal():
    d = dm.load_and_validate([1, 1])
    assert d.degrees == (1, 1) and d.n == 2 and d.Delta == 1


def test_load_sorts_and_records_order():
    d = dm.load_and_validate([2, 1, 3, 2])
    assert d.degrees == (3, 2, 2, 1)
    assert d.order == (2, 0, 3, 1)


@pytest.mark.parametrize("raw, err", [([3, 1, 1], dm.OddSumError), ([2, 0], dm.NonPositiveDegreeError),
                                      ([], dm.EmptySequenceError)])
def test_load_rejects(raw, err):
    with pytest.raises(err):
        dm.load_and_validate(raw)


def test_read_degree_file_skips_comments(tmp_path):
    f = tmp_path / "d.txt"
    f.write_text("# header\n3 2\n  # indented comment\n2\n1\n")
    assert dm.read_degree_file(str(f)) == [3, 2, 2, 1]


def test_moments_no_heavy():
    m = dm.moments(dm.load_and_validate([3, 2, 2, 1]))
    assert (m.M[1], m.M[2], m.M[3]) == (8, 10, 6)
    assert m.L == m.M


def test_moments_with_heavy():
    m = dm.moments(dm.load_and_validate([3, 2, 2, 1]), {0})
    assert (m.H[1], m.H[2], m.L[1], m.L[2]) == (3, 6, 5, 4)


def test_moments_single_edge():
    assert dm.moments(dm.load_and_validate([1, 1])).M[2] == 0


def test_plib_check():
    assert dm.plib_check(dm.load_and_validate([3, 2, 2, 1, 1, 1]), 2.9, 2) == (True, None)
    assert dm.plib_check(dm.load_and_validate([1] * 10), 2.9, 1) == (True, None)
    # every i >= 2 violates; the first is reported
    d = dm.load_and_validate([5, 5, 5, 5])
    assert dm.plib_check(d, 2.9, 1) == (False, 2)
    assert 4 > 4 * 5 ** (1 - 2.9)


def test_delta_window_values():
    w = dm.delta_window(2.9)
    assert not w.empty
    assert w.lo == pytest.approx(0.357143, abs=1e-6) and w.hi == pytest.approx(0.382775, abs=1e-6)
    w = dm.delta_window(2.8)
    assert w.empty and w.lo == pytest.approx(1 / 2.6)
    w = dm.delta_window(2.881024968)
    assert abs(w.hi - w.lo) < 1e-6 and w.lo == pytest.approx(0.36205, abs=1e-5)


def test_delta_window_gamma_range():
    with pytest.raises(dm.GammaOutOfRangeError):
        dm.delta_window(3.0)


def test_derive_params_auto_delta():
    d = dm.load_and_validate([1] * 1000)
    p = dm.derive_params(d, 2.9)
    assert p.delta == pytest.approx(0.358424, abs=1e-6)
    assert p.h == math.ceil(1000 ** (1 - p.delta * 1.9))


def test_derive_params_xi_clamp_and_eta():
    p = dm.derive_params(dm.load_and_validate([2, 2, 2]), 2.9, heavy=[])
    assert p.xi_raw == pytest.approx(16 / 3) and p.xi_eff == 0.5
    assert p.eta == 0


def test_derive_params_delta_guards():
    d = dm.load_and_validate([2, 2, 2])
    with pytest.raises(dm.EmptyDeltaWindowError):
        dm.derive_params(d, 2.8)
    with pytest.raises(dm.DeltaOutOfWindowError):
        dm.derive_params(d, 2.9, delta=0.1)
    p = dm.derive_params(d, 2.9, delta=0.1, override=True)
    assert p.notes


def test_synthetic_plib_even_and_conforming():
    for K in (1.0, 2.0):
        deg = dm.synthetic_plib(5000, 2.9, np.random.default_rng(3), K)
        assert len(deg) == 5000 and sum(deg) % 2 == 0 and min(deg) >= 1
        assert max(deg) <= (K * 5000) ** (1 / 1.9)
        assert dm.plib_check(dm.load_and_validate(deg), 2.9, K)[0]
