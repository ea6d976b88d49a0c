import pytest

from plgraph.degree_model import derive_params, load_and_validate
from plgraph.pairing import Bins, Pairing


def make_pairing(degrees, pairs):
    """Pairing on sorted degrees from a list of point pairs."""
    d = load_and_validate(degrees)
    bins = Bins(d)
    mate = [None] * bins.M1
    for a, b in pairs:
        mate[a], mate[b] = b, a
    assert None not in mate
    return Pairing(bins, mate)


def params_for(degrees, heavy=(), gamma=2.9):
    return derive_params(load_and_validate(degrees), gamma, heavy=list(heavy))


@pytest.fixture
def report(capsys):
    """Print a line straight to the terminal, bypassing capture."""
    def emit(line):
        with capsys.disabled():
            print("\n" + line, flush=True)
    return emit
