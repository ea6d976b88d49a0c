"""Stage 2: light loops (phase 3), light triple edges (phase 4) and light
double edges (phase 5).

Phase 5 mixes two switching types. Type I removes one double edge; type III
keeps the number of double edges but creates a doublet whose two centres are
adjacent, which type I can never produce. The probabilities of choosing each
type come from the recursion solved by ``compute_rho_table``.
"""

from __future__ import annotations

import bisect
import math
from collections import Counter
from dataclasses import dataclass, field

from .degree_model import StageParams, falling
from .heavy_stage import MAX_REDRAWS, BoundViolation, _accept, _count
from .pairing import Census, Pairing


class RhoNegative(ArithmeticError):
    pass


class PreconditionError(ValueError):
    pass


# ---------------------------------------------------------------- bounds

def mbar_loop(params: StageParams, i: int) -> float:
    return 2 * i * params.M[1] ** 2


def mlow_loop(params: StageParams, i: int) -> float:
    M1, L2, dh, d1 = params.M[1], params.L[2], params.dh, params.d1
    extra = 4 * params.B_D + 6 * params.B_T
    return (L2 * M1 - 2 * dh * M1 * (2 * i + extra + i * dh / 2)
            - L2 * (2 * i + extra + 6 * d1 + 2 * params.U[1]))


def mbar_triple(params: StageParams, i: int) -> float:
    return 12 * i * params.M[1] ** 3


def mlow_triple(params: StageParams, i: int) -> float:
    M2, M3, L3, L6 = params.M[2], params.M[3], params.L[3], params.L[6]
    dh, d1, BD, U = params.dh, params.d1, params.B_D, params.U
    return (M3 * L3 - 3 * M3 * (4 * BD * dh ** 2 + 6 * i * dh ** 2)
            - 3 * L3 * (4 * BD * d1 ** 2 + 6 * i * d1 ** 2)
            - L6 - 16 * M3 * U[3] - 3 * M2 * U[1] * U[2])


def mbar_type(params: StageParams, tau: str, i: int = 1) -> float:
    M1, M2, M3, L2, L3 = params.M[1], params.M[2], params.M[3], params.L[2], params.L[3]
    return {
        "I": 4 * i * M1 ** 2,
        "III": M3 * L3,
        "IV": 2 * M2 ** 3 * L2,
        "V": 2 * M2 ** 2 * M3 * L3,
        "VI": M2 ** 5 * L2,
        "VII": M2 ** 4 * M3 * L3,
    }[tau]


_HAT_POWER = {"III": 1, "IV": 3, "V": 4, "VI": 6, "VII": 7}


def mhat_type(params: StageParams, tau: str, i: int) -> float:
    if tau == "I":
        return 1
    return (params.M[1] - 2 * params.U[1] - 4 * i) ** _HAT_POWER[tau]


def mlow_double(params: StageParams, i: int) -> float:
    M2, L2, L4 = params.M[2], params.L[2], params.L[4]
    dh, d1, U1 = params.dh, params.d1, params.U[1]
    return (M2 * L2 - 8 * i * (dh * M2 + d1 * L2)
            - (2 * i * d1 ** 2 * dh ** 2 + 4 * i * U1 ** 2 + 8 * M2 * U1 + L4))


def mlow_lite(params: StageParams, i: int) -> float:
    return mlow_double(params, i) - 8 * params.M[1] * params.U[1] ** 2


# ---------------------------------------------------------------- rho table

@dataclass(frozen=True)
class RhoTable:
    i1: int
    x: tuple
    rho_I: tuple
    rho_III: tuple
    xi_eff: float
    mlow_used: tuple
    type3_on: tuple
    clamped: tuple = field(default=())
    fallback: tuple = field(default=())

    def residuals(self, params: StageParams):
        """Largest relative residuals of the x and rho_III equations."""
        rx = r3 = 0.0
        for i in range(self.i1):
            want = self.x[i + 1] * self.rho_I[i + 1] * self.mlow_used[i] / mbar_type(params, "I", i + 1) + 1
            rx = max(rx, abs(self.x[i] - want) / self.x[i])
            if self.type3_on[i]:
                want3 = (self.rho_I[i + 1] * self.x[i + 1] * mbar_type(params, "III")
                         / (mbar_type(params, "I", i + 1) * mhat_type(params, "III", i)))
                r3 = max(r3, abs(self.rho_III[i] * self.x[i] - want3) / max(want3, 1e-300))
        return rx, r3


def compute_rho_table(params: StageParams, fallback: bool = True) -> RhoTable:
    """Solve the type-selection recursion from the top class downwards.

    A class whose lower bound for creatable doublets is not positive gets
    ``mlow_used = 0`` (no switching into it is ever accepted). Type III is
    switched off at a class when its pre-state bound is not positive or when
    keeping it would make rho_I negative.
    """
    i1 = params.double_cap
    xi = params.xi_eff
    x = [0.0] * (i1 + 1)
    rI = [0.0] * (i1 + 1)
    r3 = [0.0] * (i1 + 1)
    low = [0.0] * (i1 + 1)
    on = [False] * (i1 + 1)
    clamped, fell_back = [], []
    x[i1], rI[i1] = 1.0, 1.0 - xi
    raw = mlow_lite(params, i1)
    low[i1] = raw if raw > 0 else 0.0
    mb3 = mbar_type(params, "III")
    for i in range(i1 - 1, -1, -1):
        raw = mlow_lite(params, i)
        if raw > 0:
            low[i] = float(raw)
        else:
            clamped.append(i)
        mb1 = mbar_type(params, "I", i + 1)
        c1 = x[i + 1] * rI[i + 1] * low[i] / mb1 + 1
        mh = mhat_type(params, "III", i)
        c2 = rI[i + 1] * x[i + 1] * mb3 / (mb1 * mh) if (mh > 0 and mb3 > 0) else 0.0
        x[i] = c1
        r3[i] = c2 / c1
        rI[i] = 1 - xi - r3[i]
        on[i] = c2 > 0
        if rI[i] < 0:
            if not fallback:
                raise RhoNegative(f"rho_I({i}) = {rI[i]} < 0")
            fell_back.append(i)
            r3[i], rI[i], on[i] = 0.0, 1 - xi, False
    return RhoTable(i1, tuple(x), tuple(rI), tuple(r3), xi, tuple(low), tuple(on),
                    tuple(sorted(clamped)), tuple(sorted(fell_back)))


def rho_extended(table: RhoTable, params: StageParams, tau: str, i: int) -> float:
    """Selection probability the full scheme would give to type ``tau`` at class i (diagnostic)."""
    if i >= table.i1:
        return 0.0
    mh = mhat_type(params, tau, i)
    if mh <= 0:
        return math.inf
    return (table.rho_I[i + 1] * table.x[i + 1] / table.x[i]
            * mbar_type(params, tau) / (mbar_type(params, "I", i + 1) * mh))


# ---------------------------------------------------------------- adjacency helpers

def adjacency(P: Pairing) -> list:
    vof, mate = P.bins.vof, P.mate
    nbr = [Counter() for _ in range(P.bins.n)]
    for p, q in enumerate(mate):
        nbr[vof[p]][vof[q]] += 1
    return nbr


def single_neighbors(nbr: list, v: int) -> list:
    return [w for w, c in nbr[v].items() if c == 1 and w != v]


def _single_points(nbr: list) -> list:
    return [sum(1 for w, c in cnt.items() if c == 1 and w != v) for v, cnt in enumerate(nbr)]


def _count_pairs_avoiding(nbr: list, single: list, total: int, bad1: set, bad2: set) -> int:
    """Oriented single-edge pairs (q, q') with vertex(q) not in bad1 and vertex(q') not in bad2."""
    a1 = sum(single[v] for v in bad1)
    a2 = sum(single[v] for v in bad2)
    both = 0
    for v in bad1:
        for w, c in nbr[v].items():
            if c == 1 and w != v and w in bad2:
                both += 1
    return total - a1 - a2 + both


# ---------------------------------------------------------------- phase 3

def loop_switch_valid(P: Pairing, u0: int, q3: int, q5: int) -> bool:
    vof, mate = P.bins.vof, P.mate
    u1, u2, u3, u4 = vof[q3], vof[mate[q3]], vof[q5], vof[mate[q5]]
    if len({u0, u1, u2, u3, u4}) < 5:
        return False
    mult = P.multiplicity
    return (mult(u1, u2) == 1 and mult(u3, u4) == 1
            and mult(u0, u1) == 0 and mult(u0, u3) == 0 and mult(u2, u4) == 0)


def count_b_phase3(P: Pairing, params: StageParams, nbr: list | None = None) -> int:
    """Exact number of inverse loop switchings: a light 2-star plus an oriented pair."""
    nbr = adjacency(P) if nbr is None else nbr
    single = _single_points(nbr)
    total = sum(single)
    is_heavy = params.is_heavy
    out = 0
    for u0 in range(P.bins.n):
        if is_heavy[u0] or nbr[u0].get(u0):
            continue
        leaves = single_neighbors(nbr, u0)
        for u1 in leaves:
            for u3 in leaves:
                if u1 == u3:
                    continue
                core = {u0, u1, u3}
                out += _count_pairs_avoiding(nbr, single, total, core | set(nbr[u1]), core | set(nbr[u3]))
    return out


def _find_loop(P: Pairing, u0: int):
    vof, mate, s = P.bins.vof, P.mate, P.bins.start
    for p in range(s[u0], s[u0 + 1]):
        if vof[mate[p]] == u0:
            return p, mate[p]
    raise PreconditionError(f"no loop at {u0}")


def phase3(P: Pairing, params: StageParams, exact: bool, rng, stats=None, cen: Census | None = None):
    loops = list(cen.loops)
    M1, mate = P.bins.M1, P.mate
    while loops:
        i = len(loops)
        low = mlow_loop(params, i - 1)
        if exact and low <= 0:
            return "b"
        for _ in range(MAX_REDRAWS):
            k = int(rng.random() * i)
            a, b = _find_loop(P, loops[k])
            if rng.random() < 0.5:
                a, b = b, a
            q3, q5 = int(rng.random() * M1), int(rng.random() * M1)
            if loop_switch_valid(P, loops[k], q3, q5):
                P.rewire([(mate[q3], mate[q5]), (a, q3), (b, q5)])
                break
            if exact:
                return "f"
        else:
            return "cap"
        loops[k] = loops[-1]
        loops.pop()
        if exact and not _accept(rng, low, count_b_phase3(P, params)):
            return "b"
        _count(stats, "phase3")
    return None


# ---------------------------------------------------------------- phase 4

def triple_switch_valid(P: Pairing, params: StageParams, u1: int, v1: int, picks) -> bool:
    if params.is_heavy[u1]:
        return False
    vof, mate, mult = P.bins.vof, P.mate, P.multiplicity
    us = [vof[q] for q in picks]
    vs = [vof[mate[q]] for q in picks]
    if len({u1, v1, *us, *vs}) < 8:
        return False
    for uj, vj in zip(us, vs):
        if mult(uj, vj) != 1 or mult(u1, uj) or mult(v1, vj):
            return False
    return True


def count_b_phase4(P: Pairing, params: StageParams, nbr: list | None = None) -> int:
    """Exact number of inverse triple switchings: ordered (light 3-star, 3-star) selections."""
    nbr = adjacency(P) if nbr is None else nbr
    n = P.bins.n
    sn = [single_neighbors(nbr, v) for v in range(n)]
    out = 0
    for u1 in range(n):
        if params.is_heavy[u1] or len(sn[u1]) < 3:
            continue
        for v1 in range(n):
            if v1 == u1 or len(sn[v1]) < 3 or nbr[u1].get(v1):
                continue
            ustars = [t for t in _ordered_triples(sn[u1]) if v1 not in t]
            vstars = [t for t in _ordered_triples(sn[v1]) if u1 not in t]
            for ut in ustars:
                uset = set(ut)
                for vt in vstars:
                    if uset.intersection(vt):
                        continue
                    if any(nbr[a].get(b) for a, b in zip(ut, vt)):
                        continue
                    out += 1
    return out


def _ordered_triples(items):
    for a in items:
        for b in items:
            if b == a:
                continue
            for c in items:
                if c != a and c != b:
                    yield (a, b, c)


def phase4(P: Pairing, params: StageParams, exact: bool, rng, stats=None, cen: Census | None = None):
    triples = list(cen.triples)
    vof, mate, s, M1 = P.bins.vof, P.mate, P.bins.start, P.bins.M1
    while triples:
        i = len(triples)
        low = mlow_triple(params, i - 1)
        if exact and low <= 0:
            return "b"
        for _ in range(MAX_REDRAWS):
            k = int(rng.random() * i)
            u1, v1 = triples[k]
            if rng.random() < 0.5:
                u1, v1 = v1, u1
            ends = [p for p in range(s[u1], s[u1 + 1]) if vof[mate[p]] == v1]
            rng.shuffle(ends)
            picks = [int(rng.random() * M1) for _ in range(3)]
            if triple_switch_valid(P, params, u1, v1, picks):
                new = []
                for a, q in zip(ends, picks):
                    new.append((mate[a], mate[q]))
                    new.append((a, q))
                P.rewire(new)
                break
            if exact:
                return "f"
        else:
            return "cap"
        triples[k] = triples[-1]
        triples.pop()
        if exact and not _accept(rng, low, count_b_phase4(P, params)):
            return "b"
        _count(stats, "phase4")
    return None


# ---------------------------------------------------------------- phase 5

@dataclass(frozen=True)
class DoubletCensus:
    Z0: int
    Z1: int
    Zstar: int
    total: int

    @property
    def b_lite(self) -> int:
        return self.Z0 + self.Z1


def _two_stars(nbr: list, centres) -> list:
    out = []
    for c in centres:
        leaves = single_neighbors(nbr, c)
        for a in leaves:
            for b in leaves:
                if a != b:
                    out.append((c, a, b))
    return out


def doublet_census(P: Pairing, params: StageParams, nbr: list | None = None) -> DoubletCensus:
    """Classify all (light 2-star, 2-star) doublets.

    Z0: type I could have created it (six distinct vertices, four single
    edges, centres and matching leaves pairwise non-adjacent). Z1: the same
    except that the centres share exactly one edge, the pattern left behind
    by a type III switching. Everything else is folded into Zstar.
    """
    nbr = adjacency(P) if nbr is None else nbr
    n = P.bins.n
    if any(nbr[v].get(v) for v in range(n) if not params.is_heavy[v]):
        raise PreconditionError("doublet census expects no light loops")
    light = _two_stars(nbr, [v for v in range(n) if not params.is_heavy[v]])
    every = _two_stars(nbr, range(n))
    z0 = z1 = 0
    for u1, u2, u3 in light:
        n1, n2, n3 = nbr[u1], nbr[u2], nbr[u3]
        for v1, v2, v3 in every:
            if len({u1, u2, u3, v1, v2, v3}) < 6 or v2 in n2 or v3 in n3:
                continue
            c = n1.get(v1, 0)
            if c == 0:
                z0 += 1
            elif c == 1:
                z1 += 1
    total = params.M[2] * params.L[2]
    return DoubletCensus(z0, z1, total - z0 - z1, total)


def count_bhat_III(P: Pairing, doublet, nbr: list | None = None) -> int:
    """Pre-states of a type III switching that leave ``doublet`` behind.

    ``doublet = (u1, u2, u3, v1, v2, v3)``; the count is over oriented extra
    pairs that the inverse switching can use.
    """
    nbr = adjacency(P) if nbr is None else nbr
    u1, u2, u3, v1, v2, v3 = doublet
    single = _single_points(nbr)
    bad1 = {u1, v2, v3} | set(nbr[u1])
    bad2 = {v1, u2, u3} | set(nbr[v1])
    return _count_pairs_avoiding(nbr, single, sum(single), bad1, bad2)


def type1_valid(P: Pairing, params: StageParams, u1: int, v1: int, q5: int, q7: int) -> bool:
    if params.is_heavy[u1]:
        return False
    vof, mate, mult = P.bins.vof, P.mate, P.multiplicity
    u2, v2, u3, v3 = vof[q5], vof[mate[q5]], vof[q7], vof[mate[q7]]
    if len({u1, v1, u2, v2, u3, v3}) < 6:
        return False
    return (mult(u2, v2) == 1 and mult(u3, v3) == 1 and not mult(u1, u2)
            and not mult(u1, u3) and not mult(v1, v2) and not mult(v1, v3))


def type3_valid(P: Pairing, a_pts, c_pts) -> bool:
    vof, mate, mult = P.bins.vof, P.mate, P.multiplicity
    u1, v1 = vof[a_pts[0]], vof[c_pts[0]]
    us = [vof[mate[a]] for a in a_pts]
    vs = [vof[mate[c]] for c in c_pts]
    if len({u1, v1, *us, *vs}) < 8:
        return False
    if mult(u1, v1):
        return False
    for uj, vj in zip(us, vs):
        if mult(u1, uj) != 1 or mult(v1, vj) != 1 or mult(uj, vj):
            return False
    return True


class StarSampler:
    """Draws a labelled 3-star uniformly: centre with weight [d]_3, then three ordered points."""

    def __init__(self, bins, centres):
        self.centres = [v for v in centres if bins.deg[v] >= 3]
        self.cum = []
        acc = 0
        for v in self.centres:
            acc += falling(bins.deg[v], 3)
            self.cum.append(acc)
        self.total = acc
        self.start = bins.start

    def draw(self, rng):
        v = self.centres[bisect.bisect_right(self.cum, int(rng.random() * self.total))]
        return rng.py.sample(range(self.start[v], self.start[v + 1]), 3)


class Phase5:
    """Precomputed per-sequence state for phase 5."""

    def __init__(self, bins, params: StageParams, table: RhoTable):
        self.params = params
        self.table = table
        self.cap = 10 * table.i1 + 50
        # classes above this one can never reach 0 doubles once b-rejections are on
        self.viable = next((k for k, v in enumerate(table.mlow_used) if v <= 0), table.i1)
        self.light3 = StarSampler(bins, [v for v in range(bins.n) if not params.is_heavy[v]])
        self.all3 = StarSampler(bins, range(bins.n))

    def b_lite(self, P: Pairing, cls: int) -> int:
        dc = doublet_census(P, self.params)
        return dc.Z0 + (dc.Z1 if self.table.type3_on[cls] else 0)

    def run(self, P: Pairing, exact: bool, rng, stats=None, cen: Census | None = None, first_u=None):
        """Return None when P is ready for output, else a restart cause.

        ``first_u`` is the type-selection uniform for the first iteration when
        the caller has already drawn it.
        """
        params, table = self.params, self.table
        doubles = list(cen.doubles)
        vof, mate, s, M1 = P.bins.vof, P.mate, P.bins.start, P.bins.M1
        for _ in range(self.cap):
            i = len(doubles)
            r1, r3 = table.rho_I[i], table.rho_III[i]
            if first_u is None:
                u = rng.random()
            else:
                u, first_u = first_u, None
            if exact:
                if u >= r1 + r3:
                    return "t"
                type1 = u < r1
            else:
                type1 = u * (r1 + r3) < r1
            if type1:
                if i == 0:
                    return None
                if exact and table.mlow_used[i - 1] <= 0:
                    return "b"
                for _ in range(MAX_REDRAWS):
                    k = int(rng.random() * i)
                    u1, v1 = doubles[k]
                    if rng.random() < 0.5:
                        u1, v1 = v1, u1
                    ends = [p for p in range(s[u1], s[u1 + 1]) if vof[mate[p]] == v1]
                    if rng.random() < 0.5:
                        ends.reverse()
                    q5, q7 = int(rng.random() * M1), int(rng.random() * M1)
                    if type1_valid(P, params, u1, v1, q5, q7):
                        a1, a3 = ends
                        P.rewire([(mate[a1], mate[q5]), (mate[a3], mate[q7]), (a1, q5), (a3, q7)])
                        break
                    if exact:
                        return "f"
                else:
                    return "cap"
                doubles[k] = doubles[-1]
                doubles.pop()
                cls = i - 1
                _count(stats, "phase5_I")
            else:
                if exact and table.mlow_used[i] <= 0:
                    return "b"
                for _ in range(MAX_REDRAWS):
                    a_pts = self.light3.draw(rng)
                    c_pts = self.all3.draw(rng)
                    if type3_valid(P, a_pts, c_pts):
                        break
                    if exact:
                        return "f"
                else:
                    return "cap"
                u1, v1 = vof[a_pts[0]], vof[c_pts[0]]
                doublet = (u1, vof[mate[a_pts[0]]], vof[mate[a_pts[1]]],
                           v1, vof[mate[c_pts[0]]], vof[mate[c_pts[1]]])
                a4, c4 = a_pts[2], c_pts[2]
                P.rewire([(mate[a4], mate[c4]), (a4, c4)])
                cls = i
                if exact and not _accept(rng, mhat_type(params, "III", i), count_bhat_III(P, doublet)):
                    return "pre_b"
                _count(stats, "phase5_III")
            if exact and not _accept(rng, table.mlow_used[cls], self.b_lite(P, cls)):
                return "b"
        return "cap"
