"""Exhaustive ground truth for tiny instances.

Every counter here enumerates candidate switchings literally, applies each to
a copy of the pairing and judges validity from a from-scratch recount of
multiplicities. None of them reuse the closed-form counters.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

from scipy.stats import chi2 as chi2_dist

from .degree_model import DegreeSequence, StageParams, load_and_validate
from .pairing import Bins, Pairing, census, signature

MAX_PAIRING_POINTS = 14
MAX_GRAPH_VERTICES = 10
MAX_GRAPH_POINTS = 20


class TooLarge(ValueError):
    pass


class UnknownQuery(KeyError):
    pass


class UnknownKey(KeyError):
    pass


class TooFewSamples(ValueError):
    pass


@dataclass(frozen=True)
class Universe:
    d: DegreeSequence
    pairings: tuple = ()
    graphs: tuple = ()

    @property
    def keys(self) -> tuple:
        return self.graphs


def _as_sequence(d) -> DegreeSequence:
    return d if isinstance(d, DegreeSequence) else load_and_validate(d)


def _matchings(points: list):
    if not points:
        yield []
        return
    a = points[0]
    for t in range(1, len(points)):
        rest = points[1:t] + points[t + 1:]
        for m in _matchings(rest):
            yield [(a, points[t])] + m


def enumerate_pairings(d) -> Universe:
    """All perfect matchings of the points, as ``mate`` tuples in sorted-vertex point numbering."""
    seq = _as_sequence(d)
    M1 = seq.total
    if M1 > MAX_PAIRING_POINTS:
        raise TooLarge(f"M_1={M1} exceeds {MAX_PAIRING_POINTS}")
    out = []
    for m in _matchings(list(range(M1))):
        mate = [0] * M1
        for a, b in m:
            mate[a], mate[b] = b, a
        out.append(tuple(mate))
    return Universe(seq, pairings=tuple(out))


def enumerate_simple_graphs(d) -> Universe:
    """All labelled simple graphs with the given degrees, keyed by sorted 1-based edge tuples
    in the caller's original vertex labels."""
    seq = _as_sequence(d)
    if seq.n > MAX_GRAPH_VERTICES or seq.total > MAX_GRAPH_POINTS:
        raise TooLarge(f"n={seq.n}, M_1={seq.total} exceed the enumeration guard")
    raw = [0] * seq.n
    for v, dv in enumerate(seq.degrees):
        raw[seq.order[v]] = dv
    n = len(raw)
    found = []

    def grow(v, resid, edges):
        if v == n:
            found.append(tuple(sorted(edges)))
            return
        need = resid[v]
        cands = [w for w in range(v + 1, n) if resid[w] > 0]
        for pick in itertools.combinations(cands, need):
            for w in pick:
                resid[w] -= 1
            grow(v + 1, resid, edges + [(v + 1, w + 1) for w in pick])
            for w in pick:
                resid[w] += 1

    grow(0, raw[:], [])
    return Universe(seq, graphs=tuple(sorted(found)))


def graph_key(edges) -> tuple:
    return tuple(sorted(tuple(e) for e in edges))


# ---------------------------------------------------------------- brute-force counters

def _mult(P: Pairing) -> Counter:
    vof = P.bins.vof
    c = Counter()
    for p, q in enumerate(P.mate):
        if p < q:
            u, v = vof[p], vof[q]
            c[(u, v) if u <= v else (v, u)] += 1
    return c


def _m(mult: Counter, u: int, v: int) -> int:
    return mult[(u, v) if u <= v else (v, u)]


def _rewired(P: Pairing, remove, add) -> Pairing | None:
    """Copy of P with the pairs in ``remove`` replaced by those in ``add``; None if they overlap."""
    pts = [p for pr in remove for p in pr]
    if len(set(pts)) != len(pts) or sorted(pts) != sorted(p for pr in add for p in pr):
        return None
    Q = P.copy()
    for a, b in remove:
        if Q.mate[a] != b:
            return None
    for a, b in add:
        Q.mate[a], Q.mate[b] = b, a
    return Q


def _light_pair(params, vof, p, q) -> bool:
    return not (params.is_heavy[vof[p]] and params.is_heavy[vof[q]])


def _heavy_sig_after(params, P, Q, drop_key, add=None) -> bool:
    before = dict(signature(P, params))
    before.pop(drop_key, None)
    if add:
        before.update(add)
    return signature(Q, params) == before


def bf_f_ij(P: Pairing, params: StageParams, i: int, j: int) -> int:
    vof, mate, M1 = P.bins.vof, P.mate, P.bins.M1
    mult = _mult(P)
    m = _m(mult, i, j)
    if m == 0:
        return 0
    ij = [a for a in P.points(i) if vof[mate[a]] == j]
    count = 0
    for order in itertools.permutations(ij):
        for picks in itertools.product(range(M1), repeat=m):
            if not all(_light_pair(params, vof, p, mate[p]) for p in picks):
                continue
            remove = [(a, mate[a]) for a in order] + [(p, mate[p]) for p in picks]
            add = []
            for a, p in zip(order, picks):
                add += [(a, p), (mate[a], mate[p])]
            Q = _rewired(P, remove, add)
            if Q is not None and _m(_mult(Q), i, j) == 0 and _heavy_sig_after(params, P, Q, (i, j)):
                count += 1
    return count


def bf_b_ij(P: Pairing, params: StageParams, i: int, j: int, m: int) -> int:
    vof, mate = P.bins.vof, P.mate
    if _m(_mult(P), i, j) != 0 or m < 1:
        return 0
    count = 0
    for As in itertools.permutations(P.points(i), m):
        for Bs in itertools.permutations(P.points(j), m):
            remove = [(a, mate[a]) for a in As] + [(b, mate[b]) for b in Bs]
            add = []
            for a, b in zip(As, Bs):
                add += [(a, b), (mate[a], mate[b])]
            Q = _rewired(P, remove, add)
            if Q is None:
                continue
            if not all(_light_pair(params, vof, mate[a], mate[b]) for a, b in zip(As, Bs)):
                continue
            if _m(_mult(Q), i, j) != m:
                continue
            want = dict(signature(P, params))
            if m >= 2:
                want[(i, j)] = m
            if signature(Q, params) == want:
                count += 1
    return count


def bf_f_loop(P: Pairing, params: StageParams, i: int) -> int:
    vof, mate, M1 = P.bins.vof, P.mate, P.bins.M1
    loops = [(a, mate[a]) for a in P.points(i) if vof[mate[a]] == i and a < mate[a]]
    m = len(loops)
    if m == 0:
        return 0
    count = 0
    for order in itertools.permutations(loops):
        for flips in itertools.product((False, True), repeat=m):
            ends = [(b, a) if f else (a, b) for (a, b), f in zip(order, flips)]
            for picks in itertools.product(range(M1), repeat=m):
                if not all(_light_pair(params, vof, p, mate[p]) for p in picks):
                    continue
                remove = list(order) + [(p, mate[p]) for p in picks]
                add = []
                for (a, b), p in zip(ends, picks):
                    add += [(a, p), (b, mate[p])]
                Q = _rewired(P, remove, add)
                if Q is not None and _m(_mult(Q), i, i) == 0 and _heavy_sig_after(params, P, Q, (i, i)):
                    count += 1
    return count


def bf_b_loop(P: Pairing, params: StageParams, i: int, m: int) -> int:
    vof, mate = P.bins.vof, P.mate
    if _m(_mult(P), i, i) != 0 or m < 1:
        return 0
    count = 0
    for pts in itertools.permutations(P.points(i), 2 * m):
        pairs = [(pts[2 * t], pts[2 * t + 1]) for t in range(m)]
        remove = [(a, mate[a]) for a in pts]
        add = []
        for a, b in pairs:
            add += [(a, b), (mate[a], mate[b])]
        Q = _rewired(P, remove, add)
        if Q is None:
            continue
        if not all(_light_pair(params, vof, mate[a], mate[b]) for a, b in pairs):
            continue
        want = dict(signature(P, params))
        want[(i, i)] = m
        if signature(Q, params) == want:
            count += 1
    return count


def _defects(P: Pairing, params: StageParams) -> dict:
    return census(P, params).defects()


def bf_f3(P: Pairing, params: StageParams) -> int:
    """Valid light-loop switchings summed over all light single loops."""
    vof, mate, M1 = P.bins.vof, P.mate, P.bins.M1
    before = _defects(P, params)
    count = 0
    for u0 in census(P, params).loops:
        a = next(p for p in P.points(u0) if vof[mate[p]] == u0)
        for p1, p2 in ((a, mate[a]), (mate[a], a)):
            for q3 in range(M1):
                for q5 in range(M1):
                    q4, q6 = mate[q3], mate[q5]
                    if len({u0, vof[q3], vof[q4], vof[q5], vof[q6]}) < 5:
                        continue
                    Q = _rewired(P, [(p1, p2), (q3, q4), (q5, q6)], [(p1, q3), (p2, q5), (q4, q6)])
                    want = dict(before)
                    del want[(u0, u0)]
                    if Q is not None and _defects(Q, params) == want:
                        count += 1
    return count


def bf_b3(P: Pairing, params: StageParams) -> int:
    vof, mate, M1 = P.bins.vof, P.mate, P.bins.M1
    before = _defects(P, params)
    count = 0
    for u0 in range(P.bins.n):
        if params.is_heavy[u0]:
            continue
        for p1, p2 in itertools.permutations(P.points(u0), 2):
            p3, p5 = mate[p1], mate[p2]
            for q4 in range(M1):
                q6 = mate[q4]
                if len({u0, vof[p3], vof[q4], vof[p5], vof[q6]}) < 5:
                    continue
                Q = _rewired(P, [(p1, p3), (p2, p5), (q4, q6)], [(p1, p2), (p3, q4), (p5, q6)])
                want = dict(before)
                want[(u0, u0)] = 1
                if Q is not None and _defects(Q, params) == want:
                    count += 1
    return count


def bf_f4(P: Pairing, params: StageParams) -> int:
    vof, mate, M1 = P.bins.vof, P.mate, P.bins.M1
    before = _defects(P, params)
    count = 0
    for u, v in census(P, params).triples:
        for u1, v1 in ((u, v), (v, u)):
            if params.is_heavy[u1]:
                continue
            ends = [p for p in P.points(u1) if vof[mate[p]] == v1]
            for order in itertools.permutations(ends):
                for picks in itertools.product(range(M1), repeat=3):
                    vs = {u1, v1} | {vof[q] for q in picks} | {vof[mate[q]] for q in picks}
                    if len(vs) < 8:
                        continue
                    remove = [(a, mate[a]) for a in order] + [(q, mate[q]) for q in picks]
                    add = []
                    for a, q in zip(order, picks):
                        add += [(a, q), (mate[a], mate[q])]
                    Q = _rewired(P, remove, add)
                    want = dict(before)
                    del want[(u, v)]
                    if Q is not None and _defects(Q, params) == want:
                        count += 1
    return count


def bf_b4(P: Pairing, params: StageParams) -> int:
    vof, mate = P.bins.vof, P.mate
    n = P.bins.n
    before = _defects(P, params)
    count = 0
    for u1 in range(n):
        if params.is_heavy[u1]:
            continue
        for v1 in range(n):
            if v1 == u1:
                continue
            for As in itertools.permutations(P.points(u1), 3):
                for Cs in itertools.permutations(P.points(v1), 3):
                    vs = {u1, v1} | {vof[mate[a]] for a in As} | {vof[mate[c]] for c in Cs}
                    if len(vs) < 8:
                        continue
                    remove = [(a, mate[a]) for a in As] + [(c, mate[c]) for c in Cs]
                    add = []
                    for a, c in zip(As, Cs):
                        add += [(a, c), (mate[a], mate[c])]
                    Q = _rewired(P, remove, add)
                    want = dict(before)
                    want[(u1, v1) if u1 < v1 else (v1, u1)] = 3
                    if Q is not None and _defects(Q, params) == want:
                        count += 1
    return count


def _doublets(P: Pairing, params: StageParams):
    """Every (light ordered 2-star, ordered 2-star) as point tuples (a2, a3, c2, c3)."""
    n = P.bins.n
    for u1 in range(n):
        if params.is_heavy[u1]:
            continue
        for a2, a3 in itertools.permutations(P.points(u1), 2):
            for v1 in range(n):
                for c2, c3 in itertools.permutations(P.points(v1), 2):
                    yield a2, a3, c2, c3


def bf_doublets(P: Pairing, params: StageParams) -> dict:
    """Z0 by inverse type-I apply-and-check, Z1 by literal pattern test, Zstar as the remainder."""
    vof, mate = P.bins.vof, P.mate
    before = _defects(P, params)
    mult = _mult(P)
    z0 = z1 = total = 0
    for a2, a3, c2, c3 in _doublets(P, params):
        total += 1
        b2, b3, e2, e3 = mate[a2], mate[a3], mate[c2], mate[c3]
        u1, v1 = vof[a2], vof[c2]
        us = (u1, vof[b2], vof[b3])
        vs = (v1, vof[e2], vof[e3])
        if len(set(us + vs)) < 6:
            continue
        Q = _rewired(P, [(a2, b2), (a3, b3), (c2, e2), (c3, e3)],
                     [(a2, c2), (a3, c3), (b2, e2), (b3, e3)])
        want = dict(before)
        want[(u1, v1) if u1 < v1 else (v1, u1)] = 2
        if Q is not None and _defects(Q, params) == want:
            z0 += 1
            continue
        singles = all(_m(mult, x, y) == 1 for x, y in ((u1, us[1]), (u1, us[2]), (v1, vs[1]), (v1, vs[2])))
        if (singles and _m(mult, u1, v1) == 1
                and _m(mult, us[1], vs[1]) == 0 and _m(mult, us[2], vs[2]) == 0):
            z1 += 1
    return {"Z0": z0, "Z1": z1, "Zstar": total - z0 - z1, "total": total}


def bf_bhat_III(P: Pairing, params: StageParams, doublet_points) -> int:
    """Pre-states of a type III switching producing the doublet (a2, a3, c2, c3) of P."""
    vof, mate, M1 = P.bins.vof, P.mate, P.bins.M1
    a2, a3, c2, c3 = doublet_points
    u1, v1 = vof[a2], vof[c2]
    links = [p for p in P.points(u1) if vof[mate[p]] == v1]
    if len(links) != 1:
        return 0
    x = links[0]
    y = mate[x]
    before = _defects(P, params)
    count = 0
    for q in range(M1):
        qq = mate[q]
        Q = _rewired(P, [(x, y), (q, qq)], [(x, q), (y, qq)])
        if Q is None:
            continue
        mult = _mult(Q)
        As, Cs = (a2, a3, x), (c2, c3, y)
        us = [vof[Q.mate[a]] for a in As]
        vs = [vof[Q.mate[c]] for c in Cs]
        if len({u1, v1, *us, *vs}) < 8 or _m(mult, u1, v1):
            continue
        if any(_m(mult, u1, s) != 1 for s in us) or any(_m(mult, v1, s) != 1 for s in vs):
            continue
        if any(_m(mult, s, t) for s, t in zip(us, vs)):
            continue
        if _defects(Q, params) == before:
            count += 1
    return count


QUERIES = {
    "f_ij": bf_f_ij,
    "b_ij": bf_b_ij,
    "f_loop": bf_f_loop,
    "b_loop": bf_b_loop,
    "f3": bf_f3,
    "b3": bf_b3,
    "f4": bf_f4,
    "b4": bf_b4,
    "Z0": lambda P, params: bf_doublets(P, params)["Z0"],
    "Z1": lambda P, params: bf_doublets(P, params)["Z1"],
    "Zstar": lambda P, params: bf_doublets(P, params)["Zstar"],
    "b_lite": lambda P, params: (lambda z: z["Z0"] + z["Z1"])(bf_doublets(P, params)),
    "bhat_III": bf_bhat_III,
}


def brute_force_counts(P: Pairing, params: StageParams, query: str, *args) -> int:
    """Dispatch to one of the exhaustive counters in ``QUERIES``; P is never modified."""
    if query not in QUERIES:
        raise UnknownQuery(query)
    if P.bins.M1 > MAX_PAIRING_POINTS:
        raise TooLarge(f"M_1={P.bins.M1} exceeds {MAX_PAIRING_POINTS}")
    return QUERIES[query](P, params, *args)


def pairing_from_mate(d, mate) -> Pairing:
    seq = _as_sequence(d)
    return Pairing(Bins(seq), list(mate))


# ---------------------------------------------------------------- distribution test

@dataclass(frozen=True)
class UniformityReport:
    chi2: float
    dof: int
    p: float
    tv: float
    n: int


def uniformity_test(samples, universe) -> UniformityReport:
    """Pearson chi-square of sample keys against the uniform law on ``universe``.

    ``universe`` is a Universe or any collection of keys.
    """
    keys = universe.graphs if isinstance(universe, Universe) else tuple(universe)
    size = len(keys)
    counts = Counter(samples)
    N = sum(counts.values())
    if N < 50 * size:
        raise TooFewSamples(f"{N} samples for {size} cells; need at least {50 * size}")
    known = set(keys)
    for k in counts:
        if k not in known:
            raise UnknownKey(k)
    expect = N / size
    stat = sum((counts.get(k, 0) - expect) ** 2 for k in keys) / expect
    dof = size - 1
    p = float(chi2_dist.sf(stat, dof)) if dof > 0 else 1.0
    tv = 0.5 * sum(abs(counts.get(k, 0) / N - 1 / size) for k in keys)
    return UniformityReport(stat, dof, p, tv, N)
