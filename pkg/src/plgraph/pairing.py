"""The pairing (configuration) model.

Each vertex owns a contiguous block of points; points are numbered globally
0..M_1-1. A pairing is stored as a ``mate`` list (an involution without fixed
points). Multiplicities are read off on demand by scanning the smaller of the
two bins, and the multigraph defects (loops and multiple edges) are collected
by ``census``.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .degree_model import DegreeSequence, StageParams

# Below this many points pure-Python loops beat numpy's per-call overhead.
SMALL = 512


class NotSimpleError(ValueError):
    pass


class Rng:
    """Deterministic random source built from one ``numpy.random.SeedSequence``.

    Scalar draws go through ``random.Random`` (cheap per call), bulk
    permutations through a numpy ``Generator``.
    """

    __slots__ = ("py", "np", "random")

    def __init__(self, seed_seq: np.random.SeedSequence):
        words = seed_seq.generate_state(8, dtype=np.uint32)
        self.py = random.Random(int.from_bytes(words.tobytes(), "little"))
        self.np = np.random.Generator(np.random.PCG64(seed_seq))
        self.random = self.py.random

    @classmethod
    def from_seed(cls, seed: int, index: int | None = None) -> "Rng":
        key = () if index is None else (index,)
        return cls(np.random.SeedSequence(seed, spawn_key=key))

    def below(self, n: int) -> int:
        return int(self.random() * n)

    def shuffle(self, seq: list) -> None:
        """Fisher-Yates driven by ``random()``; faster than ``random.shuffle`` on short lists."""
        rand = self.random
        for t in range(len(seq) - 1, 0, -1):
            k = int(rand() * (t + 1))
            seq[t], seq[k] = seq[k], seq[t]


class Bins:
    """Static point layout for a degree sequence."""

    def __init__(self, d: DegreeSequence):
        self.d = d
        self.deg = list(d.degrees)
        self.n = len(self.deg)
        start = [0]
        for dv in self.deg:
            start.append(start[-1] + dv)
        self.start = start
        self.M1 = start[-1]
        self.vof_np = np.repeat(np.arange(self.n, dtype=np.int64), np.asarray(self.deg, dtype=np.int64))
        self.vof = self.vof_np.tolist()
        self.order = list(d.order)


class Pairing:
    __slots__ = ("bins", "mate")

    def __init__(self, bins: Bins, mate: list):
        self.bins = bins
        self.mate = mate

    def copy(self) -> "Pairing":
        return Pairing(self.bins, self.mate[:])

    def points(self, v: int) -> range:
        s = self.bins.start
        return range(s[v], s[v + 1])

    def multiplicity(self, u: int, v: int) -> int:
        """Number of pairs between u and v; for u == v, the number of loops."""
        b = self.bins
        if b.deg[u] > b.deg[v]:
            u, v = v, u
        vof, mate = b.vof, self.mate
        c = 0
        for p in range(b.start[u], b.start[u + 1]):
            if vof[mate[p]] == v:
                c += 1
        return c // 2 if u == v else c

    def neighbor_counts(self, v: int) -> Counter:
        """Counter of neighbouring vertices; a loop contributes 2 at v itself."""
        vof, mate, s = self.bins.vof, self.mate, self.bins.start
        return Counter(vof[mate[p]] for p in range(s[v], s[v + 1]))

    def rewire(self, pairs) -> None:
        for a, b in pairs:
            self.mate[a] = b
            self.mate[b] = a

    def edge_pairs(self):
        vof, mate = self.bins.vof, self.mate
        for p, q in enumerate(mate):
            if p < q:
                yield vof[p], vof[q]

    def full_mult(self) -> Counter:
        """From-scratch multiplicity map keyed by (u, v), u <= v."""
        return Counter((u, v) if u <= v else (v, u) for u, v in self.edge_pairs())

    def is_simple(self) -> bool:
        b = self.bins
        if b.M1 <= SMALL:
            seen = set()
            vof, mate = b.vof, self.mate
            for p, q in enumerate(mate):
                if p < q:
                    u, v = vof[p], vof[q]
                    if u == v:
                        return False
                    key = (u, v) if u < v else (v, u)
                    if key in seen:
                        return False
                    seen.add(key)
            return True
        u, v = self._edge_arrays()
        if np.any(u == v):
            return False
        key = np.sort(u * b.n + v)
        return not np.any(key[1:] == key[:-1])

    def _edge_arrays(self):
        b = self.bins
        mate = np.asarray(self.mate, dtype=np.int64)
        idx = np.nonzero(np.arange(b.M1) < mate)[0]
        a = b.vof_np[idx]
        c = b.vof_np[mate[idx]]
        return np.minimum(a, c), np.maximum(a, c)

    def key(self) -> tuple:
        return tuple(self.mate)


def random_pairing(bins: Bins, rng: Rng) -> Pairing:
    """Uniform perfect matching of the points: pair up consecutive entries of a random permutation."""
    M1 = bins.M1
    if M1 <= SMALL:
        # free[0..t] are unmatched; pair free[t] with a uniform earlier one
        free = list(range(M1))
        mate = [0] * M1
        rand = rng.random
        for t in range(M1 - 1, 0, -2):
            k = int(rand() * t)
            a, b = free[t], free[k]
            free[k] = free[t - 1]
            mate[a] = b
            mate[b] = a
        return Pairing(bins, mate)
    perm = rng.np.permutation(M1)
    mate = np.empty(M1, dtype=np.int64)
    mate[perm[0::2]] = perm[1::2]
    mate[perm[1::2]] = perm[0::2]
    return Pairing(bins, mate.tolist())


@dataclass
class Census:
    """Loops and multiple edges of G(P), split by the heavy set."""

    loops: list = field(default_factory=list)        # light vertices carrying one loop
    doubles: list = field(default_factory=list)      # light (u, v) with m = 2
    triples: list = field(default_factory=list)      # light (u, v) with m = 3
    heavy_multi: list = field(default_factory=list)  # (i, j, m): heavy m >= 2, or heavy loops
    other_bad: list = field(default_factory=list)    # light m >= 4, light multi-loops

    @property
    def L_count(self) -> int:
        return len(self.loops)

    @property
    def D_count(self) -> int:
        return len(self.doubles)

    @property
    def T_count(self) -> int:
        return len(self.triples)

    def defects(self) -> dict:
        """Every loop/multi-edge with its multiplicity, for before/after comparisons."""
        out = {}
        for u in self.loops:
            out[(u, u)] = 1
        for u, v in self.doubles:
            out[(u, v)] = 2
        for u, v in self.triples:
            out[(u, v)] = 3
        for u, v, m in self.heavy_multi + self.other_bad:
            out[(u, v)] = m
        return out


def _classify(items, is_heavy) -> Census:
    c = Census()
    for (u, v), m in sorted(items):
        if u == v:
            if is_heavy[u]:
                c.heavy_multi.append((u, v, m))
            elif m == 1:
                c.loops.append(u)
            else:
                c.other_bad.append((u, v, m))
        elif m >= 2:
            if is_heavy[u] and is_heavy[v]:
                c.heavy_multi.append((u, v, m))
            elif m == 2:
                c.doubles.append((u, v))
            elif m == 3:
                c.triples.append((u, v))
            else:
                c.other_bad.append((u, v, m))
    return c


def census(P: Pairing, params: StageParams) -> Census:
    b = P.bins
    if b.M1 <= SMALL:
        vof = b.vof
        mult = {}
        for p, q in enumerate(P.mate):
            if p < q:
                u, v = vof[p], vof[q]
                k = (u, v) if u <= v else (v, u)
                mult[k] = mult.get(k, 0) + 1
        items = [(k, m) for k, m in mult.items() if m >= 2 or k[0] == k[1]]
        return _classify(items, params.is_heavy)
    u, v = P._edge_arrays()
    key = np.sort(u * b.n + v)
    # run-length encode the sorted keys
    cut = np.flatnonzero(np.diff(key)) + 1
    starts = np.concatenate(([0], cut))
    counts = np.diff(np.concatenate((starts, [len(key)])))
    ukeys = key[starts]
    uu, vv = ukeys // b.n, ukeys % b.n
    sel = (counts >= 2) | (uu == vv)
    items = [((int(x), int(y)), int(m)) for x, y, m in zip(uu[sel], vv[sel], counts[sel])]
    return _classify(items, params.is_heavy)


def signature(P: Pairing, params: StageParams) -> dict:
    """Heavy-pair record: (i, j) -> m for heavy i <= j with (i < j and m >= 2) or (i == j and m >= 1)."""
    b = P.bins
    vof, mate, is_heavy, start = b.vof, P.mate, params.is_heavy, b.start
    cnt = {}
    for i in params.heavy:
        for p in range(start[i], start[i + 1]):
            j = vof[mate[p]]
            if j >= i and is_heavy[j]:
                k = (i, j)
                cnt[k] = cnt.get(k, 0) + 1
    return {k: (m // 2 if k[0] == k[1] else m) for k, m in cnt.items() if m >= 2}


def W_pair(sig: dict, i: int, j: int) -> int:
    """Points of i lying in heavy loops or heavy multi-edges whose other end is not j."""
    w = 0
    for (a, b), m in sig.items():
        if a == b:
            if a == i:
                w += 2 * m
        elif (a == i and b != j) or (b == i and a != j):
            w += m
    return w


def W_loop(sig: dict, i: int) -> int:
    """Pairs in heavy non-loop multi-edges with one end at i."""
    return sum(m for (a, b), m in sig.items() if a != b and i in (a, b))


def membership_phi0(P: Pairing, params: StageParams, sig: dict | None = None) -> bool:
    M1, M2 = params.M[1], params.M[2]
    if M2 < M1:
        return P.is_simple()
    if sig is None:
        sig = signature(P, params)
    if not sig:
        return True
    deg, eta = P.bins.deg, params.eta
    multi_total = 0
    loop_total = 0
    for (i, j), m in sig.items():
        if i == j:
            loop_total += m
            if m * W_loop(sig, i) > eta * deg[i]:
                return False
        else:
            multi_total += m
            if m * W_pair(sig, i, j) > eta * deg[i] or m * W_pair(sig, j, i) > eta * deg[j]:
                return False
    return multi_total <= 4 * M2 * M2 / M1 ** 2 and loop_total <= 4 * M2 / M1


def membership_a0(P: Pairing, params: StageParams, cen: Census | None = None) -> bool:
    if cen is None:
        cen = census(P, params)
    return (
        not cen.heavy_multi
        and not cen.other_bad
        and cen.L_count <= params.B_L
        and cen.D_count <= params.B_D
        and cen.T_count <= params.B_T
    )


def project(P: Pairing) -> list:
    """Sorted edge list (u < v) in the caller's 1-based labels."""
    b = P.bins
    if b.M1 <= SMALL:
        order = b.order
        edges = []
        seen = set()
        for u, v in P.edge_pairs():
            a, c = order[u] + 1, order[v] + 1
            e = (a, c) if a < c else (c, a)
            if a == c or e in seen:
                raise NotSimpleError("pairing has a loop or a multiple edge")
            seen.add(e)
            edges.append(e)
        edges.sort()
        return edges
    if not P.is_simple():
        raise NotSimpleError("pairing has a loop or a multiple edge")
    u, v = P._edge_arrays()
    order = np.asarray(b.order, dtype=np.int64) + 1
    a, c = order[u], order[v]
    lo, hi = np.minimum(a, c), np.maximum(a, c)
    idx = np.lexsort((hi, lo))
    return list(zip(lo[idx].tolist(), hi[idx].tolist()))
