"""Stage 1: removal of heavy multiple edges (phase 1) and heavy loops (phase 2).

Forward switchings are drawn from a superset whose size is the upper bound
on the number of valid switchings; an invalid draw is an f-rejection in exact
mode and is redrawn in approximate mode. The b-rejections compare the bound
families below against exact inverse-switching counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

from .degree_model import StageParams, falling
from .pairing import Pairing, W_loop, W_pair, signature

# Redraw limit for approximate-mode superset sampling before giving up on a run.
MAX_REDRAWS = 1000


class NoEdgeError(ValueError):
    pass


class EdgePresentError(ValueError):
    pass


class MultiplicityMismatch(ValueError):
    pass


@dataclass(frozen=True)
class HeavyBounds:
    fu: int
    fl: int
    bu: int
    bl: int


def heavy_bounds(params: StageParams, sig: dict, deg, i: int, j: int, m: int) -> HeavyBounds:
    M1, H1, h = params.M[1], params.H[1], params.h
    free_i = deg[i] - W_pair(sig, i, j)
    free_j = deg[j] - W_pair(sig, j, i)
    bu = falling(free_i, m) * falling(free_j, m)
    bl = bu - m * h * h * falling(free_i, m - 1) * falling(free_j, m - 1)
    return HeavyBounds(
        fu=factorial(m) * M1 ** m,
        fl=factorial(m) * max(0, M1 - H1 - 2 * m) ** m,
        bu=bu,
        bl=bl,
    )


def loop_bounds(params: StageParams, sig: dict, deg, i: int, m: int) -> HeavyBounds:
    M1, H1, h = params.M[1], params.H[1], params.h
    free = deg[i] - W_loop(sig, i)
    bu = falling(free, 2 * m)
    return HeavyBounds(
        fu=2 ** m * factorial(m) * M1 ** m,
        fl=2 ** m * factorial(m) * max(0, M1 - H1 - 2 * m) ** m,
        bu=bu,
        bl=bu - m * h * h * falling(free, 2 * m - 2),
    )


def _light_profile(P: Pairing, params: StageParams):
    """(number of pairs with both ends light, {heavy w: pairs joining w to a light vertex})."""
    b = P.bins
    vof, mate, is_heavy, start = b.vof, P.mate, params.is_heavy, b.start
    to_light = {}
    heavy_heavy_points = 0
    for w in params.heavy:
        c = 0
        for p in range(start[w], start[w + 1]):
            if is_heavy[vof[mate[p]]]:
                heavy_heavy_points += 1
            else:
                c += 1
        to_light[w] = c
    light_pairs = b.M1 // 2 - heavy_heavy_points // 2 - sum(to_light.values())
    return light_pairs, to_light


def _adjacent(P: Pairing, v: int) -> set:
    vof, mate, s = P.bins.vof, P.mate, P.bins.start
    return {vof[mate[p]] for p in range(s[v], s[v + 1])}


def _poly_mul(poly: list, factor: list, cap: int) -> list:
    out = [0] * (cap + 1)
    for a, ca in enumerate(poly):
        if ca:
            for b, cb in enumerate(factor):
                if a + b > cap:
                    break
                out[a + b] += ca * cb
    return out


def _assemble(m: int, poly: list, light_pairs: int) -> int:
    # positions of the m picks that use a heavy-light pair: [m]_l ordered slots;
    # the rest are distinct light-light pairs, each with two orientations
    return sum(
        falling(m, l) * poly[l] * 2 ** (m - l) * falling(light_pairs, m - l)
        for l in range(m + 1)
    )


def count_f_ij(P: Pairing, params: StageParams, i: int, j: int) -> int:
    """Exact number of valid heavy m-way switchings at the heavy pair (i, j).

    A heavy vertex w may receive at most one new edge to i (needs w not
    adjacent to i) and at most one to j; when w qualifies for both sides, its
    two picks must be different pairs, hence the quadratic factor.
    """
    m = P.multiplicity(i, j)
    if m == 0:
        raise NoEdgeError(f"no pairs between {i} and {j}")
    light_pairs, to_light = _light_profile(P, params)
    adj_i, adj_j = _adjacent(P, i), _adjacent(P, j)
    poly = [1] + [0] * m
    for w in sorted(params.heavy):
        if w == i or w == j:
            continue
        c = to_light[w]
        if not c:
            continue
        side_i, side_j = w not in adj_i, w not in adj_j
        if side_i and side_j:
            poly = _poly_mul(poly, [1, 2 * c, c * (c - 1)], m)
        elif side_i or side_j:
            poly = _poly_mul(poly, [1, c], m)
    return factorial(m) * _assemble(m, poly, light_pairs)


def count_f_loop(P: Pairing, params: StageParams, i: int) -> int:
    """Exact number of valid heavy m-way loop switchings at heavy vertex i."""
    m = P.multiplicity(i, i)
    if m == 0:
        raise NoEdgeError(f"no loops at {i}")
    light_pairs, to_light = _light_profile(P, params)
    adj_i = _adjacent(P, i)
    poly = [1] + [0] * m
    for w in sorted(params.heavy):
        if w != i and w not in adj_i and to_light[w]:
            poly = _poly_mul(poly, [1, 2 * to_light[w]], m)
    return 2 ** m * factorial(m) * _assemble(m, poly, light_pairs)


def _single_heavy_points(P: Pairing, params: StageParams, sig: dict, v: int) -> int:
    """Points of v matched into another heavy vertex through a single edge."""
    vof, mate, s, is_heavy = P.bins.vof, P.mate, P.bins.start, params.is_heavy
    y = 0
    for p in range(s[v], s[v + 1]):
        w = vof[mate[p]]
        if w != v and is_heavy[w] and ((v, w) if v < w else (w, v)) not in sig:
            y += 1
    return y


def count_b_ij(P: Pairing, params: StageParams, i: int, j: int, m: int, sig: dict | None = None) -> int:
    """Exact number of inverse heavy m-way switchings at (i, j) (inclusion-exclusion)."""
    if P.multiplicity(i, j):
        raise EdgePresentError(f"pairs present between {i} and {j}")
    if sig is None:
        sig = signature(P, params)
    deg = P.bins.deg
    free_i = deg[i] - W_pair(sig, i, j)
    free_j = deg[j] - W_pair(sig, j, i)
    y1 = _single_heavy_points(P, params, sig, i)
    y2 = _single_heavy_points(P, params, sig, j)
    return sum(
        (-1) ** l * comb(m, l) * falling(y1, l) * falling(y2, l)
        * falling(free_i - l, m - l) * falling(free_j - l, m - l)
        for l in range(m + 1)
    )


def count_b_loop(P: Pairing, params: StageParams, i: int, m: int, sig: dict | None = None) -> int:
    """Exact number of inverse heavy m-way loop switchings at i."""
    if P.multiplicity(i, i):
        raise EdgePresentError(f"loops present at {i}")
    if sig is None:
        sig = signature(P, params)
    free = P.bins.deg[i] - W_loop(sig, i)
    y = _single_heavy_points(P, params, sig, i)
    return sum(
        (-1) ** l * comb(m, l) * falling(y, 2 * l) * falling(free - 2 * l, 2 * m - 2 * l)
        for l in range(m + 1)
    )


def _picks_valid(P: Pairing, params: StageParams, picks, blocked_first, blocked_second) -> bool:
    """Shared validity test for forward heavy switchings.

    ``picks`` are oriented pairs (p1, p2); a heavy endpoint vertex must avoid
    the blocked set of its side and may be used at most once per side.
    """
    vof, mate, is_heavy = P.bins.vof, P.mate, params.is_heavy
    seen_pairs = set()
    used1, used2 = set(), set()
    for p1, p2 in picks:
        key = p1 if p1 < p2 else p2
        if key in seen_pairs:
            return False
        seen_pairs.add(key)
        w1, w2 = vof[p1], vof[p2]
        h1, h2 = is_heavy[w1], is_heavy[w2]
        if h1 and h2:
            return False
        if h1:
            if w1 in blocked_first or w1 in used1:
                return False
            used1.add(w1)
        if h2:
            if w2 in blocked_second or w2 in used2:
                return False
            used2.add(w2)
    return True


def mway_forward_valid(P: Pairing, params: StageParams, i: int, j: int, picks) -> bool:
    adj_i, adj_j = _adjacent(P, i), _adjacent(P, j)
    return _picks_valid(P, params, picks, adj_i | {i, j}, adj_j | {i, j})


def loop_forward_valid(P: Pairing, params: StageParams, i: int, picks) -> bool:
    adj = _adjacent(P, i) | {i}
    # both endpoints of every pick attach to i, so heavy endpoints share one "used" pool
    vof, is_heavy = P.bins.vof, params.is_heavy
    used = set()
    seen = set()
    for p1, p2 in picks:
        key = p1 if p1 < p2 else p2
        if key in seen:
            return False
        seen.add(key)
        w1, w2 = vof[p1], vof[p2]
        if is_heavy[w1] and is_heavy[w2]:
            return False
        for w in (w1, w2):
            if is_heavy[w]:
                if w in adj or w in used:
                    return False
                used.add(w)
    return True


def heavy_mway_apply(P: Pairing, params: StageParams, i: int, j: int, choice, inverse: bool = False) -> bool:
    """Apply a heavy m-way switching at (i, j) if it is valid; return the validity flag.

    Forward: ``choice = (ij_pairs, picks)`` with ``ij_pairs`` the ordered
    (point of i, point of j) pairs and ``picks`` the oriented light pairs.
    Inverse: ``choice = (points_of_i, points_of_j)``.
    """
    mate = P.mate
    if not inverse:
        ij_pairs, picks = choice
        if len(ij_pairs) != P.multiplicity(i, j) or len(picks) != len(ij_pairs):
            raise MultiplicityMismatch("choice does not cover all pairs between i and j")
        if not mway_forward_valid(P, params, i, j, picks):
            return False
        new = []
        for (a, b), (p1, p2) in zip(ij_pairs, picks):
            new.append((a, p1))
            new.append((b, p2))
        P.rewire(new)
        return True
    pts_i, pts_j = choice
    if P.multiplicity(i, j):
        raise MultiplicityMismatch("inverse switching needs no pairs between i and j")
    sig = signature(P, params)
    blocked_i = _blocked_points(P, params, sig, i, j)
    blocked_j = _blocked_points(P, params, sig, j, i)
    if len(set(pts_i)) != len(pts_i) or len(set(pts_j)) != len(pts_j):
        return False
    vof, is_heavy = P.bins.vof, params.is_heavy
    for a, b in zip(pts_i, pts_j):
        if a in blocked_i or b in blocked_j:
            return False
        if is_heavy[vof[mate[a]]] and is_heavy[vof[mate[b]]]:
            return False
    new = []
    for a, b in zip(pts_i, pts_j):
        new.append((mate[b], mate[a]))
        new.append((a, b))
    P.rewire(new)
    return True


def _blocked_points(P: Pairing, params: StageParams, sig: dict, v: int, other: int) -> set:
    """Points of v inside heavy loops or heavy multi-edges not leading to ``other``."""
    vof, mate, s = P.bins.vof, P.mate, P.bins.start
    out = set()
    for p in range(s[v], s[v + 1]):
        w = vof[mate[p]]
        if w == v or (w != other and ((v, w) if v < w else (w, v)) in sig):
            out.add(p)
    return out


def _draw_points(P: Pairing, rng, m: int):
    M1, mate = P.bins.M1, P.mate
    out = []
    for _ in range(m):
        p = int(rng.random() * M1)
        out.append((p, mate[p]))
    return out


def _accept(rng, lower: int, count: int) -> bool:
    """Bernoulli(lower / count); a nonpositive lower bound always rejects."""
    if lower <= 0:
        return False
    if count < lower:
        raise BoundViolation(f"count {count} below its lower bound {lower}")
    return rng.random() * count < lower


class BoundViolation(RuntimeError):
    """An exact count fell below the lower bound that the rejection step relies on."""


def phase1(P: Pairing, params: StageParams, exact: bool, rng, stats=None, sig: dict | None = None):
    """Reduce every heavy non-loop multiplicity to at most one.

    Returns None on success or a restart cause ('f', 'b', 'cap').
    """
    if sig is None:
        sig = signature(P, params)
    if not sig:
        return None
    deg, vof, mate, start = P.bins.deg, P.bins.vof, P.mate, P.bins.start
    is_heavy = params.is_heavy
    for (i, j) in sorted(k for k in sig if k[0] != k[1]):
        m = sig[(i, j)]
        ij_pairs = [(a, mate[a]) for a in range(start[i], start[i + 1]) if vof[mate[a]] == j]
        bounds = heavy_bounds(params, sig, deg, i, j, m)
        if exact and bounds.bl <= 0:
            # the b-rejection below is certain; skip the draw
            return "b"
        # (i) forward m-way switching from the labelled superset
        for _ in range(MAX_REDRAWS):
            rng.shuffle(ij_pairs)
            picks = _draw_points(P, rng, m)
            if heavy_mway_apply(P, params, i, j, (ij_pairs, picks)):
                break
            if exact:
                return "f"
        else:
            return "cap"
        del sig[(i, j)]
        # (ii) b-rejection
        if exact and not _accept(rng, bounds.bl, count_b_ij(P, params, i, j, m, sig)):
            return "b"
        _count(stats, "phase1")
        # (iv)-(v) put a single edge back with the matching probability
        one = heavy_bounds(params, sig, deg, i, j, 1)
        fl1 = max(one.fl, 0)
        if one.bu == 0 or rng.random() * (one.bu + fl1) < fl1:
            continue
        blocked = _blocked_points(P, params, sig, i, j) | _blocked_points(P, params, sig, j, i)
        free_i = [p for p in range(start[i], start[i + 1]) if p not in blocked]
        free_j = [p for p in range(start[j], start[j + 1]) if p not in blocked]
        if exact and one.fl <= 0:
            return "b"
        if not exact:
            heavy_i = sum(1 for p in free_i if is_heavy[vof[mate[p]]])
            heavy_j = sum(1 for p in free_j if is_heavy[vof[mate[p]]])
            if len(free_i) * len(free_j) == heavy_i * heavy_j:
                continue
        while True:
            a = free_i[int(rng.random() * len(free_i))]
            b = free_j[int(rng.random() * len(free_j))]
            if not (is_heavy[vof[mate[a]]] and is_heavy[vof[mate[b]]]):
                break
            if exact:
                return "f"
        P.rewire([(mate[b], mate[a]), (a, b)])
        if exact and not _accept(rng, one.fl, count_f_ij(P, params, i, j)):
            return "b"
        _count(stats, "phase1_reinsert")
    return None


def phase2(P: Pairing, params: StageParams, exact: bool, rng, stats=None, sig: dict | None = None):
    """Remove all heavy loops, one heavy vertex at a time."""
    if sig is None:
        sig = signature(P, params)
    if not sig:
        return None
    deg, vof, mate, start = P.bins.deg, P.bins.vof, P.mate, P.bins.start
    for (i, _) in sorted(k for k in sig if k[0] == k[1]):
        m = sig[(i, i)]
        if exact:
            # lower bound of the loop family, as in loop_bounds
            free = deg[i] - W_loop(sig, i)
            bl = falling(free, 2 * m) - m * params.h ** 2 * falling(free, 2 * m - 2)
            if bl <= 0:
                return "b"
        loops = [(a, mate[a]) for a in range(start[i], start[i + 1]) if vof[mate[a]] == i and a < mate[a]]
        for _ in range(MAX_REDRAWS):
            rng.shuffle(loops)
            oriented = [(a, b) if rng.random() < 0.5 else (b, a) for a, b in loops]
            picks = _draw_points(P, rng, m)
            if loop_forward_valid(P, params, i, picks):
                new = []
                for (a, b), (p1, p2) in zip(oriented, picks):
                    new.append((a, p1))
                    new.append((b, p2))
                P.rewire(new)
                break
            if exact:
                return "f"
        else:
            return "cap"
        del sig[(i, i)]
        if exact and not _accept(rng, bl, count_b_loop(P, params, i, m, sig)):
            return "b"
        _count(stats, "phase2")
    return None


def _count(stats, key: str) -> None:
    if stats is not None:
        stats.switch_counts[key] = stats.switch_counts.get(key, 0) + 1
