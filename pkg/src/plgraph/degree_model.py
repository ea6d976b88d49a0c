"""Degree sequences, falling-factorial moments and the derived scalar parameters.

Vertices are relabelled internally so that degrees are nonincreasing; the
original labels are kept in ``DegreeSequence.order`` so that output graphs can
be reported in the caller's numbering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Smallest exponent for which the admissible delta interval is nonempty.
GAMMA_THRESHOLD = 2.1 + math.sqrt(61) / 10
MOMENT_ORDERS = range(1, 7)


class DegreeError(ValueError):
    """Base class for invalid degree input."""


class OddSumError(DegreeError):
    pass


class NonPositiveDegreeError(DegreeError):
    pass


class EmptySequenceError(DegreeError):
    pass


class ParameterError(ValueError):
    """Base class for invalid (gamma, K, delta) choices."""


class GammaOutOfRangeError(ParameterError):
    pass


class EmptyDeltaWindowError(ParameterError):
    pass


class DeltaOutOfWindowError(ParameterError):
    pass


def falling(x: int, k: int) -> int:
    """Falling factorial x (x-1) ... (x-k+1); equals 1 for k = 0."""
    out = 1
    for t in range(k):
        out *= x - t
    return out


@dataclass(frozen=True)
class DegreeSequence:
    """Nonincreasing positive degrees with an even sum.

    ``order[v]`` is the 0-based position, in the caller's input, of the
    vertex that sits at sorted position ``v``.
    """

    degrees: tuple
    order: tuple

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def Delta(self) -> int:
        return self.degrees[0]

    @property
    def total(self) -> int:
        return sum(self.degrees)


def load_and_validate(raw: Iterable[int]) -> DegreeSequence:
    values = [int(x) for x in raw]
    if not values:
        raise EmptySequenceError("degree sequence is empty")
    bad = [x for x in values if x < 1]
    if bad:
        raise NonPositiveDegreeError(f"degrees must be >= 1, got {bad[0]}")
    if sum(values) % 2:
        raise OddSumError(f"degree sum {sum(values)} is odd")
    # stable sort keeps ties in input order, so relabelling is deterministic
    order = sorted(range(len(values)), key=lambda t: -values[t])
    return DegreeSequence(tuple(values[t] for t in order), tuple(order))


def read_degree_file(path: str) -> list[int]:
    """Parse whitespace-separated integers, skipping lines that start with '#'."""
    out = []
    with open(path) as fh:
        for line in fh:
            if line.lstrip().startswith("#"):
                continue
            out.extend(int(tok) for tok in line.split())
    return out


@dataclass(frozen=True)
class Moments:
    M: dict
    H: dict
    L: dict


def moments(d: DegreeSequence, heavy_set: Iterable[int] = ()) -> Moments:
    """Falling-factorial moment sums for k = 1..6, split by the heavy set.

    ``heavy_set`` holds 0-based vertex positions in sorted order.
    """
    heavy = set(heavy_set)
    M = {k: 0 for k in MOMENT_ORDERS}
    H = {k: 0 for k in MOMENT_ORDERS}
    for v, dv in enumerate(d.degrees):
        for k in MOMENT_ORDERS:
            f = falling(dv, k)
            if f == 0:
                break
            M[k] += f
            if v in heavy:
                H[k] += f
    L = {k: M[k] - H[k] for k in MOMENT_ORDERS}
    return Moments(M, H, L)


def plib_check(d: DegreeSequence, gamma: float, K: float):
    """Return (True, None) if #{t: d_t >= i} <= K n i^(1-gamma) for all i <= Delta,
    else (False, first violating i)."""
    n = d.n
    counts = np.bincount(np.asarray(d.degrees), minlength=d.Delta + 1)
    at_least = np.cumsum(counts[::-1])[::-1]
    for i in range(1, d.Delta + 1):
        if at_least[i] > K * n * i ** (1.0 - gamma):
            return False, i
    return True, None


@dataclass(frozen=True)
class DeltaWindow:
    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return self.lo >= self.hi

    def contains(self, delta: float) -> bool:
        return self.lo < delta < self.hi


def delta_window(gamma: float) -> DeltaWindow:
    if not 2.5 < gamma < 3:
        raise GammaOutOfRangeError(f"gamma={gamma} outside (2.5, 3)")
    g = gamma
    lo = max((4 / (g - 1) - 2) / (g - 2), (3 - g) / (g - 2), 1 / (2 * g - 3))
    hi = min(
        0.5,
        1 - 1 / (g - 1),
        2 / (7 - g),
        (2 - 2 / (g - 1) - (2 * g - 3) / (g - 1) ** 2) / (3 - g),
        (2 - 3 / (g - 1)) / (4 - g),
    )
    return DeltaWindow(lo, hi)


def heavy_count(n: int, gamma: float, delta: float) -> int:
    return min(n, math.ceil(n ** (1 - delta * (gamma - 1))))


def _U(k: int, n: int, gamma: float, K: float, delta: float) -> float:
    if k == 1:
        return (K * n) ** ((2 * gamma - 3) / (gamma - 1) ** 2)
    denom = k + 1 - gamma
    if denom <= 0:
        return math.inf
    return gamma * K ** (k / (gamma - 1)) / denom * n ** (1 - delta * (gamma - k - 1))


@dataclass(frozen=True)
class StageParams:
    gamma: float
    K: float
    delta: float
    n: int
    h: int
    heavy: frozenset
    is_heavy: tuple
    moments: Moments
    eta: float
    U: dict
    B_L: float
    B_D: float
    B_T: float
    xi_raw: float
    xi_eff: float
    d1: int
    dh: int
    notes: tuple = field(default=())

    @property
    def M(self):
        return self.moments.M

    @property
    def H(self):
        return self.moments.H

    @property
    def L(self):
        return self.moments.L

    @property
    def loop_cap(self) -> int:
        return math.ceil(self.B_L)

    @property
    def double_cap(self) -> int:
        return math.ceil(self.B_D)

    @property
    def triple_cap(self) -> int:
        return math.ceil(self.B_T)


def derive_params(
    d: DegreeSequence,
    gamma: float,
    K: float = 1.0,
    delta: float | None = None,
    override: bool = False,
    heavy: Sequence[int] | None = None,
) -> StageParams:
    """Compute every derived scalar used by the two stages.

    ``heavy`` overrides the default heavy set (the first h sorted vertices);
    it exists for testing on hand-built instances. ``override`` admits a
    user-supplied delta outside the feasibility window, or a gamma outside
    (2.5, 3), at the price of losing any guarantee.
    """
    notes = []
    in_range = 2.5 < gamma < 3
    window = delta_window(gamma) if in_range else None
    if delta is None:
        if window is None:
            raise GammaOutOfRangeError(
                f"gamma={gamma} outside (2.5, 3): pass an explicit delta with override")
        if window.empty:
            raise EmptyDeltaWindowError(
                f"no admissible delta for gamma={gamma} (window [{window.lo:.6f}, {window.hi:.6f}])")
        delta = window.lo + 0.05 * (window.hi - window.lo)
    elif window is None or not window.contains(delta):
        if not override:
            if window is not None and window.empty:
                raise EmptyDeltaWindowError(f"no admissible delta for gamma={gamma}")
            raise DeltaOutOfWindowError(f"delta={delta} outside the admissible window")
        notes.append("delta outside admissible window (override)")

    n = d.n
    if heavy is None:
        h = heavy_count(n, gamma, delta)
        heavy_set = frozenset(range(h))
    else:
        heavy_set = frozenset(heavy)
        h = len(heavy_set)
    mom = moments(d, heavy_set)
    M1, M2, M3 = mom.M[1], mom.M[2], mom.M[3]
    L2, L3 = mom.L[2], mom.L[3]
    eta = math.sqrt(M2 * M2 * mom.H[1] / M1 ** 3)
    xi_raw = 32 * M2 * M2 / M1 ** 3
    # d_h bounds every light degree; for a prefix heavy set it is the h-th degree
    light_max = max((dv for v, dv in enumerate(d.degrees) if v not in heavy_set), default=0)
    dh = max(min((d.degrees[v] for v in heavy_set), default=d.Delta), light_max)
    return StageParams(
        gamma=gamma,
        K=K,
        delta=delta,
        n=n,
        h=h,
        heavy=heavy_set,
        is_heavy=tuple(v in heavy_set for v in range(n)),
        moments=mom,
        eta=eta,
        U={k: _U(k, n, gamma, K, delta) for k in MOMENT_ORDERS},
        B_L=4 * L2 / M1,
        B_D=4 * L2 * M2 / M1 ** 2,
        B_T=2 * L3 * M3 / M1 ** 3,
        xi_raw=xi_raw,
        xi_eff=min(xi_raw, 0.5),
        d1=d.Delta,
        dh=dh,
        notes=tuple(notes),
    )


def synthetic_plib(n: int, gamma: float, rng: np.random.Generator, K: float = 1.0) -> list[int]:
    """i.i.d. degrees with P(X = i) proportional to i^-gamma, redrawn until the sum is even
    and the sequence passes ``plib_check`` with the given K.

    The support stops at (K n)^(1/(gamma-1)), the largest degree the tail condition allows.
    """
    top = max(1, int((K * n) ** (1.0 / (gamma - 1.0))))
    support = np.arange(1, top + 1, dtype=np.float64)
    cdf = np.cumsum(support ** (-gamma))
    cdf /= cdf[-1]
    while True:
        draw = np.searchsorted(cdf, rng.random(n), side="right") + 1
        np.minimum(draw, top, out=draw)
        if int(draw.sum()) % 2:
            continue
        degrees = draw.tolist()
        if plib_check(load_and_validate(degrees), gamma, K)[0]:
            return degrees
