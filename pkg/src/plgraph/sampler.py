"""Top-level sampling loops: simple rejection, the approximate sampler and the exact (lite) sampler."""

from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import dataclass, field

from .degree_model import DegreeSequence, StageParams, derive_params, load_and_validate
from .heavy_stage import BoundViolation, phase1, phase2
from .light_stage import Phase5, RhoTable, compute_rho_table, phase3, phase4
from .pairing import (Bins, Rng, census, membership_a0, membership_phi0, project,
                      random_pairing, signature)

MODES = ("simple", "pld_star", "pld_exact")
CAUSES = ("phi0", "a0", "f", "b", "pre_b", "t", "cap", "param_invalid")
DEFAULT_MAX_RESTARTS = 10 ** 6
CHECK_EVERY = 100


class BudgetExceeded(RuntimeError):
    pass


class OutputCheckError(AssertionError):
    pass


@dataclass
class RunStats:
    restarts: int = 0
    restart_causes: dict = field(default_factory=lambda: {c: 0 for c in CAUSES})
    switch_counts: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)
    wall_time: float | None = 0.0

    def restart(self, cause: str) -> None:
        self.restarts += 1
        self.restart_causes[cause] += 1

    def enter(self, phase: str) -> None:
        it = self.iterations
        it[phase] = it.get(phase, 0) + 1

    def merge(self, other: "RunStats") -> None:
        self.restarts += other.restarts
        for k, v in other.restart_causes.items():
            self.restart_causes[k] += v
        for mine, theirs in ((self.switch_counts, other.switch_counts), (self.iterations, other.iterations)):
            for k, v in theirs.items():
                mine[k] = mine.get(k, 0) + v
        if self.wall_time is not None and other.wall_time is not None:
            self.wall_time += other.wall_time

    def to_dict(self) -> dict:
        return {
            "restarts": self.restarts,
            "restart_causes": dict(self.restart_causes),
            "switch_counts": dict(sorted(self.switch_counts.items())),
            "iterations": dict(sorted(self.iterations.items())),
            "wall_time": self.wall_time,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


class Sampler:
    """Everything that depends only on (d, gamma, K, mode), prepared once.

    ``heavy`` and ``delta`` are passed through to ``derive_params``. In either
    pld mode a sequence with M_2 < M_1 is handled by simple rejection.
    """

    def __init__(self, degrees, gamma: float | None = None, K: float = 1.0, mode: str = "pld_star",
                 delta: float | None = None, override: bool = False, heavy=None,
                 max_restarts: int = DEFAULT_MAX_RESTARTS, rho_fallback: bool = True,
                 check_output: bool = False):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        self.d: DegreeSequence = degrees if isinstance(degrees, DegreeSequence) else load_and_validate(degrees)
        self.bins = Bins(self.d)
        self.mode = mode
        self.max_restarts = max_restarts
        # every output is verified when set, otherwise one in CHECK_EVERY
        self.check_output = check_output
        self._emitted = 0
        # optional callback(phase_name, pairing) run after each completed phase
        self.observer = None
        self.params: StageParams | None = None
        self.table: RhoTable | None = None
        self.delegated = False
        if mode != "simple":
            self.params = derive_params(self.d, gamma, K, delta, override, heavy)
            if self.params.M[2] < self.params.M[1]:
                self.delegated = True
            else:
                self.table = compute_rho_table(self.params, fallback=rho_fallback)
                self.phase5 = Phase5(self.bins, self.params, self.table)
        self.exact = mode == "pld_exact"

    @property
    def simple(self) -> bool:
        return self.mode == "simple" or self.delegated

    def sample(self, rng: Rng, stats: RunStats | None = None) -> list:
        """One output graph as a sorted list of 1-based edges."""
        stats = RunStats() if stats is None else stats
        t0 = time.perf_counter()
        attempt = self._simple_attempt if self.simple else self._pld_attempt
        while True:
            P, cause = attempt(rng, stats)
            if cause is None:
                break
            stats.restart(cause)
            if stats.restarts > self.max_restarts:
                raise BudgetExceeded(f"more than {self.max_restarts} restarts")
        edges = project(P)
        self._emitted += 1
        if self.check_output or self._emitted % CHECK_EVERY == 1:
            self._check(edges)
        if stats.wall_time is not None:
            stats.wall_time += time.perf_counter() - t0
        return edges

    def _check(self, edges) -> None:
        got = Counter()
        for u, v in edges:
            got[u] += 1
            got[v] += 1
        want = {self.d.order[v] + 1: dv for v, dv in enumerate(self.d.degrees)}
        if got != want:
            raise OutputCheckError("output degrees differ from the input sequence")

    def _observe(self, phase: str, P) -> None:
        if self.observer is not None:
            self.observer(phase, P)

    def _simple_attempt(self, rng, stats):
        stats.enter("simple")
        P = random_pairing(self.bins, rng)
        return P, (None if P.is_simple() else "phi0")

    def _pld_attempt(self, rng, stats):
        params, exact = self.params, self.exact
        it = stats.iterations
        P = random_pairing(self.bins, rng)
        sig = signature(P, params)
        # an empty signature is always admissible and leaves phases 1-2 idle
        if sig and not membership_phi0(P, params, sig):
            return P, "phi0"
        try:
            it["phase1"] = it.get("phase1", 0) + 1
            if sig:
                cause = phase1(P, params, exact, rng, stats, sig)
                if cause:
                    return P, cause
            self._observe("phase1", P)
            it["phase2"] = it.get("phase2", 0) + 1
            if sig:
                cause = phase2(P, params, exact, rng, stats, sig)
                if cause:
                    return P, cause
            self._observe("phase2", P)
            cen = census(P, params)
            if not membership_a0(P, params, cen):
                return P, "a0"
            u = None
            if exact:
                if cen.D_count > self.phase5.viable:
                    # phase 5 would b-reject with certainty
                    return P, "b"
                # phases 3 and 4 keep the double count, so the first type
                # selection can be drawn now and a t-rejection taken early
                u = rng.random()
                t = self.table
                if u >= t.rho_I[cen.D_count] + t.rho_III[cen.D_count]:
                    return P, "t"
            it["phase3"] = it.get("phase3", 0) + 1
            cause = phase3(P, params, exact, rng, stats, cen)
            if cause:
                return P, cause
            self._observe("phase3", P)
            it["phase4"] = it.get("phase4", 0) + 1
            cause = phase4(P, params, exact, rng, stats, cen)
            if cause:
                return P, cause
            self._observe("phase4", P)
            it["phase5"] = it.get("phase5", 0) + 1
            return P, self.phase5.run(P, exact, rng, stats, cen, first_u=u)
        except BoundViolation:
            return P, "param_invalid"


def sample(d, gamma=None, K=1.0, mode="pld_star", rng: Rng | None = None, seed: int = 0, **kw):
    """Convenience wrapper returning (edges, RunStats)."""
    s = Sampler(d, gamma, K, mode, **kw)
    stats = RunStats()
    edges = s.sample(rng if rng is not None else Rng.from_seed(seed), stats)
    return edges, stats


def sample_batch(d, gamma=None, K=1.0, mode="pld_star", master_seed: int = 0, N: int = 1,
                 sampler: Sampler | None = None, **kw):
    """N samples; sample j draws from the stream keyed by (master_seed, j).

    Runs sequentially: each sample owns its stream, so the output does not
    depend on execution order.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    s = sampler if sampler is not None else Sampler(d, gamma, K, mode, **kw)
    total = RunStats()
    out = []
    for j in range(N):
        st = RunStats()
        out.append(s.sample(Rng.from_seed(master_seed, j), st))
        total.merge(st)
    return out, total
