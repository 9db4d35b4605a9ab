"""Hyperbolicity verdicts from sequence diagnostics and K estimates.

Limit statements ("bounded", "tends to infinity", "the tail bound holds for
every n") cannot be decided on a finite prefix.  The tests here look at how a
quantity behaves across the horizon and always report their verdicts as
truncation-based evidence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import TrainSpec
from .gamma import KEstimate

# Pathway tags carried by verdicts.
BOUNDED_L = "bounded-l"
DIVERGING_L = "diverging-l"
NO_PATHWAY = "none"

PLATEAU_RTOL = 0.01
C2_GROWTH = 1.5
TAIL_RTOL = 1e-9
_MAX_TAIL_HORIZON = 1 << 24


class Outcome(enum.Enum):
    HYPERBOLIC = "hyperbolic"
    NOT_HYPERBOLIC = "not_hyperbolic"
    INCONCLUSIVE = "inconclusive"


@dataclass
class Verdict:
    outcome: Outcome
    pathway: str
    constants: dict = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "pathway": self.pathway,
            "constants": dict(self.constants),
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Verdict":
        return cls(Outcome(d["outcome"]), d["pathway"], dict(d["constants"]), list(d["diagnostics"]))


def quasi_increasing_c1(train: TrainSpec) -> tuple[float, tuple[int, int]]:
    """``max_{m <= n} (l_m - l_n)_+`` with a witness ``(m, n)``; ``(1, 1)`` when zero."""
    l = train.l_values
    run = np.maximum.accumulate(l)
    gap = run - l
    n = int(np.argmax(gap))
    if gap[n] <= 0:
        return 0.0, (1, 1)
    m = int(np.argmax(l[: n + 1]))
    return float(gap[n]), (m + 1, n + 1)


@dataclass(frozen=True)
class TailConstant:
    value: float
    horizon: int
    certified: bool


def tail_constant_c2(train: TrainSpec, n: int) -> TailConstant:
    """``e^{l_n} sum_{k=n}^{H} e^{-l_k}``.

    For strictly increasing closed-form families ``H`` is doubled past the
    horizon until the integral bound on the remaining tail drops below
    ``1e-9`` of the sum; the result is then ``certified``.  Otherwise the sum
    stops at ``n_max`` and is a lower bound only.
    """
    if not 1 <= n <= train.n_max:
        raise IndexError(f"index {n} outside 1..{train.n_max}")
    fam = train.l
    ln = float(train.l_values[n - 1])
    if not fam.increasing:
        terms = np.exp(ln - train.l_values[n - 1 :])
        return TailConstant(math.fsum(terms), train.n_max, False)
    H = max(train.n_max, 2 * n)
    while True:
        vals = fam.values(H)
        total = math.fsum(np.exp(ln - vals[n - 1 :]))
        rest = fam.tail_integral(H, shift=ln)
        if rest <= TAIL_RTOL * total:
            return TailConstant(total, H, True)
        if H >= _MAX_TAIL_HORIZON or not math.isfinite(rest):
            return TailConstant(total, H, False)
        H *= 2


def _trend(values: np.ndarray) -> tuple[bool, bool]:
    """``(bounded, diverging)`` evidence for a sequence over the horizon.

    Bounded: the running max no longer grows in the trailing half.  Diverging:
    over the trailing half the least-squares slope is positive, every late
    value exceeds every early one and the median rises noticeably.
    """
    N = values.size
    if N < 8:
        return False, False
    head, tail = values[: N // 2], values[N // 2 :]
    top = float(np.max(head))
    bounded = float(np.max(tail)) <= top + 1e-9 * (1 + abs(top))
    early, late = tail[: tail.size // 2], tail[tail.size // 2 :]
    slope = np.polyfit(np.arange(tail.size, dtype=float), tail, 1)[0]
    level = float(np.median(early))
    diverging = (
        slope > 0
        and float(np.min(late)) > float(np.max(early))
        and float(np.median(late)) - level > 1e-3 * (1 + abs(level))
    )
    return bounded, bool(diverging)


def _c1_stable(train: TrainSpec) -> tuple[bool, float, float]:
    full, _ = quasi_increasing_c1(train)
    half, _ = quasi_increasing_c1(train.truncated(max(1, train.n_max // 2)))
    return full <= 1.01 * half + 1e-9, full, half


def _c2_profile(train: TrainSpec) -> list[tuple[int, TailConstant]]:
    n0 = max(2, train.n_max // 8)
    return [(k, tail_constant_c2(train, k)) for k in (n0, 2 * n0, 4 * n0) if k <= train.n_max]


def _trajectory_checks(k_est: KEstimate) -> tuple[bool, bool]:
    """``(plateau, increasing)`` for the checkpoint trajectory."""
    vals = [v for _, v in k_est.trajectory]
    if len(vals) < 2:
        return False, False
    last, prev = vals[-1], vals[-2]
    plateau = (not k_est.saturated) and (last - prev) <= PLATEAU_RTOL * abs(prev)
    increasing = all(b > a for a, b in zip(vals, vals[1:]))
    return plateau, increasing


def classify(train: TrainSpec, k_est: KEstimate) -> Verdict:
    """Decision tree over the bounded and diverging-l pathways.

    A verdict is cross-checked against the K trajectory: a hyperbolic verdict
    needs a plateau (last two checkpoints within 1%), a non-hyperbolic one
    needs strictly increasing checkpoints (or a saturated estimate).  A
    mismatch downgrades to inconclusive.
    """
    notes = [f"truncated at n_max = {train.n_max}; limit statements are inferred from the horizon"]
    l_bounded, l_diverging = _trend(train.l_values)
    stable, c1, c1_half = _c1_stable(train)
    consts = {"c1": c1, "K": k_est.value, "l0": k_est.h_floor, "cap": k_est.cap}

    outcome, pathway = Outcome.INCONCLUSIVE, NO_PATHWAY
    if l_bounded and float(np.max(train.l_values)) <= k_est.cap:
        outcome, pathway = Outcome.HYPERBOLIC, BOUNDED_L
        notes.append(f"sup l over the horizon is {float(np.max(train.l_values))!r}, attained in the first half")
    elif l_diverging and stable:
        pathway = DIVERGING_L
        r_bounded, r_diverging = _trend(train.r_values)
        prof = _c2_profile(train)
        c2_vals = [t.value for _, t in prof]
        consts["c2"] = max(c2_vals) if c2_vals else float("nan")
        consts["c2_profile"] = [[k, t.value, t.certified] for k, t in prof]
        c2_diverging = len(c2_vals) == 3 and c2_vals[2] > C2_GROWTH * c2_vals[0]
        c2_flat = len(c2_vals) == 3 and not c2_diverging and all(t.certified for _, t in prof)
        if r_diverging or c2_diverging:
            outcome = Outcome.NOT_HYPERBOLIC
            if r_diverging:
                notes.append("r diverges over the trailing half of the horizon")
            if c2_diverging:
                notes.append(f"tail constant grows by {c2_vals[2] / c2_vals[0]:.3f} over two doublings")
        elif r_bounded and c2_flat:
            outcome = Outcome.HYPERBOLIC
            notes.append(f"r bounded by {float(np.max(train.r_values))!r}; tail constant stable")
        else:
            pathway = NO_PATHWAY
            notes.append("r and tail constant are neither clearly bounded nor clearly diverging")
    else:
        if not (l_bounded or l_diverging):
            notes.append("l is neither clearly bounded nor clearly diverging")
        if l_diverging and not stable:
            notes.append(f"quasi-increasing constant still growing ({c1_half!r} -> {c1!r})")

    plateau, increasing = _trajectory_checks(k_est)
    if outcome is Outcome.HYPERBOLIC and not plateau:
        notes.append("K trajectory does not plateau; hyperbolic verdict downgraded")
        outcome = Outcome.INCONCLUSIVE
    elif outcome is Outcome.NOT_HYPERBOLIC and not (increasing or k_est.saturated):
        notes.append("K trajectory is not strictly increasing; non-hyperbolic verdict downgraded")
        outcome = Outcome.INCONCLUSIVE
    if outcome is Outcome.INCONCLUSIVE:
        consts["trajectory"] = [[N, v] for N, v in k_est.trajectory]
    return Verdict(outcome, pathway, consts, notes)


@dataclass
class NecessaryReport:
    K: float
    c1: float
    r_gated: int = 0
    tail_gated: int = 0
    r_violations: list[dict] = field(default_factory=list)
    tail_violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.r_violations and not self.tail_violations

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "c1": self.c1,
            "r_gated": self.r_gated,
            "tail_gated": self.tail_gated,
            "r_violations": self.r_violations,
            "tail_violations": self.tail_violations,
        }


def necessary_checks(train: TrainSpec, k_est: KEstimate, c1: float | None = None) -> NecessaryReport:
    """Check the two necessary conditions a finite K imposes on a train.

    * ``r_n <= 2M + 2 log M + 3 c1`` with ``M = max(K, 1)``, for every ``n``
      with ``l_{n+1} > 4 (K + c1)``;
    * ``sum_{k>=n} e^{-l_k} <= K e^{K + c1} e^{-l_n}`` for every ``n`` with
      ``l_n > 2K + c1``.
    """
    if k_est.saturated:
        raise ValueError("necessary checks need an unsaturated K estimate")
    if c1 is None:
        c1, _ = quasi_increasing_c1(train)
    K = k_est.value
    M = max(K, 1.0)
    rep = NecessaryReport(K, c1)
    l, r = train.l_values, train.r_values
    r_bound = 2 * M + 2 * math.log(M) + 3 * c1
    for n in range(1, train.n_max):
        if l[n] > 4 * (K + c1):
            rep.r_gated += 1
            if r[n - 1] > r_bound:
                rep.r_violations.append({"n": n, "r_n": float(r[n - 1]), "bound": r_bound})
    tail_bound = K * math.exp(K + c1)
    for n in range(1, train.n_max + 1):
        if l[n - 1] > 2 * K + c1:
            rep.tail_gated += 1
            c2 = tail_constant_c2(train, n)
            if c2.value > tail_bound:
                rep.tail_violations.append({"n": n, "c2": c2.value, "bound": tail_bound, "certified": c2.certified})
    return rep
