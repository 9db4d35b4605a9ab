"""The characterization functional of a train.

For a train with half-lengths ``l_n`` and ``r_n`` the quantity

    K = sup_n sup_{h in [0, l_n]} min_{m in [A_n(h), B_n(h)]} Gamma_nm(h)

is finite exactly when the train is Gromov hyperbolic.  This module evaluates
the three variants of Gamma (full, star, zero), the window indices, the inner
minimum and the truncated estimate ``K_N``.

The scalar functions (:func:`delta`, :func:`gamma_value`, :func:`min_gamma`)
follow the case definitions literally and are the reference path.  The bulk
estimators (:func:`sup_over_h`, :func:`k_estimate`) run compiled scan kernels;
the test-suite checks both paths against each other.
"""

from __future__ import annotations

import contextlib
import csv
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .core import TrainSpec

DEFAULT_CAP = 1e12
INFINITY = math.inf
"""Sentinel for ``B_n(h)`` when no ``m > n`` within the horizon has ``l_m <= h``."""


class GammaKind(enum.Enum):
    FULL = "full"
    STAR = "star"
    ZERO = "zero"

    @property
    def code(self) -> int:
        return {"full": _kernels.FULL, "star": _kernels.STAR, "zero": _kernels.ZERO}[self.value]


@dataclass(frozen=True)
class Window:
    a: int
    b: int | float  # an index, or INFINITY

    @property
    def unbounded(self) -> bool:
        return self.b == INFINITY


def pos_part(x: float) -> float:
    return x if x > 0 else 0.0


def _log_delta_terms(lk: float, lk1: float, rk: float) -> list[float]:
    """Logs of the four summands of Delta(k); ``-inf`` marks a zero summand."""
    p = rk - lk - lk1
    return [
        -lk,
        -lk1,
        -0.5 * pos_part(lk + lk1 - rk),
        math.log(p) if p > 0 else -math.inf,
    ]


def _logsumexp(xs) -> float:
    top = max(xs)
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(math.exp(x - top) for x in xs))


def _check_index(train: TrainSpec, k: int, hi: int):
    if not 1 <= k <= hi:
        raise IndexError(f"index {k} outside 1..{hi}")


def delta_terms(lk, lk1, rk):
    """``e^{-l_k} + e^{-l_{k+1}} + e^{-(l_k + l_{k+1} - r_k)_+/2} + (r_k - l_k - l_{k+1})_+``.

    Accepts scalars or numpy arrays.
    """
    s = lk + lk1 - rk
    return np.exp(-lk) + np.exp(-lk1) + np.exp(-0.5 * np.maximum(s, 0.0)) + np.maximum(-s, 0.0)


def delta(train: TrainSpec, k: int) -> float:
    """Delta(k) of the train, see :func:`delta_terms`."""
    _check_index(train, k, train.n_max - 1)
    lk, lk1, rk = train.l_values[k - 1], train.l_values[k], train.r_values[k - 1]
    return float(delta_terms(float(lk), float(lk1), float(rk)))


def log_delta(train: TrainSpec, k: int) -> float:
    """``log Delta(k)``, finite even where ``Delta(k)`` underflows."""
    _check_index(train, k, train.n_max - 1)
    d = delta(train, k)
    if d > 1e-280:
        return math.log(d)
    lk, lk1, rk = train.l_values[k - 1], train.l_values[k], train.r_values[k - 1]
    return _logsumexp(_log_delta_terms(lk, lk1, rk))


def _check_h(train: TrainSpec, n: int, h: float):
    _check_index(train, n, train.n_max)
    ln = train.l_values[n - 1]
    if not 0 <= h <= ln:
        raise ValueError(f"h = {h!r} outside [0, l_{n}] = [0, {ln!r}]")


def window_indices(train: TrainSpec, n: int, h: float) -> Window:
    """``A_n(h)`` (fallback 1) and ``B_n(h)`` (fallback :data:`INFINITY`).

    ``B_n(h)`` only looks at indices up to the horizon, so the sentinel means
    "no such m <= n_max".
    """
    _check_h(train, n, h)
    l = train.l_values
    a = next((m for m in range(n - 1, 0, -1) if l[m - 1] <= h), 1)
    b = next((m for m in range(n + 1, train.n_max + 1) if l[m - 1] <= h), INFINITY)
    return Window(a, b)


def _exp_sum(h: float, logs, cap: float) -> float:
    """``min(cap, sum_i exp(h + logs_i))`` without overflow."""
    logcap = math.log(cap) + 1.0
    return min(cap, math.fsum(math.exp(min(h + x, logcap)) for x in logs))


def gamma_value(train: TrainSpec, kind: GammaKind, n: int, m: int, h: float, cap: float = DEFAULT_CAP) -> float:
    """Gamma_nm(h) of the requested kind, clipped at ``cap``.

    A returned value equal to ``cap`` means the true value is at least ``cap``.
    Case selection uses ``l_m <= h``.  For the zero kind, every case without an
    explicit formula of its own falls back to the star formula.
    """
    _check_h(train, n, h)
    _check_index(train, m, train.n_max)
    l, r = train.l_values, train.r_values
    L = lambda i: float(l[i - 1])  # noqa: E731
    R = lambda i: float(r[i - 1])  # noqa: E731
    kind = GammaKind(kind)

    if m == n:
        return min(cap, min(h, L(n) - h))

    if kind is GammaKind.FULL:
        dsum = lambda lo, hi: _exp_sum(h, [log_delta(train, k) for k in range(lo, hi + 1)], cap)  # noqa: E731
        if m < n:
            if L(m) <= h:
                v = pos_part(R(m) + h - L(m + 1)) + dsum(m + 1, n - 1)
            else:
                v = L(m) - h + dsum(m, n - 1)
        else:
            if L(m) > h:
                v = L(m) - h + dsum(n, m - 1)
            else:
                v = pos_part(R(m - 1) + h - L(m - 1)) + dsum(n, m - 2)
        return min(cap, v)

    esum = lambda lo, hi: _exp_sum(h, [-L(k) for k in range(lo, hi + 1)], cap)  # noqa: E731
    if kind is GammaKind.ZERO and L(m) <= h:
        v = esum(m + 1, n) if m < n else esum(n, m - 1)
        return min(cap, v)
    if m < n:
        if L(m) <= h:
            v = pos_part(R(m) + h - L(m + 1)) + esum(m + 1, n)
        else:
            v = L(m) - h + esum(m, n)
    else:
        if L(m) > h:
            v = L(m) - h + esum(n, m)
        else:
            v = pos_part(R(m - 1) + h - L(m - 1)) + esum(n, m - 1)
    return min(cap, v)


def _tail_lower_bound(train: TrainSpec, kind: GammaKind, n: int, m: int, h: float, cap: float) -> float:
    """A lower bound for Gamma_nj(h) valid for every ``j >= m > n``."""
    if kind is GammaKind.FULL:
        return _exp_sum(h, [log_delta(train, k) for k in range(n, m - 1)], cap)
    return _exp_sum(h, [-float(train.l_values[k - 1]) for k in range(n, m)], cap)


def min_gamma(train: TrainSpec, kind: GammaKind, n: int, h: float, cap: float = DEFAULT_CAP) -> tuple[float, int]:
    """Minimum of Gamma_nm(h) over ``m`` in the window, with the smallest argmin.

    The right part of the window is scanned up to ``min(B_n(h), n_max)``; the
    scan stops early once the partial sum ``e^h sum Delta(k)`` (which bounds
    every later candidate from below) exceeds the incumbent.
    """
    kind = GammaKind(kind)
    w = window_indices(train, n, h)
    best, arg = math.inf, n
    for m in range(w.a, n + 1):
        v = gamma_value(train, kind, n, m, h, cap)
        if v < best:
            best, arg = v, m
    hi = train.n_max if w.unbounded else int(w.b)
    for m in range(n + 1, hi + 1):
        if _tail_lower_bound(train, kind, n, m, h, cap) > best:
            break
        v = gamma_value(train, kind, n, m, h, cap)
        if v < best:
            best, arg = v, m
    return best, arg


class _Engine:
    """Per-train arrays consumed by the compiled kernels."""

    def __init__(self, train: TrainSpec, kind: GammaKind, cap: float):
        self.train = train
        self.kind = GammaKind(kind)
        self.cap = float(cap)
        self.logcap = math.log(self.cap) + 1.0
        N = train.n_max
        self.N = N
        self.L = np.concatenate([[0.0], train.l_values, [math.inf]])
        self.R = np.concatenate([[0.0], train.r_values, [0.0]])
        self.logD = np.full(N + 1, -math.inf)
        for k in range(1, N):
            self.logD[k] = log_delta(train, k)
        self.premin = np.full(N + 1, math.inf)
        self.premin[1:] = np.minimum.accumulate(train.l_values)
        self.sufmin = np.full(N + 2, math.inf)
        self.sufmin[1 : N + 1] = np.minimum.accumulate(train.l_values[::-1])[::-1]

    def args(self):
        return (self.kind.code, self.L, self.R, self.logD, self.premin, self.sufmin, self.N)

    def min_gamma(self, n: int, h: float) -> tuple[float, int]:
        v, m = _kernels.min_gamma(*self.args(), n, float(h), self.logcap, self.cap)
        return float(v), int(m)

    def min_many(self, n: int, hs) -> tuple[np.ndarray, np.ndarray]:
        return _kernels.min_many(*self.args(), n, np.asarray(hs, dtype=float), self.logcap, self.cap)


@dataclass
class SupResult:
    sup: float
    h: float
    m: int
    profile: list[tuple[float, float, int]] = field(default_factory=list)


def sup_over_h(
    train: TrainSpec,
    kind: GammaKind,
    n: int,
    grid: int = 256,
    h_floor: float = 0.0,
    cap: float = DEFAULT_CAP,
    refine: bool = True,
) -> SupResult:
    """Largest value of ``h -> min_gamma`` found on ``[h_floor, l_n]``.

    Probes a uniform grid of ``grid`` points, every ``l_m`` in range, the
    positive-part kinks ``l_{m+1} - r_m`` and ``l_m - r_m``, and ``l_n / 2``;
    then runs a golden-section pass on the brackets around the few best local
    maxima among the probes and a bisection for the argmin switch inside the
    best probe intervals where the argmin changes.
    With ``refine=False`` the kinks and the golden pass are skipped, so the
    probe set depends on ``l`` only.
    """
    _check_index(train, n, train.n_max)
    ln = float(train.l_values[n - 1])
    if not 0 <= h_floor <= ln:
        raise ValueError(f"h_floor = {h_floor!r} outside [0, l_{n}]")
    if grid < 1:
        raise ValueError("grid must be positive")
    eng = _Engine(train, kind, cap)
    hs = _kernels.candidates(eng.L, eng.R, eng.N, n, int(grid), float(h_floor), bool(refine))
    vals, args = eng.min_many(n, hs)
    rows = [(float(h), float(v), int(m)) for h, v, m in zip(hs, vals, args)]
    i = int(np.argmax(vals))
    best = rows[i]
    if refine and hs.size > 1:
        trace = np.empty((_kernels._REFINE_ITERS, 3))
        for p in _kernels.peaks(hs, vals, _kernels._REFINE_PEAKS):
            lo, hi = hs[max(p - 1, 0)], hs[min(p + 1, hs.size - 1)]
            if hi > lo:
                used, rh, rv, rm = _kernels.refine(*eng.args(), n, lo, hi, eng.logcap, eng.cap, trace)
                rows.extend((float(h), float(v), int(m)) for h, v, m in trace[:used])
                if rv > best[1]:
                    best = (float(rh), float(rv), int(rm))
        for i in _kernels.switches(hs, vals, args, _kernels._REFINE_PEAKS):
            rh, rv, rm = _kernels.refine_switch(*eng.args(), n, hs[i], hs[i + 1], args[i], args[i + 1],
                                                eng.logcap, eng.cap)
            rows.append((float(rh), float(rv), int(rm)))
            if rv > best[1]:
                best = (float(rh), float(rv), int(rm))
    rows.sort(key=lambda row: row[0])
    return SupResult(best[1], best[0], best[2], rows)


@contextlib.contextmanager
def _open_text(target):
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="") as fh:
            yield fh


def write_profile(rows, path) -> None:
    with _open_text(path) as fh:
        w = csv.writer(fh)
        w.writerow(["h", "min_gamma", "argmin_m"])
        for h, v, m in sorted(rows, key=lambda row: row[0]):
            w.writerow([repr(h), repr(v), m])


def emit_profile(train: TrainSpec, kind: GammaKind, n: int, path, grid: int = 256, h_floor: float = 0.0,
                 cap: float = DEFAULT_CAP) -> Path:
    """Write the CSV profile ``h,min_gamma,argmin_m`` of one index ``n``."""
    res = sup_over_h(train, kind, n, grid=grid, h_floor=h_floor, cap=cap)
    write_profile(res.profile, path)
    return Path(path)


@dataclass
class KEstimate:
    kind: GammaKind
    value: float
    witness: tuple[int, float, int]
    n_max: int
    h_grid: int
    h_floor: float
    trajectory: list[tuple[int, float]]
    saturated: bool
    cap: float = DEFAULT_CAP
    refine: bool = True
    per_n: np.ndarray | None = field(default=None, repr=False, compare=False)

    def value_at(self, N: int) -> float:
        """``K_N`` for any ``N <= n_max`` (prefix max of the per-index sups)."""
        if self.per_n is None:
            raise ValueError("per-index sups were not retained")
        return float(np.max(self.per_n[:N]))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "value": self.value,
            "witness": {"n": self.witness[0], "h": self.witness[1], "m": self.witness[2]},
            "n_max": self.n_max,
            "h_grid": self.h_grid,
            "h_floor": self.h_floor,
            "trajectory": [[N, v] for N, v in self.trajectory],
            "saturated": self.saturated,
            "cap": self.cap,
            "refine": self.refine,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KEstimate":
        w = d["witness"]
        return cls(
            kind=GammaKind(d["kind"]),
            value=float(d["value"]),
            witness=(int(w["n"]), float(w["h"]), int(w["m"])),
            n_max=int(d["n_max"]),
            h_grid=int(d["h_grid"]),
            h_floor=float(d["h_floor"]),
            trajectory=[(int(N), float(v)) for N, v in d["trajectory"]],
            saturated=bool(d["saturated"]),
            cap=float(d.get("cap", DEFAULT_CAP)),
            refine=bool(d.get("refine", True)),
        )


def checkpoints(n_max: int, count: int = 8) -> list[int]:
    step = math.ceil(n_max / count)
    pts = list(range(step, n_max, step))
    return pts + [n_max]


def k_estimate(
    train: TrainSpec,
    kind: GammaKind = GammaKind.FULL,
    n_max: int | None = None,
    grid: int = 256,
    h_floor: float = 0.0,
    cap: float = DEFAULT_CAP,
    refine: bool = True,
    jobs: int = 1,
    checkpoints_at: list[int] | None = None,
) -> KEstimate:
    """Truncated estimate ``K_N = max_{n <= N} sup_h min_m Gamma_nm(h)``.

    ``n_max`` bounds the outer index only; the inner minimum always sees the
    whole horizon of ``train``.  Per-index work is split into contiguous blocks
    over ``jobs`` threads and reduced by a first-max rule, so the result does
    not depend on ``jobs``.
    """
    kind = GammaKind(kind)
    N = train.n_max if n_max is None else int(n_max)
    if not 1 <= N <= train.n_max:
        raise ValueError(f"n_max = {N} outside 1..{train.n_max}")
    if grid < 1:
        raise ValueError("grid must be positive")
    if h_floor < 0:
        raise ValueError("h_floor must be non-negative")
    eng = _Engine(train, kind, cap)
    out_v = np.zeros(train.n_max + 1)
    out_h = np.zeros(train.n_max + 1)
    out_m = np.zeros(train.n_max + 1, dtype=np.int64)

    def run(lo: int, hi: int):
        _kernels.sup_range(*eng.args(), lo, hi, int(grid), float(h_floor), eng.logcap, eng.cap, bool(refine),
                           out_v, out_h, out_m)

    jobs = max(1, min(int(jobs), N))
    bounds = np.linspace(1, N + 1, jobs + 1).astype(int)
    blocks = [(int(bounds[i]), int(bounds[i + 1]) - 1) for i in range(jobs) if bounds[i + 1] > bounds[i]]
    if len(blocks) == 1:
        run(*blocks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            list(pool.map(lambda b: run(*b), blocks))

    per_n = out_v[1 : N + 1].copy()
    per_n[per_n < 0] = 0.0  # indices with l_n < h_floor contribute nothing
    i = int(np.argmax(per_n))
    value = float(per_n[i])
    n_star = i + 1
    if out_v[n_star] < 0:
        witness = (n_star, float("nan"), n_star)
    else:
        witness = (n_star, float(out_h[n_star]), int(out_m[n_star]))
    pts = checkpoints(N) if checkpoints_at is None else sorted(p for p in checkpoints_at if 1 <= p <= N)
    prefix = np.maximum.accumulate(per_n)
    trajectory = [(int(p), float(prefix[p - 1])) for p in pts]
    return KEstimate(
        kind=kind,
        value=value,
        witness=witness,
        n_max=N,
        h_grid=int(grid),
        h_floor=float(h_floor),
        trajectory=trajectory,
        saturated=value >= cap,
        cap=float(cap),
        refine=bool(refine),
        per_n=per_n,
    )
