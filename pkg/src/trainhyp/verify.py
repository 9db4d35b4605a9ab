"""Seeded fuzzing of standalone inequalities and grid fits of comparison constants.

Each check draws uniform samples from a region inside its hypothesis set and
compares both sides.  Margins are relative, ``(rhs - lhs) / max(|lhs|, |rhs|)``,
and a sample counts as a violation when its margin is below ``-SLACK``.
"""

from __future__ import annotations

import contextlib
import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .gamma import delta_terms
from .hyptrig import fermi_distance_array, hexagon_f_array, lemma46_F_array, pentagon_F_array

SLACK = 1e-12
BATCH = 100_000

DEFAULT_REGIONS = {
    "lemma33": {"l": (0.0, 20.0), "r": (0.0, 50.0)},
    "lemma37": {"l": (0.0, 20.0), "r": (0.0, 50.0)},
    "delta_sandwich": {"l": (0.0, 20.0), "c": 1.0},
    "lemma43": {"u": (-5.0, 5.0), "v": (0.0, 5.0)},
    "lemma46": {"a": (0.0, 10.0), "x": (0.0, 10.0)},
    "cor47": {"a": (0.0, 10.0), "x": (0.0, 10.0)},
}
FIT_CHECKS = ("prop48", "prop49", "cor410")
CHECKS = tuple(DEFAULT_REGIONS) + FIT_CHECKS
# Short descriptive labels for the check ids.
LABELS = {
    "lemma33": "positive-part-bound",
    "lemma37": "growth-bound",
    "delta_sandwich": "delta-sandwich",
    "lemma43": "taxicab",
    "lemma46": "log-comparison",
    "cor47": "arcsinh-comparison",
    "prop48": "hexagon-fit",
    "prop49": "pentagon-fit",
    "cor410": "pentagon-linear-fit",
}


@dataclass
class InequalityReport:
    check_id: str
    samples: int
    violations: int
    worst_margin: float
    seed: int | None
    region: dict
    fitted: dict | None = None
    witness: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "samples": self.samples,
            "violations": self.violations,
            "worst_margin": self.worst_margin,
            "seed": self.seed,
            "region": {k: list(v) if isinstance(v, tuple) else v for k, v in self.region.items()},
            "fitted": self.fitted,
            "witness": self.witness,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InequalityReport":
        region = {k: tuple(v) if isinstance(v, list) else v for k, v in d["region"].items()}
        return cls(d["check_id"], d["samples"], d["violations"], d["worst_margin"], d["seed"], region,
                   d["fitted"], d["witness"])


def rel_margin(lhs, rhs):
    """Signed relative margin of ``lhs <= rhs``; zero when both sides vanish."""
    lhs, rhs = np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    with np.errstate(invalid="ignore", divide="ignore"):
        m = np.where(scale > 0, (rhs - lhs) / scale, 0.0)
    return m


def _uniform(rng, lo, hi, n, open_low=False):
    x = rng.uniform(lo, hi, n)
    if open_low:
        # uniform on (lo, hi]: reflect the half-open [lo, hi) draw
        x = hi - (x - lo)
    return x


# Each sampler returns (margins, columns) where columns names the drawn values.

def _lemma33(rng, n, reg):
    lo, hi = reg["l"]
    pts = np.sort(_uniform(rng, lo, hi, (n, 3), open_low=True), axis=1)
    lk, h, lk1 = pts[:, 0], pts[:, 1], pts[:, 2]
    rk = rng.uniform(*reg["r"], n)
    lhs = np.maximum(rk + h - lk1, 0.0)
    rhs = np.exp(h) * delta_terms(lk, lk1, rk)
    return rel_margin(lhs, rhs), {"l_k": lk, "h": h, "l_k1": lk1, "r_k": rk}


def growth_bound_sides(lk, lk1, rk, h):
    p = np.maximum(rk + h - lk1, 0.0)
    s = lk + lk1 - rk
    lhs = np.exp(h) * (np.exp(-0.5 * np.maximum(s, 0.0)) + np.maximum(-s, 0.0))
    rhs = (1 + p) * np.exp(0.5 * p)
    return lhs, rhs


def _lemma37(rng, n, reg):
    lk = _uniform(rng, *reg["l"], n, open_low=True)
    lk1 = rng.uniform(*reg["l"], n)
    h = rng.uniform(0.0, 1.0, n) * lk
    rk = rng.uniform(*reg["r"], n)
    lhs, rhs = growth_bound_sides(lk, lk1, rk, h)
    return rel_margin(lhs, rhs), {"l_k": lk, "l_k1": lk1, "r_k": rk, "h": h}


def sandwich_sides(lk, lk1, rk, c):
    base = np.exp(-lk) + np.exp(-lk1)
    d = delta_terms(lk, lk1, rk)
    return base, d, (1 + (1 + 2 * c) * math.exp(c)) * base


def _delta_sandwich(rng, n, reg):
    c = float(reg["c"])
    lk = _uniform(rng, *reg["l"], n, open_low=True)
    lk1 = _uniform(rng, *reg["l"], n, open_low=True)
    rk = rng.uniform(0.0, 1.0, n) * (2 * c + np.abs(lk - lk1))
    lower, d, upper = sandwich_sides(lk, lk1, rk, c)
    m = np.minimum(rel_margin(lower, d), rel_margin(d, upper))
    return m, {"l_k": lk, "l_k1": lk1, "r_k": rk}


def _lemma43(rng, n, reg):
    u1, u2 = rng.uniform(*reg["u"], n), rng.uniform(*reg["u"], n)
    v1, v2 = rng.uniform(*reg["v"], n), rng.uniform(*reg["v"], n)
    hi, lo = np.maximum(v1, v2), np.minimum(v1, v2)
    ua = np.where(v1 >= v2, u1, u2)
    ub = np.where(v1 >= v2, u2, u1)
    d = fermi_distance_array(u1, v1, u2, v2)
    d1 = (hi - lo) + fermi_distance_array(ua, lo, ub, lo)
    d2 = fermi_distance_array(ua, hi, ub, hi) + (hi - lo)
    m = np.minimum.reduce([rel_margin(0.5 * d1, d), rel_margin(d, d1), rel_margin(d2 / 3, d), rel_margin(d, d2)])
    return m, {"u1": u1, "v1": v1, "u2": u2, "v2": v2}


def _lemma46(rng, n, reg):
    a, x = rng.uniform(*reg["a"], n), rng.uniform(*reg["x"], n)
    F = lemma46_F_array(a, x)
    mid = a * np.exp(x)
    top = 2 * np.sinh(a) * np.cosh(x)
    return np.minimum(rel_margin(F, mid), rel_margin(mid, top)), {"a": a, "x": x}


def _cor47(rng, n, reg):
    # a e^x <= 2 sinh(G) and G <= sinh(1) a e^x + log 2, with G = arcsinh(sinh a cosh x)
    a, x = rng.uniform(*reg["a"], n), rng.uniform(*reg["x"], n)
    G = np.arcsinh(np.sinh(a) * np.cosh(x))
    ax = a * np.exp(x)
    m = np.minimum(rel_margin(ax, 2 * np.sinh(G)), rel_margin(G, math.sinh(1.0) * ax + math.log(2.0)))
    return m, {"a": a, "x": x}


_SAMPLERS = {
    "lemma33": _lemma33,
    "lemma37": _lemma37,
    "delta_sandwich": _delta_sandwich,
    "lemma43": _lemma43,
    "lemma46": _lemma46,
    "cor47": _cor47,
}


def _check_region(check_id: str, region: dict) -> dict:
    reg = dict(DEFAULT_REGIONS[check_id])
    for k, v in (region or {}).items():
        if k not in reg:
            raise ValueError(f"unknown region key {k!r} for {check_id}")
        reg[k] = tuple(float(x) for x in v) if isinstance(v, (list, tuple)) else float(v)
    for k, v in reg.items():
        if isinstance(v, tuple) and not (len(v) == 2 and v[0] <= v[1]):
            raise ValueError(f"region {k} must be an interval (lo, hi)")
    nonneg = {"lemma33": "lr", "lemma37": "lr", "delta_sandwich": "l", "lemma43": "v", "lemma46": "ax", "cor47": "ax"}
    for k in nonneg[check_id]:
        if reg[k][0] < 0:
            raise ValueError(f"region {k} must be non-negative for {check_id}")
    if check_id == "delta_sandwich" and reg["c"] < 0:
        raise ValueError("c must be non-negative")
    return reg


def run_check(check_id: str, samples: int = 100_000, seed: int = 0, region: dict | None = None,
              jobs: int = 1) -> InequalityReport:
    """Fuzz one inequality; fitted-constant ids delegate to :func:`fit_constants`."""
    if check_id in FIT_CHECKS:
        return fit_constants(check_id, l0=float((region or {}).get("l0", 1.0)))
    if check_id not in _SAMPLERS:
        raise ValueError(f"unknown check {check_id!r}")
    if samples < 1:
        raise ValueError("samples must be positive")
    reg = _check_region(check_id, region or {})
    sampler = _SAMPLERS[check_id]
    sizes = [BATCH] * (samples // BATCH) + ([samples % BATCH] if samples % BATCH else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def batch(i):
        margins, cols = sampler(np.random.default_rng(seeds[i]), sizes[i], reg)
        bad = int(np.count_nonzero(margins < -SLACK))
        j = int(np.argmin(margins))
        return bad, float(margins[j]), {k: float(v[j]) for k, v in cols.items()}

    if jobs > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(batch, range(len(sizes))))
    else:
        results = [batch(i) for i in range(len(sizes))]
    violations = sum(r[0] for r in results)
    worst = min(range(len(results)), key=lambda i: (results[i][1], i))
    return InequalityReport(check_id, samples, violations, results[worst][1], seed, reg,
                            witness=results[worst][2])


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid with ``points`` nodes per axis; refining maps ``p -> 2p - 1``."""

    points: int = 33
    x_max: float = 10.0
    t_max: float = 30.0

    def refined(self) -> "GridSpec":
        return GridSpec(2 * self.points - 1, self.x_max, self.t_max)


def _ratio_stats(ratio: np.ndarray, cols: dict) -> dict:
    i, j = int(np.argmin(ratio)), int(np.argmax(ratio))
    return {
        "c_lower": float(ratio[i]),
        "c_upper": float(ratio[j]),
        "argmin": {k: float(v.ravel()[i]) for k, v in cols.items()},
        "argmax": {k: float(v.ravel()[j]) for k, v in cols.items()},
    }


def _fit_prop48(l0: float, g: GridSpec):
    axis = np.linspace(l0, max(l0, g.x_max), g.points)
    t = np.linspace(0.0, g.t_max, g.points)
    X, Y, T = np.meshgrid(axis, axis, t, indexing="ij")
    f = hexagon_f_array(X, Y, T)
    bracket = delta_terms(X, Y, T)
    return (f / bracket).ravel(), {"x": X, "y": Y, "t": T}


def _pentagon_grid(l0: float, g: GridSpec):
    y = np.linspace(l0, max(l0, g.x_max), g.points)
    frac = np.linspace(0.0, 1.0, g.points)
    t = np.linspace(0.0, g.t_max, g.points)
    Y, A, B, T = np.meshgrid(y, frac, frac, t, indexing="ij")
    H = A * Y
    X = B * H
    return X, Y, T, H


def _fit_prop49(l0: float, g: GridSpec):
    X, Y, T, H = _pentagon_grid(l0, g)
    F = pentagon_F_array(X, Y, T, H)
    bracket = np.exp(X - H) + np.exp(-np.maximum(Y - H - T, 0.0)) + np.maximum(T + H - Y, 0.0)
    return (F / bracket).ravel(), {"x": X, "y": Y, "t": T, "h": H}


def _fit_cor410(l0: float, g: GridSpec):
    # The comparison with 1 + (t + h - y)_+ is two-sided only where t + h >= y;
    # below that F stays under the prop49 bracket, which is at most 2.
    X, Y, T, H = _pentagon_grid(l0, g)
    keep = (T + H >= Y).ravel()
    X, Y, T, H = (a.ravel()[keep] for a in (X, Y, T, H))
    F = pentagon_F_array(X, Y, T, H)
    return F / (1 + (T + H - Y)), {"x": X, "y": Y, "t": T, "h": H}


_FITTERS = {"prop48": _fit_prop48, "prop49": _fit_prop49, "cor410": _fit_cor410}


def fit_constants(check_id: str, l0: float = 1.0, grid: GridSpec | None = None) -> InequalityReport:
    """Min and max of the comparison ratio over a deterministic grid.

    ``prop48``: hexagon side over its four-term bracket on ``x, y in [l0, 10]``,
    ``t in [0, 30]``.  ``prop49``: pentagon distance over its three-term
    bracket on ``y in [l0, 10]``, ``h = a y``, ``x = b h`` with ``a, b`` in
    ``[0, 1]`` and ``t in [0, 30]``.  ``cor410``: the same distance over
    ``1 + (t + h - y)_+`` restricted to ``t + h >= y``.  A violation is a ratio that is not finite and
    positive.
    """
    if check_id not in _FITTERS:
        raise ValueError(f"unknown fit {check_id!r}")
    if not l0 > 0:
        raise ValueError("l0 must be positive")
    g = grid or GridSpec()
    if g.points < 1:
        raise ValueError("empty grid")
    ratio, cols = _FITTERS[check_id](l0, g)
    if ratio.size == 0:
        raise ValueError("empty grid")
    bad = int(np.count_nonzero(~np.isfinite(ratio) | (ratio <= 0)))
    stats = _ratio_stats(np.where(np.isfinite(ratio), ratio, np.inf), cols)
    region = {"l0": l0, "points": g.points, "x_max": g.x_max, "t_max": g.t_max}
    worst = stats["c_lower"] if bad == 0 else -math.inf
    return InequalityReport(check_id, int(ratio.size), bad, worst, None, region, fitted=stats)


@contextlib.contextmanager
def _open_text(target):
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="") as fh:
            yield fh


def write_fit_csv(reports, path) -> None:
    with _open_text(path) as fh:
        w = csv.writer(fh)
        w.writerow(["region", "l0", "c_lower", "c_upper", "argmin", "argmax"])
        for rep in reports:
            fit = rep.fitted
            fmt = lambda d: ";".join(f"{k}={v!r}" for k, v in d.items())  # noqa: E731
            w.writerow([rep.check_id, repr(rep.region["l0"]), repr(fit["c_lower"]), repr(fit["c_upper"]),
                        fmt(fit["argmin"]), fmt(fit["argmax"])])
