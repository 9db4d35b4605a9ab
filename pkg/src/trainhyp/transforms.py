"""Transformations of trains with propagated bounds on K.

Every transform returns a :class:`TransformRecord` holding the output train
and, when the input's K (or K-zero) is supplied, the predicted upper bound for
the output's value.  The perturbation, union, permutation and embedding bounds
come from explicit constants in the arguments establishing these operations,
not from the statements themselves, so they are labelled "proof-level".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Constant, SequenceFamily, SpecError, TrainSpec, explicit
from .gamma import GammaKind, KEstimate, k_estimate

PROOF_LEVEL = "proof-level bound"
STATEMENT_LEVEL = "statement-level bound"


@dataclass
class TransformRecord:
    input_id: str
    tag: str
    params: dict
    output: TrainSpec
    predicted_bound: float | None = None
    predicted_bound_ref: str = ""
    bound_kind: str = ""  # "full" or "zero": which functional the bound is about
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "input_id": self.input_id,
            "tag": self.tag,
            "params": self.params,
            "output": self.output.to_dict(),
            "output_id": self.output.digest(),
            "predicted_bound": self.predicted_bound,
            "predicted_bound_ref": self.predicted_bound_ref,
            "bound_kind": self.bound_kind,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransformRecord":
        from .core import spec_from_dict

        return cls(
            input_id=d["input_id"],
            tag=d["tag"],
            params=d["params"],
            output=spec_from_dict(d["output"]),
            predicted_bound=d["predicted_bound"],
            predicted_bound_ref=d["predicted_bound_ref"],
            bound_kind=d["bound_kind"],
            notes=list(d["notes"]),
        )


def _values(fam: SequenceFamily | Sequence[float] | np.ndarray, n: int) -> np.ndarray:
    if isinstance(fam, SequenceFamily):
        return fam.values(n)
    arr = np.asarray(fam, dtype=float)
    if arr.shape != (n,):
        raise SpecError(f"expected {n} values, got shape {arr.shape}")
    return arr


def _ids(*trains: TrainSpec) -> str:
    return ",".join(t.digest() for t in trains)


def perturbation_bound(c: float, K: float) -> float:
    return c + 2 + (1 + 2 * c + K) * math.exp(c) * math.exp(K / 2) + (1 + 3 * c) * math.exp(1.5 * c) * K


def perturb(train: TrainSpec, dl, dr, K: float | None = None) -> TransformRecord:
    """``l' = l + dl`` and ``r' = r + dr`` with ``c = max(sup|dl|, sup|dr|)``."""
    N = train.n_max
    dlv, drv = _values(dl, N), _values(dr, N)
    if not (np.all(np.isfinite(dlv)) and np.all(np.isfinite(drv))):
        raise SpecError("perturbations must be finite")
    out = TrainSpec(explicit(train.l_values + dlv), explicit(np.maximum(train.r_values + drv, 0.0)), N)
    if np.any(train.r_values + drv < 0):
        raise SpecError("perturbed r has negative terms")
    c = float(max(np.max(np.abs(dlv)), np.max(np.abs(drv))))
    bound = None if K is None else perturbation_bound(c, K)
    notes = []
    if np.all(dlv == 0) and np.all(drv <= 0):
        notes.append("r shrinks pointwise with l unchanged, so K' <= K as well")
    return TransformRecord(train.digest(), "perturb", {"c": c}, out, bound, PROOF_LEVEL, "full", notes)


def shrink_r(train: TrainSpec, factors, K: float | None = None) -> TransformRecord:
    """``r'_n = t_n r_n`` with ``0 <= t_n <= 1``; K cannot grow."""
    t = _values(factors, train.n_max)
    if np.any(t < 0) or np.any(t > 1):
        raise SpecError("shrink factors must lie in [0, 1]")
    out = TrainSpec(train.l, explicit(train.r_values * t), train.n_max)
    return TransformRecord(train.digest(), "shrink_r", {}, out, K, STATEMENT_LEVEL, "full")


def scaling_bound(lam: float, K: float) -> float:
    return lam * K + (1 + lam) * K**lam


def scale(train: TrainSpec, lam: float, mu: float, K: float | None = None) -> TransformRecord:
    """``l' = lam l`` and ``r' = mu r`` for ``lam >= 1`` and ``0 <= mu <= lam``."""
    if not lam >= 1:
        raise SpecError(f"lambda must be >= 1, got {lam!r}")
    if not 0 <= mu <= lam:
        raise SpecError(f"mu must lie in [0, lambda], got {mu!r}")
    out = TrainSpec(train.l.scaled(lam), train.r.scaled(mu), train.n_max)
    bound = None if K is None else scaling_bound(lam, K)
    return TransformRecord(train.digest(), "scale", {"lambda": lam, "mu": mu}, out, bound, STATEMENT_LEVEL, "full")


def union_bound(k0s: Sequence[float]) -> float:
    """Pairwise iteration of ``2 K1 + 2 K2``."""
    it = iter(k0s)
    b = next(it)
    for k in it:
        b = 2 * b + 2 * k
    return b


def alternating(lengths: Sequence[int]) -> list[list[int]]:
    """Round-robin interleaving: output positions of each part's terms."""
    out = [[] for _ in lengths]
    pos = 1
    for j in range(max(lengths)):
        for i, n in enumerate(lengths):
            if j < n:
                out[i].append(pos)
                pos += 1
    return out


def union(parts: Sequence[TrainSpec], interleaving: Sequence[Sequence[int]], k0s=None) -> TransformRecord:
    """Merge flute trains: the ``j``-th term of part ``i`` goes to ``interleaving[i][j]``."""
    if not parts:
        raise SpecError("union needs at least one part")
    if len(interleaving) != len(parts):
        raise SpecError("one position list per part is required")
    total = sum(p.n_max for p in parts)
    merged = np.full(total, np.nan)
    seen = np.zeros(total, dtype=bool)
    for p, positions in zip(parts, interleaving):
        if not p.is_flute:
            raise SpecError("union parts must have r = 0")
        if len(positions) != p.n_max:
            raise SpecError("each part needs one position per term")
        for j, q in enumerate(positions):
            if not 1 <= q <= total or seen[q - 1]:
                raise SpecError("interleaving is not a bijection onto 1..total")
            seen[q - 1] = True
            merged[q - 1] = p.l_values[j]
    out = TrainSpec(explicit(merged), Constant(0.0), total)
    bound = None if k0s is None else union_bound(list(k0s))
    return TransformRecord(_ids(*parts), "union", {"interleaving": [list(map(int, s)) for s in interleaving]},
                           out, bound, PROOF_LEVEL, "zero")


def permutation_bound(N: int, K0: float) -> float:
    return 4 * N + 1 + K0


def _check_permutation(sigma: Sequence[int], n: int) -> np.ndarray:
    s = np.asarray(sigma)
    if s.shape != (n,) or not np.array_equal(np.sort(s), np.arange(1, n + 1)):
        raise SpecError(f"sigma is not a permutation of 1..{n}")
    return s


def permute_bounded(train: TrainSpec, sigma: Sequence[int], N: int, K0: float | None = None) -> TransformRecord:
    """``l'_n = l_{sigma(n)}`` for a permutation with ``|sigma(n) - n| <= N``."""
    s = _check_permutation(sigma, train.n_max)
    disp = int(np.max(np.abs(s - np.arange(1, train.n_max + 1))))
    if disp > N:
        raise SpecError(f"displacement {disp} exceeds N = {N}")
    out = TrainSpec(explicit(train.l_values[s - 1]), train.r, train.n_max)
    bound = None if K0 is None else permutation_bound(N, K0)
    return TransformRecord(train.digest(), "permute", {"N": int(N), "sigma": s.tolist()}, out, bound,
                           PROOF_LEVEL, "zero")


def windowed_shuffle(n: int, N: int, rng: np.random.Generator) -> np.ndarray:
    """Permutation of 1..n shuffling consecutive blocks of ``N + 1``; displacement <= N."""
    s = np.arange(1, n + 1)
    for start in range(0, n, N + 1):
        block = s[start : start + N + 1]
        s[start : start + N + 1] = rng.permutation(block)
    return s


def adjacent_swaps(n: int, rng: np.random.Generator, p: float = 0.5) -> np.ndarray:
    """Disjoint random transpositions of neighbours; displacement <= 1."""
    s = np.arange(1, n + 1)
    i = 0
    while i < n - 1:
        if rng.random() < p:
            s[i], s[i + 1] = s[i + 1], s[i]
            i += 2
        else:
            i += 1
    return s


def embedding_bound(N: int, K0: float) -> float:
    return N * math.exp(N) * K0 + N


def embed_subsequence(base: TrainSpec, positions: Sequence[int], filler, N: int,
                      K0: float | None = None) -> TransformRecord:
    """Place ``base`` at ``positions`` and fill the gaps from ``filler``.

    ``filler`` is indexed by output position.  Requires ``n_{k+1} - n_k <= N``
    and, for every ``m`` strictly between consecutive positions,
    ``max(l'_{n_k}, l'_{n_{k+1}}) <= l'_m + N``.
    """
    pos = np.asarray(positions, dtype=int)
    if pos.shape != (base.n_max,):
        raise SpecError("one position per base term is required")
    if pos[0] < 1 or np.any(np.diff(pos) <= 0):
        raise SpecError("positions must be increasing and start at >= 1")
    gaps = np.diff(pos)
    if gaps.size and int(np.max(gaps)) > N:
        raise SpecError(f"gap {int(np.max(gaps))} exceeds N = {N}")
    total = int(pos[-1])
    out_l = _values(filler, total).copy()
    out_l[pos - 1] = base.l_values
    for a, b in zip(pos[:-1], pos[1:]):
        if b - a > 1:
            top = max(out_l[a - 1], out_l[b - 1])
            inner = out_l[a : b - 1]
            if np.any(top > inner + N):
                raise SpecError(f"filler between positions {a} and {b} is more than N below its neighbours")
    out = TrainSpec(explicit(out_l), Constant(0.0), total)
    bound = None if K0 is None else embedding_bound(N, K0)
    return TransformRecord(base.digest(), "embed", {"N": int(N), "positions": pos.tolist()}, out, bound,
                           PROOF_LEVEL, "zero",
                           ["output is in the class of hyperbolic flute sequences whenever the base is"])


def companion_nondecreasing(train: TrainSpec) -> tuple[np.ndarray, float]:
    """Running max ``l'_n = max(l_1..l_n)`` and ``c = max |l_n - l'_n|``."""
    run = np.maximum.accumulate(train.l_values)
    return run, float(np.max(run - train.l_values))


def h_membership(l: SequenceFamily, horizon: int, **kwargs) -> KEstimate:
    """Full-kind estimate of the flute train with lengths ``l``; membership is a plateau."""
    return k_estimate(TrainSpec.flute(l, horizon), GammaKind.FULL, **kwargs)
