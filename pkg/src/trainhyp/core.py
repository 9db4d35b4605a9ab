"""Train specifications: sequence families and their finite materialization.

A train is fully determined by two sequences, the half-lengths ``l_n`` of the
fundamental geodesics and ``r_n`` of the second fundamental geodesics.  Indices
are 1-based throughout; ``r_n = 0`` encodes a puncture, so a flute surface is
``r = Constant(0)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np
from scipy import integrate


class SpecError(ValueError):
    """Raised for malformed or invalid train specifications."""


class SequenceFamily:
    """A real sequence indexed from 1, either explicit or in closed form."""

    kind: str = ""

    def term(self, n: int) -> float:
        raise NotImplementedError

    def values(self, n_max: int) -> np.ndarray:
        return np.array([self.term(n) for n in range(1, n_max + 1)], dtype=float)

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def scaled(self, factor: float) -> "SequenceFamily":
        raise NotImplementedError

    @property
    def length(self) -> int | None:
        """Number of available terms, ``None`` for unbounded families."""
        return None

    @property
    def increasing(self) -> bool:
        """True when terms are strictly increasing in ``n`` for every ``n >= 1``."""
        return False

    def tail_integral(self, start: float, shift: float = 0.0) -> float:
        """Upper bound for ``sum_{k > start} exp(shift - term(k))``.

        Only meaningful for increasing families, where ``exp(-term)`` is
        decreasing and the sum is dominated by the integral from ``start``.
        Returns ``inf`` when the tail diverges.
        """
        raise SpecError(f"{self.kind} family has no tail bound")

    @staticmethod
    def from_dict(payload: Any) -> "SequenceFamily":
        if not isinstance(payload, dict):
            raise SpecError(f"sequence family must be a JSON object, got {type(payload).__name__}")
        kind = payload.get("kind")
        try:
            if kind == "explicit":
                return Explicit(tuple(float(v) for v in payload["values"]))
            if kind == "constant":
                return Constant(float(payload["value"]))
            if kind == "power":
                return Power(float(payload["a"]), float(payload["b"]), float(payload["c"]))
            if kind == "log":
                return LogFamily(float(payload["a"]), float(payload["c"]))
        except KeyError as exc:
            raise SpecError(f"{kind} family is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise SpecError(f"bad {kind} family parameters: {exc}") from None
        raise SpecError(f"unknown sequence family kind {kind!r}")


@dataclass(frozen=True)
class Explicit(SequenceFamily):
    values_: tuple[float, ...]
    kind = "explicit"

    def __post_init__(self):
        if len(self.values_) == 0:
            raise SpecError("explicit sequence must be non-empty")
        if not all(math.isfinite(v) for v in self.values_):
            raise SpecError("explicit sequence contains non-finite values")

    def term(self, n: int) -> float:
        if not 1 <= n <= len(self.values_):
            raise IndexError(f"index {n} outside explicit sequence of length {len(self.values_)}")
        return self.values_[n - 1]

    def values(self, n_max: int) -> np.ndarray:
        if n_max > len(self.values_):
            raise IndexError(f"explicit sequence has {len(self.values_)} terms, {n_max} requested")
        return np.array(self.values_[:n_max], dtype=float)

    @property
    def length(self) -> int:
        return len(self.values_)

    @property
    def increasing(self) -> bool:
        return False

    def scaled(self, factor: float) -> "Explicit":
        return Explicit(tuple(factor * v for v in self.values_))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "explicit", "values": list(self.values_)}


@dataclass(frozen=True)
class Constant(SequenceFamily):
    value: float
    kind = "constant"

    def term(self, n: int) -> float:
        return self.value

    def values(self, n_max: int) -> np.ndarray:
        return np.full(n_max, self.value, dtype=float)

    def scaled(self, factor: float) -> "Constant":
        return Constant(factor * self.value)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class Power(SequenceFamily):
    """``n -> a * n**b + c``."""

    a: float
    b: float
    c: float
    kind = "power"

    def _eval(self, n: np.ndarray) -> np.ndarray:
        return self.a * n**self.b + self.c

    # term and values share one vectorized path so they agree bit for bit
    def term(self, n: int) -> float:
        return float(self._eval(np.array([n], dtype=float))[0])

    def values(self, n_max: int) -> np.ndarray:
        return self._eval(np.arange(1, n_max + 1, dtype=float))

    @property
    def increasing(self) -> bool:
        return self.a > 0 and self.b > 0

    def tail_integral(self, start: float, shift: float = 0.0) -> float:
        if not self.increasing:
            raise SpecError("power family is not increasing")
        a, b, c = self.a, self.b, self.c
        value, _ = integrate.quad(
            lambda x: math.exp(shift - a * x**b - c), start, math.inf, epsabs=0.0, epsrel=1e-10, limit=200
        )
        return value

    def scaled(self, factor: float) -> "Power":
        return Power(factor * self.a, self.b, factor * self.c)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "power", "a": self.a, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class LogFamily(SequenceFamily):
    """``n -> a * log(n + 1) + c``."""

    a: float
    c: float
    kind = "log"

    def term(self, n: int) -> float:
        return float(self.a * np.log(np.array([n + 1], dtype=float))[0] + self.c)

    def values(self, n_max: int) -> np.ndarray:
        return self.a * np.log(np.arange(2, n_max + 2, dtype=float)) + self.c

    @property
    def increasing(self) -> bool:
        return self.a > 0

    def tail_integral(self, start: float, shift: float = 0.0) -> float:
        # exp(-a log(x+1) - c) = e^{-c} (x+1)^{-a}
        if not self.increasing:
            raise SpecError("log family is not increasing")
        if self.a <= 1:
            return math.inf
        log_value = shift - self.c + (1 - self.a) * math.log(start + 1) - math.log(self.a - 1)
        return math.exp(log_value) if log_value < 700 else math.inf

    def scaled(self, factor: float) -> "LogFamily":
        return LogFamily(factor * self.a, factor * self.c)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "log", "a": self.a, "c": self.c}


def explicit(values) -> Explicit:
    return Explicit(tuple(float(v) for v in values))


@dataclass(frozen=True)
class TrainSpec:
    """Half-length sequences of a train, truncated at ``n_max``."""

    l: SequenceFamily
    r: SequenceFamily
    n_max: int

    def __post_init__(self):
        if not isinstance(self.n_max, (int, np.integer)) or isinstance(self.n_max, bool) or self.n_max < 1:
            raise SpecError(f"n_max must be a positive integer, got {self.n_max!r}")
        for name, fam in (("l", self.l), ("r", self.r)):
            if fam.length is not None and fam.length < self.n_max:
                raise SpecError(f"{name} has {fam.length} explicit terms but n_max is {self.n_max}")
        lv, rv = self.l_values, self.r_values
        if not np.all(np.isfinite(lv)) or not np.all(np.isfinite(rv)):
            raise SpecError("sequence terms must be finite")
        bad = np.flatnonzero(lv <= 0)
        if bad.size:
            raise SpecError(f"l_{bad[0] + 1} = {lv[bad[0]]!r} is not positive")
        bad = np.flatnonzero(rv < 0)
        if bad.size:
            raise SpecError(f"r_{bad[0] + 1} = {rv[bad[0]]!r} is negative")

    @cached_property
    def l_values(self) -> np.ndarray:
        """``l_1..l_{n_max}`` as a read-only array (0-based storage)."""
        v = self.l.values(self.n_max)
        v.flags.writeable = False
        return v

    @cached_property
    def r_values(self) -> np.ndarray:
        v = self.r.values(self.n_max)
        v.flags.writeable = False
        return v

    @property
    def is_flute(self) -> bool:
        return bool(np.all(self.r_values == 0))

    def to_dict(self) -> dict[str, Any]:
        return {"l": self.l.to_dict(), "r": self.r.to_dict(), "n_max": int(self.n_max)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def truncated(self, n_max: int) -> "TrainSpec":
        return TrainSpec(self.l, self.r, n_max)

    @classmethod
    def from_arrays(cls, l, r=None) -> "TrainSpec":
        l = [float(v) for v in l]
        r = [0.0] * len(l) if r is None else [float(v) for v in r]
        return cls(explicit(l), explicit(r), len(l))

    @classmethod
    def flute(cls, l: SequenceFamily, n_max: int) -> "TrainSpec":
        return cls(l, Constant(0.0), n_max)


def spec_from_dict(payload: Any) -> TrainSpec:
    if not isinstance(payload, dict):
        raise SpecError("spec must be a JSON object")
    for key in ("l", "r", "n_max"):
        if key not in payload:
            raise SpecError(f"spec is missing field {key!r}")
    n_max = payload["n_max"]
    if not isinstance(n_max, int) or isinstance(n_max, bool):
        raise SpecError(f"n_max must be an integer, got {n_max!r}")
    return TrainSpec(SequenceFamily.from_dict(payload["l"]), SequenceFamily.from_dict(payload["r"]), n_max)


def load_spec(text: str) -> TrainSpec:
    """Parse a JSON train spec, validating positivity of ``l`` and ``r >= 0``."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec is not valid JSON: {exc}") from None
    return spec_from_dict(payload)


def materialize(spec: TrainSpec, n: int) -> tuple[float, float]:
    """Return ``(l_n, r_n)`` for ``1 <= n <= spec.n_max``."""
    if not 1 <= n <= spec.n_max:
        raise IndexError(f"index {n} outside 1..{spec.n_max}")
    return float(spec.l_values[n - 1]), float(spec.r_values[n - 1])
