"""Hyperbolic trigonometry of right-angled hexagons, pentagons and quadrilaterals,
plus distances in Fermi coordinates ``ds^2 = dv^2 + cosh^2(v) du^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit


class ConvergenceError(RuntimeError):
    """The geodesic shooting solver failed to reach the target point."""


@dataclass(frozen=True)
class FermiPoint:
    u: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError("Fermi coordinates must be finite")


def acosh1p(w: float) -> float:
    """``arccosh(1 + w)`` for ``w >= 0`` without cancellation near 0."""
    if w < 0:
        if w < -1e-12:
            raise ValueError(f"arccosh argument below 1 by {-w!r}")
        w = 0.0
    return math.log1p(w + math.sqrt(w * (w + 2.0)))


def hexagon_f(x: float, y: float, t: float) -> float:
    """Side opposite ``t`` in a right-angled hexagon with alternate sides ``x, y, t``.

    ``arccosh((cosh t + cosh x cosh y) / (sinh x sinh y))``, evaluated through
    ``z - 1 = (cosh t + cosh(x - y)) / (sinh x sinh y)``.
    """
    if not (x > 0 and y > 0):
        raise ValueError("hexagon sides x, y must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    # Work in logs once the hyperbolic functions get large.
    if max(x, y, t) > 300:
        num = _log_cosh_sum(t, x - y)
        den = _log_sinh(x) + _log_sinh(y)
        lw = num - den
        if lw > 700:
            return lw + math.log(2.0)  # arccosh(z) ~ log(2z)
        if lw < -600:
            return math.exp(0.5 * (lw + math.log(2.0)))  # arccosh(1 + w) ~ sqrt(2w)
        return acosh1p(math.exp(lw))
    w = (math.cosh(t) + math.cosh(x - y)) / (math.sinh(x) * math.sinh(y))
    return acosh1p(w)


def _log_sinh(x: float) -> float:
    return x + math.log1p(-math.exp(-2 * x)) - math.log(2.0)


def _log_cosh_sum(a: float, b: float) -> float:
    """``log(cosh a + cosh b)``."""
    a, b = abs(a), abs(b)
    hi = max(a, b)
    terms = [a - hi, -a - hi, b - hi, -b - hi]
    return hi - math.log(2.0) + math.log(math.fsum(math.exp(s) for s in terms))


def quad_double(d0: float, h: float) -> float:
    """``2 arcsinh(sinh(d0 / 2) cosh h)``."""
    if d0 < 0 or h < 0:
        raise ValueError("d0 and h must be non-negative")
    return 2.0 * math.asinh(math.sinh(0.5 * d0) * math.cosh(h))


def pentagon_F(x: float, y: float, t: float, h: float) -> float:
    """``arcsinh((cosh x cosh(y - h) + cosh t cosh h) / sinh y)``."""
    if not y > 0:
        raise ValueError("y must be positive")
    return math.asinh((math.cosh(x) * math.cosh(y - h) + math.cosh(t) * math.cosh(h)) / math.sinh(y))


def lemma46_F(a: float, x: float) -> float:
    """``sinh a cosh x / sinh 1`` for ``a <= 1``, ``log(sinh a cosh x)`` for ``a > 1``."""
    if a < 0 or x < 0:
        raise ValueError("a and x must be non-negative")
    if a <= 1:
        return math.sinh(a) * math.cosh(x) / math.sinh(1.0)
    # log(sinh a) + log(cosh x), stable for large arguments
    return _log_sinh(a) + x + math.log1p(math.exp(-2 * x)) - math.log(2.0)


def fermi_distance(p: FermiPoint, q: FermiPoint) -> float:
    """Closed form ``arccosh(cosh du cosh v_p cosh v_q - sinh v_p sinh v_q)``.

    Rewritten as ``1 + w`` with
    ``w = 2 sinh^2((v_p - v_q)/2) + 2 sinh^2(du/2) cosh v_p cosh v_q``.
    """
    du = p.u - q.u
    w = 2.0 * math.sinh(0.5 * (p.v - q.v)) ** 2 + 2.0 * math.sinh(0.5 * du) ** 2 * math.cosh(p.v) * math.cosh(q.v)
    return acosh1p(w)


@njit(cache=True)
def fermi_distance_array(u1, v1, u2, v2) -> np.ndarray:
    """Vectorized :func:`fermi_distance`."""
    u1, v1, u2, v2 = map(np.asarray, (u1, v1, u2, v2))
    w = 2.0 * np.sinh(0.5 * (v1 - v2)) ** 2 + 2.0 * np.sinh(0.5 * (u1 - u2)) ** 2 * np.cosh(v1) * np.cosh(v2)
    return np.log1p(w + np.sqrt(w * (w + 2.0)))


def hexagon_f_array(x, y, t) -> np.ndarray:
    """Vectorized :func:`hexagon_f` for moderate arguments (all below about 300)."""
    x, y, t = map(np.asarray, (x, y, t))
    w = (np.cosh(t) + np.cosh(x - y)) / (np.sinh(x) * np.sinh(y))
    return np.log1p(w + np.sqrt(w * (w + 2.0)))


def pentagon_F_array(x, y, t, h) -> np.ndarray:
    x, y, t, h = map(np.asarray, (x, y, t, h))
    return np.arcsinh((np.cosh(x) * np.cosh(y - h) + np.cosh(t) * np.cosh(h)) / np.sinh(y))


def lemma46_F_array(a, x) -> np.ndarray:
    a, x = np.asarray(a, dtype=float), np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):  # the small-a branch is discarded where cosh x overflows
        small = np.sinh(np.minimum(a, 1.0)) * np.cosh(x) / math.sinh(1.0)
    big_a = np.maximum(a, 1.0)
    big = big_a + np.log1p(-np.exp(-2 * big_a)) + x + np.log1p(np.exp(-2 * x)) - 2 * math.log(2.0)
    return np.where(a <= 1, small, big)


@njit(cache=True)
def _geodesic_rhs(y, out):
    # geodesic equations and their variational equations for the two
    # initial-velocity directions
    du, dv, v = y[2], y[3], y[1]
    th = math.tanh(v)
    sc = math.sinh(v) * math.cosh(v)
    ch2 = math.cosh(2 * v)
    sech2 = 1 - th * th
    out[0] = du
    out[1] = dv
    out[2] = -2 * th * du * dv
    out[3] = sc * du * du
    for o in (4, 8):
        ve, due, dve = y[o + 1], y[o + 2], y[o + 3]
        out[o] = due
        out[o + 1] = dve
        out[o + 2] = -2 * (sech2 * ve * du * dv + th * due * dv + th * du * dve)
        out[o + 3] = ch2 * ve * du * du + 2 * sc * du * due


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@njit(cache=True)
def _integrate(y0, rtol, atol, max_steps):
    """Adaptive Dormand-Prince integration over ``s in [0, 1]``; ``ok`` flags success."""
    n = y0.size
    y = y0.copy()
    k = np.zeros((7, n))
    tmp = np.empty(n)
    s = 0.0
    h = 1e-3
    steps = 0
    while s < 1.0:
        if steps >= max_steps or h < 1e-14:
            return y, False
        if s + h > 1.0:
            h = 1.0 - s
        _geodesic_rhs(y, k[0])
        for i in range(1, 7):
            for j in range(n):
                acc = 0.0
                for m in range(i):
                    acc += _A[i, m] * k[m, j]
                tmp[j] = y[j] + h * acc
            _geodesic_rhs(tmp, k[i])
        err = 0.0
        ynew = np.empty(n)
        for j in range(n):
            y5 = y[j]
            e = 0.0
            for i in range(7):
                y5 += h * _B5[i] * k[i, j]
                e += h * (_B5[i] - _B4[i]) * k[i, j]
            ynew[j] = y5
            sc = atol + rtol * max(abs(y[j]), abs(y5))
            err += (e / sc) ** 2
        err = math.sqrt(err / n)
        steps += 1
        if not math.isfinite(err):
            h *= 0.2
            continue
        if err <= 1.0:
            s += h
            y = ynew
        fac = 0.9 * err ** -0.2 if err > 0 else 5.0
        h *= min(5.0, max(0.2, fac))
    return y, True


def _shoot(p: FermiPoint, a: float, b: float, rtol: float):
    y0 = np.array([p.u, p.v, a, b, 0, 0, 1, 0, 0, 0, 0, 1], dtype=float)
    y, ok = _integrate(y0, rtol, rtol * 1e-2, 200000)
    if not ok:
        raise ConvergenceError("geodesic integration failed")
    J = np.array([[y[4], y[8]], [y[5], y[9]]])
    return np.array([y[0], y[1]]), J


def _newton(p: FermiPoint, target: np.ndarray, vel: np.ndarray, tol: float, rtol: float, max_iter: int):
    for _ in range(max_iter):
        try:
            end, J = _shoot(p, vel[0], vel[1], rtol)
        except ConvergenceError:
            return None
        res = end - target
        if np.max(np.abs(res)) < tol:
            return vel
        try:
            step = np.linalg.solve(J, res)
        except np.linalg.LinAlgError:
            return None
        norm = float(np.max(np.abs(step)))
        vel = vel - (step / norm if norm > 1.0 else step)
    return None


def fermi_distance_numeric(p: FermiPoint, q: FermiPoint, tol: float = 1e-9, max_iter: int = 30) -> float:
    """Geodesic distance by Newton shooting on the initial velocity.

    The geodesic from ``p`` with initial velocity ``(a, b)`` over a unit
    parameter interval is integrated together with its variational equations,
    and Newton steps adjust ``(a, b)`` until the endpoint hits ``q``.  The
    target is approached by continuation along the coordinate segment from
    ``p``, refining the steps when Newton stalls.  The metric has negative
    curvature, so the geodesic found is the minimizing one, and its length is
    ``sqrt(b^2 + cosh^2(v_p) a^2)`` since the speed is constant.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if p == q:
        return 0.0
    start, goal = np.array([p.u, p.v]), np.array([q.u, q.v])
    rtol = min(max(tol * 1e-3, 1e-13), 1e-10)
    ftol = max(tol * 1e-2, 1e-12)
    steps = 4
    while steps <= 1024:
        vel = (goal - start) / steps
        for j in range(1, steps + 1):
            frac = j / steps
            vel = _newton(p, start + frac * (goal - start), vel, ftol, rtol, max_iter)
            if vel is None:
                break
            if j < steps:
                vel = vel * (j + 1) / j
        else:
            a, b = vel
            return float(math.hypot(b, math.cosh(p.v) * a))
        steps *= 4
    raise ConvergenceError("geodesic shooting did not converge")


def taxicab_d1_d2(p: FermiPoint, q: FermiPoint) -> tuple[float, float]:
    """Vertical-then-horizontal path lengths, ordered so that ``v1 >= v2``.

    ``d1 = (v1 - v2) + d((u1, v2), (u2, v2))`` and
    ``d2 = d((u1, v1), (u2, v1)) + (v1 - v2)``.
    """
    if p.v < q.v:
        p, q = q, p
    dv = p.v - q.v
    d1 = dv + fermi_distance(FermiPoint(p.u, q.v), FermiPoint(q.u, q.v))
    d2 = fermi_distance(FermiPoint(p.u, p.v), FermiPoint(q.u, p.v)) + dv
    return d1, d2
