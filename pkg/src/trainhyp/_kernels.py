"""Compiled scan kernels for the sup-min functional.

Arrays are 1-based: index 0 is padding so that ``L[n]`` is ``l_n``.  ``kind``
is 0 (full), 1 (star) or 2 (zero).  Every ``e^h * sum`` is accumulated term by
term with Neumaier compensation; each term is clipped at ``exp(logcap)`` so
saturated sums stay finite.
"""

import numpy as np
from numba import njit

FULL, STAR, ZERO = 0, 1, 2

# Relative guard on early termination.  Compensated partial sums are not
# guaranteed monotone at the ulp level, so a bound must clear the incumbent
# by this margin before a scan is cut.
_STOP_RTOL = 1e-12
_GOLDEN = 0.6180339887498949
_REFINE_ITERS = 80
# Profiles can carry several near-equal local peaks; refine this many of them.
_REFINE_PEAKS = 8
# Evaluation budget for one argmin-switch search.
_SWITCH_EVALS = 400


@njit(cache=True, nogil=True)
def _pos(x):
    return x if x > 0.0 else 0.0


@njit(cache=True, nogil=True)
def min_gamma(kind, L, R, logD, premin, sufmin, N, n, h, logcap, cap):
    """Minimum over the window ``[A_n(h), B_n(h)]`` and its smallest argmin."""
    ln = L[n]
    best = min(h, ln - h)
    arg = n

    # Left of n.  s + c holds e^h * sum_{k=m+1}^{n-1} Delta(k) (full) or
    # e^h * sum_{k=m+1}^{n} e^{-l_k} (star/zero) on entry to index m.
    s = 0.0
    c = 0.0
    if kind != FULL:
        s = np.exp(min(h - L[n], logcap))
    for m in range(n - 1, 0, -1):
        tail = s + c
        lb = tail
        if premin[m] > h:
            lb = max(lb, premin[m] - h + tail)
        if lb > best * (1.0 + _STOP_RTOL):
            break
        if kind == FULL:
            term = np.exp(min(h + logD[m], logcap))
        else:
            term = np.exp(min(h - L[m], logcap))
        t = s + term
        if abs(s) >= abs(term):
            c += (s - t) + term
        else:
            c += (term - t) + s
        s = t
        if L[m] <= h:
            if kind == ZERO:
                v = tail
            else:
                v = _pos(R[m] + h - L[m + 1]) + tail
            v = min(v, cap)
            if v <= best:
                best = v
                arg = m
            break
        v = min(L[m] - h + (s + c), cap)
        if v <= best:
            best = v
            arg = m

    # Right of n.  (s2, c2) is the sum up to m-2 (full) or m-1 (star/zero) and
    # (s1, c1) the sum one index further.
    if n < N:
        s2 = 0.0
        c2 = 0.0
        if kind == FULL:
            s1 = np.exp(min(h + logD[n], logcap))
        else:
            s2 = np.exp(min(h - L[n], logcap))
            term = np.exp(min(h - L[n + 1], logcap))
            s1 = s2 + term
        c1 = 0.0
        if kind != FULL:
            if abs(s2) >= abs(term):
                c1 = (s2 - s1) + term
            else:
                c1 = (term - s1) + s2
        for m in range(n + 1, N + 1):
            near = s2 + c2
            far = s1 + c1
            lb = near
            if sufmin[m] > h:
                lb = max(lb, sufmin[m] - h + far)
            if lb > best * (1.0 + _STOP_RTOL):
                break
            if L[m] > h:
                v = L[m] - h + far
            elif kind == ZERO:
                v = near
            else:
                v = _pos(R[m - 1] + h - L[m - 1]) + near
            v = min(v, cap)
            if v < best:
                best = v
                arg = m
            if L[m] <= h or m == N:
                break
            if kind == FULL:
                term = np.exp(min(h + logD[m], logcap))
            else:
                term = np.exp(min(h - L[m + 1], logcap))
            s2 = s1
            c2 = c1
            t = s1 + term
            if abs(s1) >= abs(term):
                c1 += (s1 - t) + term
            else:
                c1 += (term - t) + s1
            s1 = t
    return best, arg


@njit(cache=True, nogil=True)
def candidates(L, R, N, n, grid, h_floor, kinks):
    """Sorted distinct h values probed for index n on ``[h_floor, l_n]``."""
    ln = L[n]
    out = np.empty(grid + 4 * N + 2)
    k = 0
    if grid == 1:
        out[k] = h_floor
        k += 1
    else:
        for i in range(grid):
            out[k] = h_floor + (ln - h_floor) * i / (grid - 1)
            k += 1
    out[k] = ln
    k += 1
    half = 0.5 * ln
    if half >= h_floor:
        out[k] = half
        k += 1
    # h -> min_gamma drops at h = l_m, where a case switches and loses a
    # positive term, so probe each breakpoint and its left neighbour.
    for m in range(1, N + 1):
        if h_floor <= L[m] <= ln:
            out[k] = L[m]
            k += 1
            left = np.nextafter(L[m], -np.inf)
            if left >= h_floor:
                out[k] = left
                k += 1
    if kinks:
        for m in range(1, N):
            x = L[m + 1] - R[m]
            if h_floor < x < ln:
                out[k] = x
                k += 1
            x = L[m] - R[m]
            if h_floor < x < ln:
                out[k] = x
                k += 1
    return np.unique(out[:k])


@njit(cache=True, nogil=True)
def min_many(kind, L, R, logD, premin, sufmin, N, n, hs, logcap, cap):
    vals = np.empty(hs.size)
    args = np.empty(hs.size, dtype=np.int64)
    for i in range(hs.size):
        v, a = min_gamma(kind, L, R, logD, premin, sufmin, N, n, hs[i], logcap, cap)
        vals[i] = v
        args[i] = a
    return vals, args


@njit(cache=True, nogil=True)
def refine(kind, L, R, logD, premin, sufmin, N, n, lo, hi, logcap, cap, trace):
    """Golden-section search for the max of h -> min_gamma on ``[lo, hi]``.

    Evaluated points are written to ``trace`` (rows of h, value, argmin); the
    number of rows used is returned with the best point found.
    """
    a = lo
    b = hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, m1 = min_gamma(kind, L, R, logD, premin, sufmin, N, n, x1, logcap, cap)
    f2, m2 = min_gamma(kind, L, R, logD, premin, sufmin, N, n, x2, logcap, cap)
    trace[0, 0] = x1
    trace[0, 1] = f1
    trace[0, 2] = m1
    trace[1, 0] = x2
    trace[1, 1] = f2
    trace[1, 2] = m2
    used = 2
    bh, bv, bm = x1, f1, m1
    if f2 > bv:
        bh, bv, bm = x2, f2, m2
    tol = 1e-13 * (1.0 + abs(hi))
    while used < trace.shape[0] and b - a > tol:
        if f1 < f2:
            a = x1
            x1, f1, m1 = x2, f2, m2
            x2 = a + _GOLDEN * (b - a)
            f2, m2 = min_gamma(kind, L, R, logD, premin, sufmin, N, n, x2, logcap, cap)
            x, f, mm = x2, f2, m2
        else:
            b = x2
            x2, f2, m2 = x1, f1, m1
            x1 = b - _GOLDEN * (b - a)
            f1, m1 = min_gamma(kind, L, R, logD, premin, sufmin, N, n, x1, logcap, cap)
            x, f, mm = x1, f1, m1
        trace[used, 0] = x
        trace[used, 1] = f
        trace[used, 2] = mm
        used += 1
        if f > bv:
            bh, bv, bm = x, f, mm
    return used, bh, bv, bm


@njit(cache=True, nogil=True)
def peaks(hs, vals, k):
    """Indices of up to ``k`` largest grid-local maxima of ``vals``, best first.

    A maximum sitting one ulp left of the next probe is the left limit at a
    breakpoint; it is exact already and is not worth refining.
    """
    n = vals.size
    idx = np.empty(n, dtype=np.int64)
    c = 0
    for i in range(n):
        if i < n - 1 and hs[i + 1] == np.nextafter(hs[i], np.inf):
            continue
        left = vals[i - 1] if i > 0 else -np.inf
        right = vals[i + 1] if i < n - 1 else -np.inf
        if vals[i] >= left and vals[i] >= right:
            idx[c] = i
            c += 1
    cand = idx[:c]
    # stable sort by value, descending; equal values keep index order
    order = np.argsort(-vals[cand], kind="mergesort")
    m = min(k, c)
    return cand[order[:m]]


@njit(cache=True, nogil=True)
def switches(hs, vals, args, k):
    """Left indices of up to ``k`` best intervals ``[hs[i], hs[i+1]]`` whose argmin changes."""
    n = vals.size
    idx = np.empty(max(n - 1, 0), dtype=np.int64)
    key = np.empty(max(n - 1, 0))
    c = 0
    for i in range(n - 1):
        if args[i] != args[i + 1] and hs[i + 1] != np.nextafter(hs[i], np.inf):
            idx[c] = i
            key[c] = -max(vals[i], vals[i + 1])
            c += 1
    order = np.argsort(key[:c], kind="mergesort")
    return idx[:c][order[: min(k, c)]]


@njit(cache=True, nogil=True)
def refine_switch(kind, L, R, logD, premin, sufmin, N, n, lo, hi, ma, mb, logcap, cap):
    """Locate argmin switches in ``(lo, hi)`` by bisection on the argmin.

    Between two switches the min follows one index, so a peak of the min
    that is not a smooth interior maximum sits at a switch.  A third argmin
    found at a midpoint splits the interval and both halves are searched.
    """
    stack = np.empty((64, 2))
    mstack = np.empty((64, 2), dtype=np.int64)
    top = 0
    stack[0, 0] = lo
    stack[0, 1] = hi
    mstack[0, 0] = ma
    mstack[0, 1] = mb
    top = 1
    bh, bv, bm = lo, -1.0, ma
    evals = 0
    while top > 0 and evals < _SWITCH_EVALS:
        top -= 1
        a = stack[top, 0]
        b = stack[top, 1]
        xa = mstack[top, 0]
        xb = mstack[top, 1]
        while evals < _SWITCH_EVALS:
            mid = 0.5 * (a + b)
            if not (a < mid < b):
                break
            f, mm = min_gamma(kind, L, R, logD, premin, sufmin, N, n, mid, logcap, cap)
            evals += 1
            if f > bv:
                bh, bv, bm = mid, f, mm
            if mm == xa:
                a = mid
            elif mm == xb:
                b = mid
            else:
                if top < 64:
                    stack[top, 0] = mid
                    stack[top, 1] = b
                    mstack[top, 0] = mm
                    mstack[top, 1] = xb
                    top += 1
                b = mid
                xb = mm
    return bh, bv, bm


@njit(cache=True, nogil=True)
def sup_one(kind, L, R, logD, premin, sufmin, N, n, grid, h_floor, logcap, cap, do_refine):
    """Returns ``(sup, h*, m*)`` for one n; ``sup = -1`` when ``l_n < h_floor``."""
    if L[n] < h_floor:
        return -1.0, np.nan, 0
    hs = candidates(L, R, N, n, grid, h_floor, do_refine)
    vals, args = min_many(kind, L, R, logD, premin, sufmin, N, n, hs, logcap, cap)
    i = int(np.argmax(vals))
    bv = vals[i]
    bh = hs[i]
    bm = args[i]
    if do_refine and hs.size > 1:
        trace = np.empty((_REFINE_ITERS, 3))
        for p in peaks(hs, vals, _REFINE_PEAKS):
            lo = hs[max(p - 1, 0)]
            hi = hs[min(p + 1, hs.size - 1)]
            if hi > lo:
                used, rh, rv, rm = refine(kind, L, R, logD, premin, sufmin, N, n, lo, hi, logcap, cap, trace)
                if rv > bv:
                    bh, bv, bm = rh, rv, rm
        for i in switches(hs, vals, args, _REFINE_PEAKS):
            rh, rv, rm = refine_switch(kind, L, R, logD, premin, sufmin, N, n, hs[i], hs[i + 1], args[i],
                                       args[i + 1], logcap, cap)
            if rv > bv:
                bh, bv, bm = rh, rv, rm
    return bv, bh, bm


@njit(cache=True, nogil=True)
def sup_range(kind, L, R, logD, premin, sufmin, N, n_lo, n_hi, grid, h_floor, logcap, cap, do_refine, out_v, out_h, out_m):
    for n in range(n_lo, n_hi + 1):
        v, h, m = sup_one(kind, L, R, logD, premin, sufmin, N, n, grid, h_floor, logcap, cap, do_refine)
        out_v[n] = v
        out_h[n] = h
        out_m[n] = m
