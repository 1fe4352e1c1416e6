"""Pure-Python twin of the compiled kernels.

Each function mirrors ``_kernels.pyx`` draw for draw, so for the same
bit generators both backends return identical arrays.  Much slower; used
when the extension is unavailable and as the reference in tests.
"""
from __future__ import annotations

import math
from bisect import bisect_right

import numpy as np

_TWO53 = 1.0 / 9007199254740992.0


def _bounded(bg, k: int) -> int:
    m = (bg.random_raw() >> 32) * k
    lo = m & 0xFFFFFFFF
    if lo < k:
        t = (0x100000000 - k) % k
        while lo < t:
            m = (bg.random_raw() >> 32) * k
            lo = m & 0xFFFFFFFF
    return m >> 32


def _uniform(bg) -> float:
    return (bg.random_raw() >> 11) * _TWO53


def _exponential(bg) -> float:
    return -math.log(1.0 - _uniform(bg))


def _search(cdf: list, u: float) -> int:
    return min(bisect_right(cdf, u), len(cdf) - 1)


def _stepper(offsets, targets):
    off = [int(v) for v in offsets]
    tg = [int(v) for v in targets]

    def step(bg, x):
        lo = off[x]
        return tg[lo + _bounded(bg, off[x + 1] - lo)]

    return step


def meeting(bitgens, offsets, targets, cdf, max_events):
    k = len(bitgens)
    out_t = np.zeros(k)
    out_n = np.zeros(k, dtype=np.int64)
    out_c = np.zeros(k, dtype=np.uint8)
    step = _stepper(offsets, targets)
    cdf = [float(c) for c in cdf]
    for i, g in enumerate(bitgens):
        x = _search(cdf, _uniform(g))
        y = _search(cdf, _uniform(g))
        t = 0.0
        ev = 0
        while x != y:
            if ev >= max_events:
                out_c[i] = 1
                break
            t += _exponential(g) * 0.5
            if _bounded(g, 2) == 0:
                x = step(g, x)
            else:
                y = step(g, y)
            ev += 1
        out_t[i] = t
        out_n[i] = ev
    return out_t, out_n, out_c


def coalescence(bitgens, offsets, targets, max_events):
    n = len(offsets) - 1
    k = len(bitgens)
    out_t = np.zeros(k)
    out_n = np.zeros(k, dtype=np.int64)
    out_c = np.zeros(k, dtype=np.uint8)
    step = _stepper(offsets, targets)
    for i, g in enumerate(bitgens):
        pos = list(range(n))
        occ = list(range(n))
        alive = n
        t = 0.0
        ev = 0
        while alive > 1:
            if ev >= max_events:
                out_c[i] = 1
                break
            t += _exponential(g) / alive
            c = _bounded(g, alive)
            x = pos[c]
            y = step(g, x)
            ev += 1
            if y == x:
                continue
            occ[x] = -1
            if occ[y] >= 0:
                alive -= 1
                if c != alive:
                    pos[c] = pos[alive]
                    occ[pos[c]] = c
            else:
                pos[c] = y
                occ[y] = c
        out_t[i] = t
        out_n[i] = ev
    return out_t, out_n, out_c


def voter(bitgens, offsets, targets, u, init, use_init, max_events):
    n = len(offsets) - 1
    k = len(bitgens)
    out_n = np.zeros(k, dtype=np.int64)
    out_w = np.zeros(k, dtype=np.uint8)
    out_c = np.zeros(k, dtype=np.uint8)
    step = _stepper(offsets, targets)
    init = [int(v) for v in init]
    for i, g in enumerate(bitgens):
        if use_init:
            eta = list(init)
        else:
            eta = [1 if _uniform(g) < u else 0 for _ in range(n)]
        ones = sum(eta)
        ev = 0
        while 0 < ones < n:
            if ev >= max_events:
                out_c[i] = 1
                break
            x = _bounded(g, n)
            y = step(g, x)
            ev += 1
            if eta[x] != eta[y]:
                ones += eta[y] - eta[x]
                eta[x] = eta[y]
        out_n[i] = ev
        out_w[i] = 1 if ones == n else 0
    return out_n, out_w, out_c


def collapsed_visits(bitgens, offsets, targets, cdf, T):
    out = np.zeros(len(bitgens), dtype=np.int64)
    step = _stepper(offsets, targets)
    cdf = [float(c) for c in cdf]
    for i, g in enumerate(bitgens):
        visits = 1
        at_diag = True
        a = b = 0
        for _ in range(1, T + 1):
            if at_diag:
                a = _search(cdf, _uniform(g))
                w = step(g, a)
                if _bounded(g, 2) == 0:
                    b = w
                else:
                    a, b = w, a
            elif _bounded(g, 2) == 0:
                a = step(g, a)
            else:
                b = step(g, b)
            at_diag = a == b
            if at_diag:
                visits += 1
        out[i] = visits
    return out


def forest(bitgens, root_vals, root_cdf, bias_vals, bias_cdf, T):
    k = len(bitgens)
    out_v = np.zeros(k, dtype=np.int64)
    out_f = np.full(k, -1, dtype=np.int64)
    root_vals = [int(v) for v in root_vals]
    bias_vals = [int(v) for v in bias_vals]
    root_cdf = [float(c) for c in root_cdf]
    bias_cdf = [float(c) for c in bias_cdf]
    for i, g in enumerate(bitgens):
        visits = 1
        first = -1
        at_diag = True
        path: list[int] = []
        head = 0
        for t in range(1, T + 1):
            if at_diag:
                path = [root_vals[_search(root_cdf, _uniform(g))]]
                head = 0
                at_diag = False
            elif _bounded(g, 2) == 0:
                path.append(bias_vals[_search(bias_cdf, _uniform(g))])
            elif _bounded(g, path[head]) == 0:
                head += 1
                if head == len(path):
                    at_diag = True
                    visits += 1
                    if first < 0:
                        first = t
            else:
                break
        out_v[i] = visits
        out_f[i] = first
    return out_v, out_f
