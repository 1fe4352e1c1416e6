# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loops.

Every kernel takes a list of per-trial numpy ``BitGenerator`` objects and
draws from them through the C ``bitgen_t`` interface without the GIL.  The
derived draws (bounded integers, uniforms, exponentials, inverse-CDF picks)
are spelled out here and mirrored line by line in ``_kernels_py`` so that
both backends consume identical raw streams and return identical results.
"""
import numpy as np

from libc.math cimport log
from libc.stdint cimport int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t


cdef inline uint64_t _raw(bitgen_t* g) noexcept nogil:
    return g.next_uint64(g.state)


cdef inline uint64_t _bounded(bitgen_t* g, uint64_t k) noexcept nogil:
    # Lemire multiply-shift on the high 32 bits, with rejection
    cdef uint64_t m = (_raw(g) >> 32) * k
    cdef uint64_t l = m & 0xFFFFFFFFULL
    cdef uint64_t t
    if l < k:
        t = (0x100000000ULL - k) % k
        while l < t:
            m = (_raw(g) >> 32) * k
            l = m & 0xFFFFFFFFULL
    return m >> 32


cdef inline double _uniform(bitgen_t* g) noexcept nogil:
    return (_raw(g) >> 11) * (1.0 / 9007199254740992.0)


cdef inline double _exponential(bitgen_t* g) noexcept nogil:
    return -log(1.0 - _uniform(g))


cdef inline Py_ssize_t _search(const double* cdf, Py_ssize_t n, double u) noexcept nogil:
    # smallest i with cdf[i] > u, clamped to n - 1
    cdef Py_ssize_t lo = 0, hi = n - 1, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline int64_t _step(bitgen_t* g, const int64_t* offsets, const int64_t* targets, int64_t x) noexcept nogil:
    cdef int64_t d = offsets[x + 1] - offsets[x]
    return targets[offsets[x] + <int64_t>_bounded(g, <uint64_t>d)]


cdef bitgen_t** _gather(list bitgens) except NULL:
    cdef Py_ssize_t k = len(bitgens), i
    cdef bitgen_t** gens = <bitgen_t**>malloc((k + 1) * sizeof(bitgen_t*))
    if gens == NULL:
        raise MemoryError()
    for i in range(k):
        gens[i] = <bitgen_t*>PyCapsule_GetPointer(bitgens[i].capsule, "BitGenerator")
    return gens


def meeting(list bitgens, const int64_t[::1] offsets, const int64_t[::1] targets,
            const double[::1] cdf, int64_t max_events):
    cdef Py_ssize_t k = len(bitgens), i, n = cdf.shape[0]
    out_t = np.zeros(k, dtype=np.float64)
    out_n = np.zeros(k, dtype=np.int64)
    out_c = np.zeros(k, dtype=np.uint8)
    cdef double[::1] ot = out_t
    cdef int64_t[::1] on = out_n
    cdef uint8_t[::1] oc = out_c
    cdef bitgen_t** gens = _gather(bitgens)
    cdef bitgen_t* g
    cdef int64_t x, y, ev
    cdef double t
    try:
        with nogil:
            for i in range(k):
                g = gens[i]
                x = _search(&cdf[0], n, _uniform(g))
                y = _search(&cdf[0], n, _uniform(g))
                t = 0.0
                ev = 0
                while x != y:
                    if ev >= max_events:
                        oc[i] = 1
                        break
                    t += _exponential(g) * 0.5
                    if _bounded(g, 2) == 0:
                        x = _step(g, &offsets[0], &targets[0], x)
                    else:
                        y = _step(g, &offsets[0], &targets[0], y)
                    ev += 1
                ot[i] = t
                on[i] = ev
    finally:
        free(gens)
    return out_t, out_n, out_c


def coalescence(list bitgens, const int64_t[::1] offsets, const int64_t[::1] targets,
                int64_t max_events):
    cdef Py_ssize_t k = len(bitgens), i
    cdef int64_t n = offsets.shape[0] - 1
    out_t = np.zeros(k, dtype=np.float64)
    out_n = np.zeros(k, dtype=np.int64)
    out_c = np.zeros(k, dtype=np.uint8)
    cdef double[::1] ot = out_t
    cdef int64_t[::1] on = out_n
    cdef uint8_t[::1] oc = out_c
    cdef int64_t[::1] pos = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] occ = np.empty(n, dtype=np.int64)
    cdef bitgen_t** gens = _gather(bitgens)
    cdef bitgen_t* g
    cdef int64_t c, v, x, y, alive, ev
    cdef double t
    try:
        with nogil:
            for i in range(k):
                g = gens[i]
                for v in range(n):
                    pos[v] = v
                    occ[v] = v
                alive = n
                t = 0.0
                ev = 0
                while alive > 1:
                    if ev >= max_events:
                        oc[i] = 1
                        break
                    t += _exponential(g) / alive
                    c = <int64_t>_bounded(g, <uint64_t>alive)
                    x = pos[c]
                    y = _step(g, &offsets[0], &targets[0], x)
                    ev += 1
                    if y == x:
                        continue
                    occ[x] = -1
                    if occ[y] >= 0:
                        # merge: cluster c disappears, last cluster fills its slot
                        alive -= 1
                        if c != alive:
                            pos[c] = pos[alive]
                            occ[pos[c]] = c
                    else:
                        pos[c] = y
                        occ[y] = c
                ot[i] = t
                on[i] = ev
    finally:
        free(gens)
    return out_t, out_n, out_c


def voter(list bitgens, const int64_t[::1] offsets, const int64_t[::1] targets,
          double u, const uint8_t[::1] init, bint use_init, int64_t max_events):
    """Event counts to consensus; the caller converts counts to times."""
    cdef Py_ssize_t k = len(bitgens), i
    cdef int64_t n = offsets.shape[0] - 1
    out_n = np.zeros(k, dtype=np.int64)
    out_w = np.zeros(k, dtype=np.uint8)
    out_c = np.zeros(k, dtype=np.uint8)
    cdef int64_t[::1] on = out_n
    cdef uint8_t[::1] ow = out_w
    cdef uint8_t[::1] oc = out_c
    cdef uint8_t[::1] eta = np.empty(n, dtype=np.uint8)
    cdef bitgen_t** gens = _gather(bitgens)
    cdef bitgen_t* g
    cdef int64_t v, x, y, ones, ev
    try:
        with nogil:
            for i in range(k):
                g = gens[i]
                ones = 0
                for v in range(n):
                    if use_init:
                        eta[v] = init[v]
                    else:
                        eta[v] = _uniform(g) < u
                    ones += eta[v]
                ev = 0
                while 0 < ones < n:
                    if ev >= max_events:
                        oc[i] = 1
                        break
                    x = <int64_t>_bounded(g, <uint64_t>n)
                    y = _step(g, &offsets[0], &targets[0], x)
                    ev += 1
                    if eta[x] != eta[y]:
                        ones += <int64_t>eta[y] - <int64_t>eta[x]
                        eta[x] = eta[y]
                on[i] = ev
                ow[i] = 1 if ones == n else 0
    finally:
        free(gens)
    return out_n, out_w, out_c


def collapsed_visits(list bitgens, const int64_t[::1] offsets, const int64_t[::1] targets,
                     const double[::1] cdf, int64_t T):
    """Visits to the collapsed diagonal state during steps 0..T, started there."""
    cdef Py_ssize_t k = len(bitgens), i, n = cdf.shape[0]
    out = np.zeros(k, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef bitgen_t** gens = _gather(bitgens)
    cdef bitgen_t* g
    cdef int64_t a, b, w, t, visits
    cdef bint at_diag
    try:
        with nogil:
            for i in range(k):
                g = gens[i]
                visits = 1
                at_diag = True
                a = 0
                b = 0
                for t in range(1, T + 1):
                    if at_diag:
                        a = _search(&cdf[0], n, _uniform(g))
                        w = _step(g, &offsets[0], &targets[0], a)
                        if _bounded(g, 2) == 0:
                            b = w
                        else:
                            b = a
                            a = w
                    elif _bounded(g, 2) == 0:
                        a = _step(g, &offsets[0], &targets[0], a)
                    else:
                        b = _step(g, &offsets[0], &targets[0], b)
                    at_diag = a == b
                    if at_diag:
                        visits += 1
                o[i] = visits
    finally:
        free(gens)
    return out


def forest(list bitgens, const int64_t[::1] root_vals, const double[::1] root_cdf,
           const int64_t[::1] bias_vals, const double[::1] bias_cdf, int64_t T):
    """Red/blue chase in distance coordinates; returns (visits, first return time or -1)."""
    cdef Py_ssize_t k = len(bitgens), i
    cdef Py_ssize_t nr = root_cdf.shape[0], nb = bias_cdf.shape[0]
    out_v = np.zeros(k, dtype=np.int64)
    out_f = np.full(k, -1, dtype=np.int64)
    cdef int64_t[::1] ov = out_v
    cdef int64_t[::1] of = out_f
    cdef int64_t[::1] path = np.empty(T + 2, dtype=np.int64)
    cdef bitgen_t** gens = _gather(bitgens)
    cdef bitgen_t* g
    cdef int64_t t, head, tail, visits, first
    cdef bint at_diag
    try:
        with nogil:
            for i in range(k):
                g = gens[i]
                visits = 1
                first = -1
                at_diag = True
                head = 0
                tail = 0
                for t in range(1, T + 1):
                    if at_diag:
                        path[0] = root_vals[_search(&root_cdf[0], nr, _uniform(g))]
                        head = 0
                        tail = 1
                        at_diag = False
                    elif _bounded(g, 2) == 0:
                        # blue steps away; the vertex it leaves joins the chased path
                        path[tail] = bias_vals[_search(&bias_cdf[0], nb, _uniform(g))]
                        tail += 1
                    elif _bounded(g, <uint64_t>path[head]) == 0:
                        head += 1
                        if head == tail:
                            at_diag = True
                            visits += 1
                            if first < 0:
                                first = t
                    else:
                        break
                ov[i] = visits
                of[i] = first
    finally:
        free(gens)
    return out_v, out_f
