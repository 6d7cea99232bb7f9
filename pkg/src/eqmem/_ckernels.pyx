# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Transcription of ``_pykernels``; see there for the contracts. Uniform
draws come straight from the generator's ``bitgen_t`` so the random
stream matches ``Generator.random()`` draw for draw.
"""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log, INFINITY
from numpy.random cimport bitgen_t

import numpy as np

BACKEND = "cython"


cdef bitgen_t *_bitgen(object rng) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(rng.bit_generator.capsule,
                                             "BitGenerator")


cdef inline double _uniform(bitgen_t *bg) noexcept nogil:
    return bg.next_double(bg.state)


def bd_exit_time(up, down, Py_ssize_t m_start, Py_ssize_t m_absorb, rng):
    cdef const double[::1] u = np.ascontiguousarray(up, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(down, dtype=np.float64)
    cdef bitgen_t *bg = _bitgen(rng)
    cdef double t = 0.0, r
    cdef long long events = 0
    cdef Py_ssize_t m = m_start
    with nogil:
        while m != m_absorb:
            r = u[m] + d[m]
            t += -log(1.0 - _uniform(bg)) / r
            if _uniform(bg) * r < u[m]:
                m += 1
            else:
                m -= 1
            events += 1
    return t, events


def walk_escape(double radius_sq, rng):
    cdef bitgen_t *bg = _bitgen(rng)
    cdef long long x = 1, y = 0, steps = 0
    cdef int dirn
    cdef bint escaped = False
    with nogil:
        while True:
            if <double>(x * x + y * y) >= radius_sq:
                escaped = True
                break
            dirn = <int>(_uniform(bg) * 4.0)
            if dirn == 0:
                x += 1
            elif dirn == 1:
                x -= 1
            elif dirn == 2:
                y += 1
            else:
                y -= 1
            steps += 1
            if x == 0 and y == 0:
                break
    return bool(escaped), steps


def toric_run(adj_in, inc_in, cutmask_in, Py_ssize_t n_stab, double p_create,
              double rate, rng, long long max_events, double t_burn,
              double t_end, bint stop_on_logical):
    cdef const int[::1] adj = np.ascontiguousarray(adj_in, dtype=np.int32)
    cdef const int[::1] inc = np.ascontiguousarray(inc_in, dtype=np.int32)
    cdef const unsigned char[::1] cutmask = np.ascontiguousarray(cutmask_in, dtype=np.uint8)
    cdef Py_ssize_t n_cand = cutmask.shape[0]
    cdef Py_ssize_t n = n_cand // 2

    cdef unsigned char[::1] defect = np.zeros(2 * n_stab, dtype=np.uint8)
    cdef unsigned char[::1] cls = np.zeros(n_cand, dtype=np.uint8)
    cdef int[:, ::1] members = np.zeros((3, n_cand), dtype=np.int32)
    cdef int[::1] pos = np.arange(n_cand, dtype=np.int32)
    cdef Py_ssize_t count[3]
    cdef bitgen_t *bg = _bitgen(rng)

    cdef Py_ssize_t i, j, idx, cand, c2, sector, sbase, st, ibase, p, last
    cdef int c, newc, oldc
    cdef double t = 0.0, dt, t_next, lo, x, w0, w1, total
    cdef double w_create = rate * p_create
    cdef double integral = 0.0
    cdef long long events = 0, ndef = 0
    cdef int hom = 0
    cdef bint stopped = False

    for i in range(n_cand):
        members[0, i] = <int>i
    count[0] = n_cand
    count[1] = 0
    count[2] = 0

    with nogil:
        while True:
            w0 = w_create * count[0]
            w1 = rate * count[1]
            total = w0 + w1 + rate * count[2]
            if total <= 0.0:
                t = t_end
                break
            dt = -log(1.0 - _uniform(bg)) / total
            t_next = t + dt
            if t_next > t_end:
                t_next = t_end
            lo = t if t > t_burn else t_burn
            if t_next > lo:
                integral += ndef * (t_next - lo)
            if t + dt > t_end:
                t = t_end
                break
            t = t_next

            x = _uniform(bg) * total
            if x < w0:
                c = 0
            elif x < w0 + w1:
                c = 1
            else:
                c = 2
            while count[c] == 0:
                c -= 1
            idx = <Py_ssize_t>(_uniform(bg) * count[c])
            if idx >= count[c]:
                idx = count[c] - 1
            cand = members[c, idx]
            sector = cand // n
            sbase = sector * n_stab
            hom ^= cutmask[cand]
            for j in range(2):
                st = sbase + adj[2 * cand + j]
                if defect[st]:
                    defect[st] = 0
                    ndef -= 1
                else:
                    defect[st] = 1
                    ndef += 1
                ibase = 4 * st
                for i in range(4):
                    c2 = sector * n + inc[ibase + i]
                    newc = defect[sbase + adj[2 * c2]] + defect[sbase + adj[2 * c2 + 1]]
                    oldc = cls[c2]
                    if newc != oldc:
                        p = pos[c2]
                        last = members[oldc, count[oldc] - 1]
                        members[oldc, p] = <int>last
                        pos[last] = <int>p
                        count[oldc] -= 1
                        members[newc, count[newc]] = <int>c2
                        pos[c2] = <int>count[newc]
                        count[newc] += 1
                        cls[c2] = <unsigned char>newc
            events += 1
            if stop_on_logical and ndef == 0 and hom != 0:
                stopped = True
                break
            if max_events and events >= max_events:
                break
    return t, events, bool(stopped), hom, integral
