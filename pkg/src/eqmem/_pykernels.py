"""Pure-Python hot loops.

These are the reference implementations of the simulation kernels. The
Cython module ``_ckernels`` is a line-for-line transcription that consumes
the random stream identically, so both backends return identical results
for the same generator state.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

# class weights for (0, 1, 2) adjacent defects: create, hop, annihilate
CREATE, HOP, ANNIHILATE = 0, 1, 2


def bd_exit_time(up, down, m_start, m_absorb, rng):
    """Gillespie run of a birth-death chain until it first hits ``m_absorb``.

    Returns ``(time, events)``.
    """
    up = [float(v) for v in up]
    down = [float(v) for v in down]
    random = rng.random
    log = math.log
    t = 0.0
    events = 0
    m = int(m_start)
    m_absorb = int(m_absorb)
    while m != m_absorb:
        r = up[m] + down[m]
        t += -log(1.0 - random()) / r
        if random() * r < up[m]:
            m += 1
        else:
            m -= 1
        events += 1
    return t, events


def walk_escape(radius_sq, rng):
    """Planar walk from (1, 0); returns ``(escaped, steps)``.

    The walk stops when it reaches the origin or when ``x**2 + y**2``
    reaches ``radius_sq``.
    """
    random = rng.random
    x, y = 1, 0
    steps = 0
    while True:
        if x * x + y * y >= radius_sq:
            return True, steps
        d = int(random() * 4.0)
        if d == 0:
            x += 1
        elif d == 1:
            x -= 1
        elif d == 2:
            y += 1
        else:
            y -= 1
        steps += 1
        if x == 0 and y == 0:
            return False, steps


def toric_run(adj, inc, cutmask, n_stab, p_create, rate, rng,
              max_events, t_burn, t_end, stop_on_logical):
    """Rejection-free Metropolis dynamics of both error sectors of a toric code.

    Candidates are ``sector * n + edge`` for sector 0 (Z errors, vertex
    defects) and sector 1 (X errors, face defects). A candidate's class is
    the number of defects on its two adjacent stabilizers; its rate is
    ``rate * p_create`` for class 0 and ``rate`` otherwise.

    Parameters
    ----------
    adj : int32 array, shape (2 * n * 2,)
        Flattened ``[candidate, j]`` -> stabilizer index within the sector.
    inc : int32 array, shape (2 * n_stab * 4,)
        Flattened ``[sector, stabilizer, j]`` -> edge index.
    cutmask : uint8 array, shape (2 * n,)
        Homology parity bits toggled when the candidate flips.
    n_stab : int
        Stabilizers per sector (``k**2``).
    max_events : int
        Event cap; ``0`` disables it.
    t_burn, t_end : float
        Defect count is integrated over ``[t_burn, t_end]``; the run
        stops at ``t_end``.
    stop_on_logical : bool
        Stop at the first instant with no defects and nonzero homology bits.

    Returns
    -------
    tuple
        ``(time, events, stopped, homology_bits, defect_integral)`` where
        ``stopped`` is true only when a logical flip ended the run.
    """
    adj = [int(v) for v in adj]
    inc = [int(v) for v in inc]
    cutmask = [int(v) for v in cutmask]
    n_cand = len(cutmask)
    n = n_cand // 2
    log = math.log
    random = rng.random

    defect = [0] * (2 * n_stab)
    cls = [0] * n_cand
    members = [list(range(n_cand)), [0] * n_cand, [0] * n_cand]
    count = [n_cand, 0, 0]
    pos = list(range(n_cand))

    t = 0.0
    events = 0
    ndef = 0
    hom = 0
    integral = 0.0
    stopped = False
    w_create = rate * p_create

    while True:
        w0 = w_create * count[0]
        w1 = rate * count[1]
        total = w0 + w1 + rate * count[2]
        if total <= 0.0:
            # frozen: no defects and zero creation rate
            t = t_end
            break
        dt = -log(1.0 - random()) / total
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

        x = random() * total
        if x < w0:
            c = 0
        elif x < w0 + w1:
            c = 1
        else:
            c = 2
        while count[c] == 0:
            c -= 1
        idx = int(random() * count[c])
        if idx >= count[c]:
            idx = count[c] - 1
        cand = members[c][idx]
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
                    # swap-remove from old class list, append to new one
                    p = pos[c2]
                    last = members[oldc][count[oldc] - 1]
                    members[oldc][p] = last
                    pos[last] = p
                    count[oldc] -= 1
                    members[newc][count[newc]] = c2
                    pos[c2] = count[newc]
                    count[newc] += 1
                    cls[c2] = newc
        events += 1
        if stop_on_logical and ndef == 0 and hom != 0:
            stopped = True
            break
        if max_events and events >= max_events:
            break
    return t, events, stopped, hom, integral


def as_kernel_arrays(adj, inc, cutmask):
    """Contiguous typed copies of the lattice tables, as the kernels expect."""
    return (np.ascontiguousarray(adj, dtype=np.int32).ravel(),
            np.ascontiguousarray(inc, dtype=np.int32).ravel(),
            np.ascontiguousarray(cutmask, dtype=np.uint8).ravel())
