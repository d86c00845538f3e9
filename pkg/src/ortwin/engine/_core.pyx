# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled dispatch kernel.

Line-parallel twin of _pycore.dispatch: the two must perform the same
floating-point operations in the same order so that traces are bit-identical
regardless of which kernel is active. Keep every comparison and addition in
sync with _pycore.py when editing.
"""

import numpy as np

KERNEL_NAME = "compiled"

cdef extern from "math.h":
    double INFINITY


cdef int _choose_room(int strategy, double ra, double bz,
                      double* room_free, double* shift_end, int nrooms) nogil:
    cdef int r, best_r
    cdef double est, best_est, slack, best_slack, comp, best_comp
    if strategy == 1:  # first fit: lowest-index idle room, else earliest start
        for r in range(nrooms):
            if room_free[r] <= ra:
                return r
        best_r = 0
        best_est = ra if ra > room_free[0] else room_free[0]
        for r in range(1, nrooms):
            est = ra if ra > room_free[r] else room_free[r]
            if est < best_est:
                best_est = est
                best_r = r
        return best_r
    # best fit (2) / worst fit (3) over non-negative slack
    best_r = -1
    best_slack = 0.0
    for r in range(nrooms):
        est = ra if ra > room_free[r] else room_free[r]
        slack = shift_end[r] - (est + bz)
        if slack >= 0.0:
            if best_r < 0 or (strategy == 2 and slack < best_slack) or (strategy == 3 and slack > best_slack):
                best_r = r
                best_slack = slack
    if best_r >= 0:
        return best_r
    # fallback: no room can finish in shift; minimize completion (BF == WF)
    best_r = 0
    est = ra if ra > room_free[0] else room_free[0]
    best_comp = est + bz
    for r in range(1, nrooms):
        est = ra if ra > room_free[r] else room_free[r]
        comp = est + bz
        if comp < best_comp:
            best_comp = comp
            best_r = r
    return best_r


def dispatch(double[::1] shift_start, double[::1] shift_end, double[::1] lb, double[::1] ready,
             double[::1] d0, double[::1] d1, double[::1] d2, double[::1] d3, double[::1] busy,
             int[::1] surgeon, int n_surgeons, int[::1] sched_flat, int[::1] sched_off,
             int[::1] arrivals, int[::1] fixed_room, int anesth_count, int strategy, double cap,
             double[::1] start_out, int[::1] room_out):
    """Run the day; fills start_out/room_out. Returns -1 or the index of an unassignable case."""
    cdef int nrooms = <int> shift_start.shape[0]
    cdef int n = <int> lb.shape[0]
    cdef int n_arr = <int> arrivals.shape[0]
    cdef int r, i, j, s, p, ai, rr, best_r, best_i, pm_idx, err
    cdef double est, best_est, pm, t1, t2, t3, t4

    if nrooms == 0 or n == 0:
        for i in range(n):
            start_out[i] = 0.0
            room_out[i] = -1
        return -1

    workq_np = np.empty((nrooms, n), dtype=np.intc)
    qlen_np = np.zeros(nrooms, dtype=np.intc)
    pos_np = np.zeros(nrooms, dtype=np.intc)
    room_free_np = np.empty(nrooms, dtype=np.float64)
    surgeon_free_np = np.zeros(n_surgeons if n_surgeons > 0 else 1, dtype=np.float64)
    pool_np = np.zeros(anesth_count if anesth_count > 0 else 1, dtype=np.float64)
    starts_np = np.zeros(n, dtype=np.float64)
    rooms_of_np = np.full(n, -1, dtype=np.intc)

    cdef int[:, ::1] workq = workq_np
    cdef int[::1] qlen = qlen_np
    cdef int[::1] pos = pos_np
    cdef double[::1] room_free = room_free_np
    cdef double[::1] surgeon_free = surgeon_free_np
    cdef double[::1] pool = pool_np
    cdef double[::1] starts = starts_np
    cdef int[::1] rooms_of = rooms_of_np
    cdef bint enforce_anesth = anesth_count >= 0

    err = -1
    with nogil:
        for r in range(nrooms):
            room_free[r] = shift_start[r]
            qlen[r] = 0
            for j in range(sched_off[r], sched_off[r + 1]):
                workq[r, qlen[r]] = sched_flat[j]
                qlen[r] += 1
        ai = 0
        while True:
            best_r = -1
            best_i = -1
            best_est = INFINITY
            for r in range(nrooms):
                if pos[r] < qlen[r]:
                    i = workq[r, pos[r]]
                    est = lb[i]
                    if room_free[r] > est:
                        est = room_free[r]
                    s = surgeon[i]
                    if s >= 0 and surgeon_free[s] > est:
                        est = surgeon_free[s]
                    if enforce_anesth and d0[i] > 0.0:
                        if anesth_count == 0:
                            est = INFINITY
                        else:
                            pm = pool[0]
                            for p in range(1, anesth_count):
                                if pool[p] < pm:
                                    pm = pool[p]
                            if pm > est:
                                est = pm
                    if est < best_est:
                        best_est = est
                        best_r = r
                        best_i = i

            if ai < n_arr:
                j = arrivals[ai]
                if best_r < 0 or ready[j] < best_est:
                    ai += 1
                    rr = fixed_room[j]
                    if rr < 0:
                        rr = _choose_room(strategy, ready[j], busy[j], &room_free[0], &shift_end[0], nrooms)
                    workq[rr, qlen[rr]] = j
                    qlen[rr] += 1
                    continue

            if best_r < 0:
                for r in range(nrooms):
                    if pos[r] < qlen[r]:
                        err = workq[r, pos[r]]  # unsatisfiable head (e.g. zero anesth capacity)
                        break
                break

            if best_est > cap:
                err = best_i
                break

            i = best_i
            t1 = best_est + d0[i]
            t2 = t1 + d1[i]
            t3 = t2 + d2[i]
            t4 = t3 + d3[i]
            starts[i] = best_est
            rooms_of[i] = best_r
            room_free[best_r] = t4
            s = surgeon[i]
            if s >= 0:
                surgeon_free[s] = t3
            if enforce_anesth and d0[i] > 0.0:
                pm_idx = 0
                for p in range(1, anesth_count):
                    if pool[p] < pool[pm_idx]:
                        pm_idx = p
                pool[pm_idx] = t1
            pos[best_r] += 1

    if err >= 0:
        return err
    for i in range(n):
        start_out[i] = starts[i]
        room_out[i] = rooms_of[i]
    return -1
