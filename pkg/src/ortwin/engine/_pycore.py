"""Pure-Python dispatch kernel.

Line-parallel twin of the compiled kernel in _core.pyx: the two must perform
the same floating-point operations in the same order so that traces are
bit-identical regardless of which kernel is active. Keep every comparison
and addition in sync with _core.pyx when editing.
"""

from __future__ import annotations

import math

KERNEL_NAME = "pure"

_INF = math.inf


def _choose_room(strategy: int, ra: float, bz: float, room_free: list[float], shift_end: list[float]) -> int:
    nrooms = len(room_free)
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


def dispatch(
    shift_start,
    shift_end,
    lb,
    ready,
    d0,
    d1,
    d2,
    d3,
    busy,
    surgeon,
    n_surgeons,
    sched_flat,
    sched_off,
    arrivals,
    fixed_room,
    anesth_count,
    strategy,
    cap,
    start_out,
    room_out,
):
    """Run the day; fills start_out/room_out. Returns -1 or the index of an unassignable case."""
    nrooms = len(shift_start)
    ss = [float(x) for x in shift_start]
    se = [float(x) for x in shift_end]
    lbv = [float(x) for x in lb]
    rdy = [float(x) for x in ready]
    a0 = [float(x) for x in d0]
    a1 = [float(x) for x in d1]
    a2 = [float(x) for x in d2]
    a3 = [float(x) for x in d3]
    bz = [float(x) for x in busy]
    sg = [int(x) for x in surgeon]
    fx = [int(x) for x in fixed_room]
    queues = [
        [int(sched_flat[j]) for j in range(int(sched_off[r]), int(sched_off[r + 1]))]
        for r in range(nrooms)
    ]
    arr = [int(x) for x in arrivals]

    pos = [0] * nrooms
    room_free = ss[:]  # doubles as the strategy snapshot free_at
    surgeon_free = [0.0] * n_surgeons
    pool = [0.0] * anesth_count if anesth_count >= 0 else []
    enforce_anesth = anesth_count >= 0
    ai = 0
    n = len(lbv)
    starts = [0.0] * n
    rooms_of = [-1] * n

    while True:
        best_r = -1
        best_i = -1
        best_est = _INF
        for r in range(nrooms):
            if pos[r] < len(queues[r]):
                i = queues[r][pos[r]]
                est = lbv[i]
                if room_free[r] > est:
                    est = room_free[r]
                s = sg[i]
                if s >= 0 and surgeon_free[s] > est:
                    est = surgeon_free[s]
                if enforce_anesth and a0[i] > 0.0:
                    if anesth_count == 0:
                        est = _INF
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

        if ai < len(arr):
            j = arr[ai]
            if best_r < 0 or rdy[j] < best_est:
                ai += 1
                rr = fx[j]
                if rr < 0:
                    rr = _choose_room(strategy, rdy[j], bz[j], room_free, se)
                queues[rr].append(j)
                continue

        if best_r < 0:
            for r in range(nrooms):
                if pos[r] < len(queues[r]):
                    return queues[r][pos[r]]  # unsatisfiable head (e.g. zero anesth capacity)
            break

        if best_est > cap:
            return best_i

        i = best_i
        t1 = best_est + a0[i]
        t2 = t1 + a1[i]
        t3 = t2 + a2[i]
        t4 = t3 + a3[i]
        starts[i] = best_est
        rooms_of[i] = best_r
        room_free[best_r] = t4
        s = sg[i]
        if s >= 0:
            surgeon_free[s] = t3
        if enforce_anesth and a0[i] > 0.0:
            pm_idx = 0
            for p in range(1, anesth_count):
                if pool[p] < pool[pm_idx]:
                    pm_idx = p
            pool[pm_idx] = t1
        pos[best_r] += 1

    for i in range(n):
        start_out[i] = starts[i]
        room_out[i] = rooms_of[i]
    return -1
