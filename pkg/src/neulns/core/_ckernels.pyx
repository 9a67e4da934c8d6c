# cython: language_level=3
"""Compiled scheduling/insertion kernels (hot path of the LNS loop).

Semantically identical to `_pykernels.py`; arithmetic is ordered the same
way so both backends agree bit-for-bit.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "c"


def route_profile(
    cnp.int64_t[::1] seq,
    cnp.float64_t[:, ::1] dist,
    cnp.float64_t[::1] tw_start,
    cnp.float64_t[::1] tw_end,
    cnp.float64_t[::1] service,
    cnp.float64_t[::1] demand,
):
    cdef Py_ssize_t n = seq.shape[0]
    arrival_a = np.empty(n)
    wait_a = np.empty(n)
    bstart_a = np.empty(n)
    depart_a = np.empty(n)
    slack_a = np.empty(n)
    cumload_a = np.empty(n)
    cumdist_a = np.empty(n)
    cdef cnp.float64_t[::1] arrival = arrival_a
    cdef cnp.float64_t[::1] wait = wait_a
    cdef cnp.float64_t[::1] bstart = bstart_a
    cdef cnp.float64_t[::1] depart = depart_a
    cdef cnp.float64_t[::1] slack = slack_a
    cdef cnp.float64_t[::1] cumload = cumload_a
    cdef cnp.float64_t[::1] cumdist = cumdist_a

    cdef double t = 0.0
    cdef double cd = 0.0
    cdef double load = 0.0
    cdef double d, a, b, own, thru
    cdef Py_ssize_t p
    cdef cnp.int64_t prev = 0
    cdef cnp.int64_t u

    for p in range(n):
        u = seq[p]
        d = dist[prev, u]
        cd += d
        a = t + d
        b = a if a > tw_start[u] else tw_start[u]
        arrival[p] = a
        wait[p] = b - a
        bstart[p] = b
        t = b + service[u]
        depart[p] = t
        load += demand[u]
        cumload[p] = load
        cumdist[p] = cd
        prev = u

    if n == 0:
        return arrival_a, wait_a, bstart_a, depart_a, slack_a, cumload_a, cumdist_a, 0.0, 0.0, 0.0

    cdef double total_dist = cd + dist[prev, 0]
    cdef double return_time = t + dist[prev, 0]

    slack[n - 1] = tw_end[seq[n - 1]] - bstart[n - 1]
    for p in range(n - 2, -1, -1):
        own = tw_end[seq[p]] - bstart[p]
        thru = wait[p + 1] + slack[p + 1]
        slack[p] = own if own < thru else thru

    return arrival_a, wait_a, bstart_a, depart_a, slack_a, cumload_a, cumdist_a, total_dist, load, return_time


def best_position(
    cnp.int64_t[::1] seq,
    cnp.int64_t node,
    cnp.float64_t[:, ::1] dist,
    cnp.float64_t[::1] tw_start,
    cnp.float64_t[::1] tw_end,
    cnp.float64_t[::1] service,
    cnp.float64_t[::1] demand,
    double capacity,
):
    cdef Py_ssize_t n = seq.shape[0]

    _, _, bstart_a, depart_a, slack_a, _, _, _, load, _ = route_profile(
        seq, dist, tw_start, tw_end, service, demand
    )
    cdef cnp.float64_t[::1] bstart = bstart_a
    cdef cnp.float64_t[::1] depart = depart_a
    cdef cnp.float64_t[::1] slack = slack_a

    if load + demand[node] > capacity:
        return -1, np.inf

    cdef Py_ssize_t best_pos = -1
    cdef double best_delta = np.inf
    cdef double s_u = tw_start[node]
    cdef double e_u = tw_end[node]
    cdef double srv_u = service[node]
    cdef double a_u, b_u, new_arr, nb, delta
    cdef cnp.int64_t pred, succ
    cdef Py_ssize_t p

    for p in range(n + 1):
        pred = 0 if p == 0 else seq[p - 1]
        succ = 0 if p == n else seq[p]
        a_u = (0.0 if p == 0 else depart[p - 1]) + dist[pred, node]
        b_u = a_u if a_u > s_u else s_u
        if b_u > e_u:
            continue
        if p < n:
            new_arr = b_u + srv_u + dist[node, succ]
            nb = new_arr if new_arr > tw_start[succ] else tw_start[succ]
            if nb - bstart[p] > slack[p]:
                continue
        delta = dist[pred, node] + dist[node, succ] - dist[pred, succ]
        if delta < best_delta:
            best_delta = delta
            best_pos = p
    return (best_pos, best_delta)
