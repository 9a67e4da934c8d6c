"""Pure-Python scheduling/insertion kernels (fallback backend).

Mirrors `_ckernels.pyx` operation-for-operation so that both backends
produce identical floating-point results.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def route_profile(seq, dist, tw_start, tw_end, service, demand):
    """Timing/load profile of a route starting from the depot at time 0.

    Returns (arrival, wait, bstart, depart, slack, cumload, cumdist,
    total_dist, route_load, return_time); arrays are per position.
    """
    n = len(seq)
    arrival = np.empty(n)
    wait = np.empty(n)
    bstart = np.empty(n)
    depart = np.empty(n)
    slack = np.empty(n)
    cumload = np.empty(n)
    cumdist = np.empty(n)

    t = 0.0
    cd = 0.0
    load = 0.0
    prev = 0
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
        return arrival, wait, bstart, depart, slack, cumload, cumdist, 0.0, 0.0, 0.0

    total_dist = cd + dist[prev, 0]
    return_time = t + dist[prev, 0]

    # Forward time slack: max start-delay at each position that keeps every
    # downstream window satisfied; waits downstream absorb part of a delay.
    slack[n - 1] = tw_end[seq[n - 1]] - bstart[n - 1]
    for p in range(n - 2, -1, -1):
        own = tw_end[seq[p]] - bstart[p]
        thru = wait[p + 1] + slack[p + 1]
        slack[p] = own if own < thru else thru

    return arrival, wait, bstart, depart, slack, cumload, cumdist, total_dist, load, return_time


def best_position(seq, node, dist, tw_start, tw_end, service, demand, capacity):
    """Cheapest feasible insertion position of `node` within one route.

    Returns (pos, delta_distance); pos == -1 when no position is feasible.
    Ties keep the lowest position.
    """
    n = len(seq)
    arrival, wait, bstart, depart, slack, cumload, cumdist, _, load, _ = route_profile(
        seq, dist, tw_start, tw_end, service, demand
    )
    if load + demand[node] > capacity:
        return -1, np.inf

    best_pos = -1
    best_delta = np.inf
    s_u = tw_start[node]
    e_u = tw_end[node]
    srv_u = service[node]
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
    return best_pos, best_delta
