"""Numba kernels for the walk hot loops.

Everything here operates on flat row-major site indices (see lattice.py) and
a caller-supplied ``np.random.Generator``.  The draw order inside each kernel
— one ``exponential()`` holding time, then one ``integers(0, 2d)`` direction
per jump — is part of the reproducibility contract: tests replay it in plain
numpy, and identical (seed, stream) keys give bit-identical paths.

Torus moves wrap; the plain-lattice kernels (interlacement helpers) terminate
on leaving their finite window instead of wrapping.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "record_first_hits",
    "hit_target",
    "excursion_walk",
    "trajectory_walk",
    "batch_hit_sites",
    "window_walk_visits",
    "mark_window_traces",
]


@njit(cache=True, nogil=True, inline="always")
def _step(pos, r, N, strides, d):
    """Move one lattice step from flat index ``pos`` in direction r in [0, 2d)."""
    axis = r >> 1
    s = strides[axis]
    c = (pos // s) % N
    if r & 1 == 0:  # +1 along axis
        if c == N - 1:
            return pos - (N - 1) * s
        return pos + s
    else:  # -1 along axis
        if c == 0:
            return pos + (N - 1) * s
        return pos - s


@njit(cache=True, nogil=True)
def record_first_hits(rng, N, strides, start, horizon, hits):
    """Continuous-time walk from ``start``; record first-entrance times.

    ``hits`` must be float64, pre-filled with -1, length N**d; entries are
    set to the arrival time of the first visit (0.0 for the start site).
    The walk stops when every site has been entered or when the next jump
    would land after ``horizon``.

    Returns (covered, cover_time, t_end, jumps); ``cover_time`` is -1.0 when
    the horizon was exhausted first.
    """
    d = strides.shape[0]
    nsites = hits.shape[0]
    two_d = 2 * d
    remaining = nsites
    pos = start
    if hits[pos] < 0.0:
        hits[pos] = 0.0
        remaining -= 1
    t = 0.0
    jumps = np.int64(0)
    while remaining > 0:
        t += rng.exponential()
        if t > horizon:
            return False, -1.0, t, jumps
        pos = _step(pos, rng.integers(0, two_d), N, strides, d)
        jumps += 1
        if hits[pos] < 0.0:
            hits[pos] = t
            remaining -= 1
    return True, t, t, jumps


@njit(cache=True, nogil=True)
def hit_target(rng, N, strides, start, target, skip_initial, horizon):
    """First entrance of the walk into the masked set ``target``.

    With ``skip_initial`` the state at time 0 is ignored and the first check
    happens after the first jump (return-time semantics).  Returns
    (time, site, jumps); time is -1.0 when the horizon ran out first.
    """
    d = strides.shape[0]
    two_d = 2 * d
    pos = start
    if not skip_initial and target[pos]:
        return 0.0, pos, np.int64(0)
    t = 0.0
    jumps = np.int64(0)
    while True:
        t += rng.exponential()
        if t > horizon:
            return -1.0, np.int64(-1), jumps
        pos = _step(pos, rng.integers(0, two_d), N, strides, d)
        jumps += 1
        if target[pos]:
            return t, pos, jumps


@njit(cache=True, nogil=True)
def batch_hit_sites(rng, N, strides, starts, target, horizon, out_sites):
    """Entrance site of the walk into ``target`` for a batch of start sites.

    ``out_sites[i]`` is the flat index where walk i first enters the target
    (-1 when the horizon ran out).  Returns the total number of jumps.
    """
    d = strides.shape[0]
    two_d = 2 * d
    total = np.int64(0)
    for i in range(starts.shape[0]):
        pos = starts[i]
        if target[pos]:
            out_sites[i] = pos
            continue
        t = 0.0
        out_sites[i] = -1
        while True:
            t += rng.exponential()
            if t > horizon:
                break
            pos = _step(pos, rng.integers(0, two_d), N, strides, d)
            total += 1
            if target[pos]:
                out_sites[i] = pos
                break
    return total


@njit(cache=True, nogil=True)
def excursion_walk(rng, N, strides, start, a_mask, c_mask, t_star, horizon, r_times, u_times):
    """Alternating entrance/departure times of the excursion decomposition.

    ``r_times[k]`` is the k-th entrance time into the A-set; ``u_times[k]``
    is the matching departure time: the first time >= r_times[k] + t_star at
    which the walk has stayed outside the C-set for the trailing open
    interval of length ``t_star``.  Both arrays must be pre-allocated to the
    same length; recording stops silently when they fill up (the returned
    count saturates at the capacity).

    Returns (n_r, n_u, t_end): number of entrance times recorded, number of
    completed departures, and the time the walk stopped.
    """
    d = strides.shape[0]
    two_d = 2 * d
    pos = start
    t = 0.0
    cap = r_times.shape[0]
    n_r = 0
    n_u = 0
    seeking_a = True
    cand = -1.0  # departure candidate; < 0 means "currently inside C"
    if a_mask[pos]:
        r_times[0] = 0.0
        n_r = 1
        seeking_a = False
    while True:
        tau = rng.exponential()
        t_next = t + tau
        if not seeking_a and cand >= 0.0 and t_next >= cand:
            # stayed outside C through (cand - t_star, cand): departure
            u_times[n_u] = cand
            n_u += 1
            seeking_a = True
            cand = -1.0
            if n_u >= cap:
                return n_r, n_u, t
        if t_next > horizon:
            return n_r, n_u, t_next
        pos = _step(pos, rng.integers(0, two_d), N, strides, d)
        t = t_next
        if seeking_a:
            if a_mask[pos]:
                if n_r >= cap:
                    return n_r, n_u, t
                r_times[n_r] = t
                n_r += 1
                seeking_a = False
                cand = -1.0
        else:
            if c_mask[pos]:
                cand = -1.0
            elif cand < 0.0:
                cand = t + t_star


@njit(cache=True, nogil=True)
def trajectory_walk(rng, N, strides, start, n_jumps, sites, holds):
    """Record ``n_jumps`` jumps: visited sites and the holding time at each.

    ``sites`` and ``holds`` must have length n_jumps + 1.  ``holds[k]`` is
    the full Exp(1) holding time spent at ``sites[k]`` (the final entry too:
    its jump is drawn but not taken).
    """
    d = strides.shape[0]
    two_d = 2 * d
    pos = start
    sites[0] = pos
    for k in range(n_jumps):
        holds[k] = rng.exponential()
        pos = _step(pos, rng.integers(0, two_d), N, strides, d)
        sites[k + 1] = pos
    holds[n_jumps] = rng.exponential()


@njit(cache=True, nogil=True)
def window_walk_visits(rng, L, strides, start, kid, visit_counts):
    """Plain-lattice walk inside a cube window of side L until first exit.

    Flat indices address the cube [0, L)^d; the walk ends with the jump that
    would leave it.  ``kid`` maps flat cube indices to a slot in
    ``visit_counts`` (or -1); every arrival (including the start) increments
    its slot.  Returns the number of jumps taken inside the window.

    Discrete-time jump chain: visit counts are what's needed here, and the
    embedded chain has the same visit counts as the continuous-time walk.
    """
    d = strides.shape[0]
    two_d = 2 * d
    pos = start
    k0 = kid[pos]
    if k0 >= 0:
        visit_counts[k0] += 1
    jumps = np.int64(0)
    while True:
        r = rng.integers(0, two_d)
        axis = r >> 1
        s = strides[axis]
        c = (pos // s) % L
        if r & 1 == 0:
            if c == L - 1:
                return jumps
            pos += s
        else:
            if c == 0:
                return jumps
            pos -= s
        jumps += 1
        k = kid[pos]
        if k >= 0:
            visit_counts[k] += 1


@njit(cache=True, nogil=True)
def mark_window_traces(rng, L, strides, starts, rows, kid, marks):
    """Run one plain-lattice walk per entry of ``starts``, marking traces.

    Walk t starts at flat cube index ``starts[t]`` inside [0, L)^d and runs
    until it first leaves the cube (jump chain; the continuous-time trace is
    the same set).  Every arrival with ``kid[pos] >= 0`` sets
    ``marks[rows[t], kid[pos]] = True``.  Returns total jumps across walks.
    """
    jumps = np.int64(0)
    for t in range(starts.shape[0]):
        pos = starts[t]
        row = rows[t]
        k0 = kid[pos]
        if k0 >= 0:
            marks[row, k0] = True
        alive = True
        while alive:
            r = rng.integers(0, 2 * strides.shape[0])
            axis = r >> 1
            s = strides[axis]
            c = (pos // s) % L
            if r & 1 == 0:
                if c == L - 1:
                    alive = False
                else:
                    pos += s
            else:
                if c == 0:
                    alive = False
                else:
                    pos -= s
            if alive:
                jumps += 1
                k = kid[pos]
                if k >= 0:
                    marks[row, k] = True
    return jumps
