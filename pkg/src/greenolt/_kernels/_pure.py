"""Pure-Python kernels, the reference the Cython build must match exactly.

States are the canonical indices of ``markov.build_state_space``:
actives first (A_i -> i-1), then the power-down chains, then the power-up
chains. All byte accounting is integer, so conservation is exact.
"""

from __future__ import annotations

import numpy as np

OVERFLOW = 1


def _successor_id(sid: int, band: int, L: int, M: int, N: int) -> int:
    """Successor state id for one observed load band (-1 below, 0 stay,
    +1 above); the integer-encoded twin of markov.successor."""
    if sid < L:  # active
        i = sid + 1
        if band < 0:
            if i >= 2:
                return L + (i - 2) * M  # first power-down stage
            return sid
        if band > 0:
            if i <= L - 1:
                return L + (L - 1) * M + (i - 1) * N  # first power-up stage
            return sid
        return sid
    if sid < L + (L - 1) * M:  # power-down chain
        t = sid - L
        i = t // M + 2
        j = t % M + 1
        if band < 0:
            if j >= M:
                return i - 2  # A_{i-1}
            return sid + 1
        return i - 1  # back to A_i
    # power-up chain
    t = sid - L - (L - 1) * M
    i = t // N + 1
    k = t % N + 1
    if band > 0:
        if k >= N:
            return i  # A_{i+1}
        return sid + 1
    return i - 1  # back to A_i


def _next_id(sid: int, v_bits: float, L: int, M: int, N: int, cb: float) -> int:
    """Single-direction successor for one cycle's arrival volume in bits."""
    if sid < L:
        level = sid + 1
    elif sid < L + (L - 1) * M:
        level = (sid - L) // M + 2
    else:
        level = (sid - L - (L - 1) * M) // N + 1
    if v_bits < (level - 1) * cb:
        band = -1
    elif v_bits > level * cb:
        band = 1
    else:
        band = 0
    return _successor_id(sid, band, L, M, N)


def _level_of(sid: int, L: int, M: int, N: int) -> int:
    if sid < L:
        return sid + 1
    if sid < L + (L - 1) * M:
        return (sid - L) // M + 2
    return (sid - L - (L - 1) * M) // N + 1


def simulate_cycles(
    counts,
    byte_totals,
    L: int,
    M: int,
    N: int,
    cycle_bits_per_card: float,
    cap_bytes_per_card: int,
    start_id: int,
    backlog_cap: int,
    record_completions: bool = False,
    up_counts=None,
    up_byte_totals=None,
    up_cycle_bits_per_card: float = 0.0,
    up_cap_bytes_per_card: int = 0,
):
    """Run the per-cycle sleep-control loop over a whole trace.

    Per cycle: count occupancy and energy at the current state's card count,
    enqueue the cycle's arrivals, serve each direction FIFO up to the
    powered capacity, then step the state machine on the cycle's arrival
    volumes. With an upstream series present the observed load is the max
    rule: the band is "below" only when both directions are below their
    thresholds and "above" when either exceeds its capacity.

    Returns (occupancy, active_sum, served_packets, delay_sum_cycles,
    max_delay_cycles, served_bytes, final_backlog, reconfig_events, status)
    with service metrics summed over directions, plus, when
    ``record_completions`` is set (downstream-only runs), an int64 array
    with the cycle in which each nonempty arrival block finished (-1 if it
    never did).
    """
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    byte_totals = np.ascontiguousarray(byte_totals, dtype=np.int64)
    two_way = up_byte_totals is not None and len(up_byte_totals) > 0
    if record_completions and two_way:
        raise ValueError("completion recording is downstream-only")
    cycles = len(counts)
    n_states = L + (L - 1) * (M + N)
    ndirs = 2 if two_way else 1
    if two_way:
        up_counts = np.ascontiguousarray(up_counts, dtype=np.int64)
        up_byte_totals = np.ascontiguousarray(up_byte_totals, dtype=np.int64)
        dir_counts = (counts, up_counts)
        dir_bytes = (byte_totals, up_byte_totals)
    else:
        dir_counts = (counts,)
        dir_bytes = (byte_totals,)
    dir_cb = (cycle_bits_per_card, up_cycle_bits_per_card)
    dir_cap = (cap_bytes_per_card, up_cap_bytes_per_card)

    occupancy = np.zeros(n_states, dtype=np.int64)
    blk_cycle = [[0] * (cycles + 1) for _ in range(ndirs)]
    blk_total = [[0] * (cycles + 1) for _ in range(ndirs)]
    blk_left = [[0] * (cycles + 1) for _ in range(ndirs)]
    blk_pkts = [[0] * (cycles + 1) for _ in range(ndirs)]
    blk_done = [[0] * (cycles + 1) for _ in range(ndirs)]
    completions = np.full(cycles, -1, dtype=np.int64) if record_completions else None

    head = [0] * ndirs
    tail = [0] * ndirs
    sid = start_id
    active_sum = 0
    served_packets = 0
    delay_sum = 0
    max_delay = 0
    served_bytes = 0
    backlog = 0
    reconfig = 0
    status = 0

    for c in range(cycles):
        occupancy[sid] += 1
        level = _level_of(sid, L, M, N)
        active_sum += level

        for d in range(ndirs):
            arrived = int(dir_bytes[d][c])
            if arrived > 0:
                t = tail[d]
                blk_cycle[d][t] = c
                blk_total[d][t] = arrived
                blk_left[d][t] = arrived
                blk_pkts[d][t] = int(dir_counts[d][c])
                blk_done[d][t] = 0
                tail[d] = t + 1
                backlog += arrived

            bc, bt = blk_cycle[d], blk_total[d]
            bl, bp, bd = blk_left[d], blk_pkts[d], blk_done[d]
            h = head[d]
            room = level * dir_cap[d]
            while room > 0 and h < tail[d]:
                take = bl[h] if bl[h] < room else room
                bl[h] -= take
                room -= take
                backlog -= take
                served_bytes += take
                if bl[h] == 0:
                    done_now = bp[h] - bd[h]
                else:
                    taken = bt[h] - bl[h]
                    done_now = (taken * bp[h]) // bt[h] - bd[h]
                if done_now > 0:
                    delay = c - bc[h]
                    served_packets += done_now
                    delay_sum += done_now * delay
                    if delay > max_delay:
                        max_delay = delay
                    bd[h] += done_now
                if bl[h] == 0:
                    if completions is not None:
                        completions[bc[h]] = c
                    h += 1
            head[d] = h

        if backlog > backlog_cap:
            status = OVERFLOW
            break

        below = True
        above = False
        for d in range(ndirs):
            v = float(dir_bytes[d][c]) * 8.0
            if not v < (level - 1) * dir_cb[d]:
                below = False
            if v > level * dir_cb[d]:
                above = True
        band = -1 if below else (1 if above else 0)
        next_sid = _successor_id(sid, band, L, M, N)
        if _level_of(next_sid, L, M, N) != level:
            reconfig += 1
        sid = next_sid

    result = (
        occupancy,
        active_sum,
        served_packets,
        delay_sum,
        max_delay,
        served_bytes,
        backlog,
        reconfig,
        status,
    )
    if record_completions:
        return result + (completions,)
    return result


def chain_walk(cum_rows, uniforms, start: int):
    """Occupancy counts of a random walk driven by pre-drawn uniforms.

    ``cum_rows`` holds the row-wise cumulative transition probabilities.
    The state visited before each draw is counted, so counts sum to
    ``len(uniforms)``.
    """
    cum_rows = np.ascontiguousarray(cum_rows, dtype=np.float64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    n = cum_rows.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    sid = start
    last = n - 1
    for u in uniforms:
        counts[sid] += 1
        j = int(np.searchsorted(cum_rows[sid], u, side="right"))
        sid = j if j < last else last
    return counts
