# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; must stay bit-identical to _pure (see the equivalence
tests). Integer division is only applied to non-negative operands, so C
truncation matches Python floor division."""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()

OVERFLOW = 1


cdef inline int _level_of(Py_ssize_t sid, int L, int M, int N) noexcept nogil:
    if sid < L:
        return <int>(sid + 1)
    if sid < L + (L - 1) * M:
        return <int>((sid - L) / M + 2)
    return <int>((sid - L - (L - 1) * M) / N + 1)


cdef inline Py_ssize_t _successor_id(Py_ssize_t sid, int band,
                                     int L, int M, int N) noexcept nogil:
    cdef Py_ssize_t t
    cdef int i, j, k
    if sid < L:  # active
        i = <int>(sid + 1)
        if band < 0:
            if i >= 2:
                return L + (i - 2) * M
            return sid
        if band > 0:
            if i <= L - 1:
                return L + (L - 1) * M + (i - 1) * N
            return sid
        return sid
    if sid < L + (L - 1) * M:  # power-down chain
        t = sid - L
        i = <int>(t / M + 2)
        j = <int>(t % M + 1)
        if band < 0:
            if j >= M:
                return i - 2
            return sid + 1
        return i - 1
    # power-up chain
    t = sid - L - (L - 1) * M
    i = <int>(t / N + 1)
    k = <int>(t % N + 1)
    if band > 0:
        if k >= N:
            return i
        return sid + 1
    return i - 1


def simulate_cycles(counts, byte_totals, int L, int M, int N,
                    double cycle_bits_per_card, int64_t cap_bytes_per_card,
                    Py_ssize_t start_id, int64_t backlog_cap,
                    record_completions=False,
                    up_counts=None, up_byte_totals=None,
                    double up_cycle_bits_per_card=0.0,
                    int64_t up_cap_bytes_per_card=0):
    """Compiled twin of _pure.simulate_cycles (no completion recording)."""
    if record_completions:
        raise ValueError("completion recording lives in the pure backend")
    cdef cnp.ndarray[cnp.int64_t, ndim=1] c_counts = \
        np.ascontiguousarray(counts, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] c_bytes = \
        np.ascontiguousarray(byte_totals, dtype=np.int64)
    cdef bint two_way = up_byte_totals is not None and len(up_byte_totals) > 0
    cdef Py_ssize_t cycles = c_counts.shape[0]
    cdef Py_ssize_t n_states = L + (L - 1) * (M + N)
    cdef int ndirs = 2 if two_way else 1

    cdef cnp.ndarray[cnp.int64_t, ndim=2] all_counts = \
        np.zeros((ndirs, cycles), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] all_bytes = \
        np.zeros((ndirs, cycles), dtype=np.int64)
    all_counts[0, :] = c_counts
    all_bytes[0, :] = c_bytes
    if two_way:
        all_counts[1, :] = np.ascontiguousarray(up_counts, dtype=np.int64)
        all_bytes[1, :] = np.ascontiguousarray(up_byte_totals, dtype=np.int64)

    cdef double[2] dir_cb
    cdef int64_t[2] dir_cap
    dir_cb[0] = cycle_bits_per_card
    dir_cb[1] = up_cycle_bits_per_card
    dir_cap[0] = cap_bytes_per_card
    dir_cap[1] = up_cap_bytes_per_card

    cdef cnp.ndarray[cnp.int64_t, ndim=1] occupancy = \
        np.zeros(n_states, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] blk_cycle = \
        np.zeros((ndirs, cycles + 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] blk_total = \
        np.zeros((ndirs, cycles + 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] blk_left = \
        np.zeros((ndirs, cycles + 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] blk_pkts = \
        np.zeros((ndirs, cycles + 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] blk_done = \
        np.zeros((ndirs, cycles + 1), dtype=np.int64)

    cdef int64_t[:, :] counts_v = all_counts
    cdef int64_t[:, :] bytes_v = all_bytes
    cdef int64_t[:] occ_v = occupancy
    cdef int64_t[:, :] bc = blk_cycle
    cdef int64_t[:, :] bt = blk_total
    cdef int64_t[:, :] bl = blk_left
    cdef int64_t[:, :] bp = blk_pkts
    cdef int64_t[:, :] bd = blk_done

    cdef Py_ssize_t[2] head
    cdef Py_ssize_t[2] tail
    head[0] = head[1] = 0
    tail[0] = tail[1] = 0

    cdef Py_ssize_t c, h, t
    cdef Py_ssize_t sid = start_id, next_sid
    cdef int level, d, band
    cdef bint below, above
    cdef int64_t active_sum = 0, served_packets = 0, delay_sum = 0
    cdef int64_t max_delay = 0, served_bytes = 0, backlog = 0, reconfig = 0
    cdef int64_t arrived, room, take, done_now, taken, delay
    cdef double v
    cdef int status = 0

    with nogil:
        for c in range(cycles):
            occ_v[sid] += 1
            level = _level_of(sid, L, M, N)
            active_sum += level

            for d in range(ndirs):
                arrived = bytes_v[d, c]
                if arrived > 0:
                    t = tail[d]
                    bc[d, t] = c
                    bt[d, t] = arrived
                    bl[d, t] = arrived
                    bp[d, t] = counts_v[d, c]
                    bd[d, t] = 0
                    tail[d] = t + 1
                    backlog += arrived

                h = head[d]
                room = level * dir_cap[d]
                while room > 0 and h < tail[d]:
                    take = bl[d, h] if bl[d, h] < room else room
                    bl[d, h] -= take
                    room -= take
                    backlog -= take
                    served_bytes += take
                    if bl[d, h] == 0:
                        done_now = bp[d, h] - bd[d, h]
                    else:
                        taken = bt[d, h] - bl[d, h]
                        done_now = (taken * bp[d, h]) / bt[d, h] - bd[d, h]
                    if done_now > 0:
                        delay = c - bc[d, h]
                        served_packets += done_now
                        delay_sum += done_now * delay
                        if delay > max_delay:
                            max_delay = delay
                        bd[d, h] += done_now
                    if bl[d, h] == 0:
                        h += 1
                head[d] = h

            if backlog > backlog_cap:
                status = 1  # OVERFLOW
                break

            below = True
            above = False
            for d in range(ndirs):
                v = <double>bytes_v[d, c] * 8.0
                if not v < (level - 1) * dir_cb[d]:
                    below = False
                if v > level * dir_cb[d]:
                    above = True
            band = -1 if below else (1 if above else 0)
            next_sid = _successor_id(sid, band, L, M, N)
            if _level_of(next_sid, L, M, N) != level:
                reconfig += 1
            sid = next_sid

    return (occupancy, int(active_sum), int(served_packets), int(delay_sum),
            int(max_delay), int(served_bytes), int(backlog), int(reconfig),
            status)


def chain_walk(cum_rows, uniforms, Py_ssize_t start):
    """Compiled twin of _pure.chain_walk."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] c_cum = \
        np.ascontiguousarray(cum_rows, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c_uni = \
        np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t n = c_cum.shape[0]
    cdef Py_ssize_t steps = c_uni.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(n, dtype=np.int64)

    cdef double[:, :] cum = c_cum
    cdef double[:] uni = c_uni
    cdef int64_t[:] counts_v = counts
    cdef Py_ssize_t sid = start, t, lo, hi, mid
    cdef double u

    with nogil:
        for t in range(steps):
            counts_v[sid] += 1
            u = uni[t]
            lo = 0
            hi = n - 1
            while lo < hi:
                mid = (lo + hi) >> 1
                if u < cum[sid, mid]:
                    hi = mid
                else:
                    lo = mid + 1
            sid = lo
    return counts
