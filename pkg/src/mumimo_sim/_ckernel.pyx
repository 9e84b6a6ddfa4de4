# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cycle loop; same contract as ``_pykernel.run_cycles``."""

from libc.math cimport INFINITY

cdef enum:
    MAX_USERS = 256
    DONE = 0
    NEED_MORE = 1
    FULL = 2


def run_cycles(double[:, ::1] times, long long[:, ::1] payload,
               long long[:, ::1] sublen, long long[::1] head,
               long long[::1] count, unsigned char[::1] exhausted,
               double[::1] clock, long long[::1] counter,
               double[::1] fparams, long long[::1] iparams,
               double[::1] out_start, double[::1] out_end,
               double[::1] out_delay, unsigned char[::1] out_sounded,
               long long[:, ::1] out_users, long long[:, ::1] out_nsub,
               long long[:, ::1] out_payload, long long[:, ::1] out_psdu):
    cdef double horizon = fparams[0]
    cdef double ov_sound = fparams[1]
    cdef double ov_plain = fparams[2]
    cdef double rate = fparams[3]
    cdef Py_ssize_t M = iparams[0]
    cdef Py_ssize_t thr = iparams[1]
    cdef Py_ssize_t max_agg = iparams[2]
    cdef long long every = iparams[3]
    cdef Py_ssize_t N = head.shape[0]
    cdef Py_ssize_t cap_out = out_start.shape[0]
    cdef Py_ssize_t written = 0
    cdef double ready[MAX_USERS]
    cdef double sorted_ready[MAX_USERS]
    cdef double key[MAX_USERS]
    cdef Py_ssize_t order[MAX_USERS]
    cdef Py_ssize_t u, v, i, j, k, h, stop, nc
    cdef double t, x, longest, air, end, kx
    cdef long long pay, psdu
    cdef bint sounded

    if N > MAX_USERS:
        raise ValueError("too many users for the compiled kernel")

    while True:
        for u in range(N):
            if not exhausted[u] and count[u] - head[u] < max_agg:
                return NEED_MORE, u, written

        for u in range(N):
            k = head[u] + thr - 1
            ready[u] = times[u, k] if k < count[u] else INFINITY
            # insertion sort for the M-th smallest
            x = ready[u]
            j = u
            while j > 0 and sorted_ready[j - 1] > x:
                sorted_ready[j] = sorted_ready[j - 1]
                j -= 1
            sorted_ready[j] = x
        t = sorted_ready[M - 1]
        if t == INFINITY:
            return DONE, -1, written
        if clock[0] > t:
            t = clock[0]
        if t >= horizon:
            return DONE, -1, written
        if written == cap_out:
            return FULL, -1, written

        # ready users ordered by (head-of-line arrival, user id)
        nc = 0
        for u in range(N):
            if ready[u] <= t:
                kx = times[u, head[u]]
                j = nc
                while j > 0 and key[j - 1] > kx:
                    key[j] = key[j - 1]
                    order[j] = order[j - 1]
                    j -= 1
                key[j] = kx
                order[j] = u
                nc += 1

        longest = 0.0
        for j in range(M):
            u = order[j]
            h = head[u]
            stop = h + max_agg
            if count[u] < stop:
                stop = count[u]
            pay = 0
            psdu = 0
            i = h
            while i < stop and times[u, i] <= t:
                pay += payload[u, i]
                psdu += sublen[u, i]
                i += 1
            head[u] = i
            out_users[written, j] = u
            out_nsub[written, j] = i - h
            out_payload[written, j] = pay
            out_psdu[written, j] = psdu
            air = psdu * 8.0 / rate
            if air > longest:
                longest = air

        sounded = counter[0] % every == 0
        end = t + (ov_sound if sounded else ov_plain) + longest
        out_start[written] = t
        out_end[written] = end
        out_delay[written] = t - clock[1]
        out_sounded[written] = sounded
        clock[0] = end
        clock[1] = end
        counter[0] += 1
        written += 1
