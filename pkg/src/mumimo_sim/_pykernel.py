"""Pure-Python cycle loop. Reference semantics for ``_ckernel.pyx``.

Arrays (all mutated in place):

    times, payload, sublen  (N, cap)  per-user packet buffers, FIFO order
    head, count             (N,)      first unconsumed / one past last buffered
    exhausted               (N,)      stream has no further packets
    clock                   (2,)      [clock, end of previous cycle]
    counter                 (1,)      cycles executed so far

``fparams`` = [horizon, overhead_with_sounding, overhead_without, mcs_rate]
``iparams`` = [M, readiness_threshold, max_agg, sounding_every]

Returns ``(status, user, written)``.
"""

import math

DONE = 0
NEED_MORE = 1
FULL = 2

INF = math.inf


def ready_time(times, head, count, exhausted, u, thr):
    """Instant the user's queue first holds ``thr`` packets (inf if never)."""
    k = head[u] + thr - 1
    if k < count[u]:
        return times[u, k]
    return INF


def group_formation_time(ready, M):
    """M-th smallest ready time: the earliest instant a full group exists."""
    return sorted(ready)[M - 1]


def pick_group(times, head, ready, t, M):
    """M ready users with the oldest head-of-line packets, ties to lower id."""
    cands = [(times[u, head[u]], u) for u in range(len(ready)) if ready[u] <= t]
    if len(cands) < M:
        return None
    cands.sort()
    return [u for _, u in cands[:M]]


def dequeue(times, payload, sublen, head, count, u, t, max_agg):
    """Pop up to ``max_agg`` packets that arrived by ``t``.

    Returns (subframes, payload bytes, psdu bytes).
    """
    h = head[u]
    stop = min(h + max_agg, count[u])
    n = pay = psdu = 0
    i = h
    while i < stop and times[u, i] <= t:
        pay += payload[u, i]
        psdu += sublen[u, i]
        i += 1
    n = i - h
    head[u] = i
    return n, pay, psdu


def run_cycles(times, payload, sublen, head, count, exhausted, clock, counter,
               fparams, iparams, out_start, out_end, out_delay, out_sounded,
               out_users, out_nsub, out_payload, out_psdu):
    horizon, ov_sound, ov_plain, rate = (float(x) for x in fparams)
    M, thr, max_agg, every = (int(x) for x in iparams)
    N = len(head)
    cap_out = len(out_start)
    written = 0
    while True:
        for u in range(N):
            if not exhausted[u] and count[u] - head[u] < max_agg:
                return NEED_MORE, u, written
        ready = [ready_time(times, head, count, exhausted, u, thr) for u in range(N)]
        t = group_formation_time(ready, M)
        if t == INF:
            return DONE, -1, written
        t = max(t, clock[0])
        if t >= horizon:
            return DONE, -1, written
        if written == cap_out:
            return FULL, -1, written
        group = pick_group(times, head, ready, t, M)
        longest = 0.0
        for j, u in enumerate(group):
            n, pay, psdu = dequeue(times, payload, sublen, head, count, u, t, max_agg)
            out_users[written, j] = u
            out_nsub[written, j] = n
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
