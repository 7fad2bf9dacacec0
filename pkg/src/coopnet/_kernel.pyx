# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled slot loop. Mirrors coopnet._pykernel.run_block exactly."""

from libc.stdint cimport int64_t, uint8_t


def run_block(const int64_t[::1] tx, const int64_t[::1] rx, const uint8_t[::1] coop,
              const int64_t[::1] start, const int64_t[::1] idx, const double[:, ::1] pw,
              const int64_t[::1] fixed_relay, double nu_alpha, int protocol,
              double[::1] g_tx, double[::1] g_relay, double[::1] e_tx, double[::1] e_relay):
    cdef Py_ssize_t n_slots = tx.shape[0]
    cdef Py_ssize_t n_end = pw.shape[0]
    cdef bint fixed = fixed_relay.shape[0] > 0
    cdef Py_ssize_t t, k, p
    cdef int64_t a, b, c, relay
    cdef double best, d
    cdef long n_assisted = 0

    for t in range(n_slots):
        a = tx[t]
        b = rx[t]
        relay = -1
        if fixed:
            relay = fixed_relay[a]
        else:
            p = a * n_end + b
            if protocol == 2:
                for k in range(start[p], start[p + 1]):
                    if coop[idx[k]]:
                        relay = idx[k]
                        break
            else:
                best = 0.0
                for k in range(start[p], start[p + 1]):
                    c = idx[k]
                    if coop[c]:
                        d = pw[a, c]
                        if relay < 0 or d < best or (d == best and c < relay):
                            relay = c
                            best = d
        if relay < 0:
            g_tx[a] -= (1.0 - nu_alpha) * pw[a, b]
            e_tx[a] += pw[a, b]
        else:
            n_assisted += 1
            if fixed or protocol == 1:
                e_tx[a] += pw[a, relay]
            else:
                e_tx[a] += nu_alpha * pw[a, b]
            g_relay[relay] -= pw[relay, b]
            e_relay[relay] += pw[relay, b]
    return n_assisted
