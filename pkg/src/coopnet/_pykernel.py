"""NumPy implementation of the slot loop, used when the extension is not built.

Relay choices are resolved once per (tx, rx) pair, since behaviour flags are
frozen for the whole block, then charged slot by slot with ``np.add.at`` so
the per-node accumulation order matches the compiled loop bit for bit.
"""

import numpy as np


def _first_cooperator(coop, start, idx):
    """Per pair: first cooperating entry of its candidate list, else -1."""
    n_pairs = len(start) - 1
    relay = np.full(n_pairs, -1, dtype=np.int64)
    hits = np.flatnonzero(coop[idx].astype(bool))
    if len(hits) == 0:
        return relay
    j = np.searchsorted(hits, start[:-1])
    ok = j < len(hits)
    ok[ok] &= hits[j[ok]] < start[1:][ok]
    relay[ok] = idx[hits[j[ok]]]
    return relay


def _nearest_to_tx(coop, start, idx, pw):
    n_pairs = len(start) - 1
    n_end = pw.shape[0]
    relay = np.full(n_pairs, -1, dtype=np.int64)
    pair_of = np.repeat(np.arange(n_pairs), np.diff(start))
    keep = coop[idx].astype(bool)
    pair_of, cand = pair_of[keep], idx[keep]
    if len(cand) == 0:
        return relay
    d = pw[pair_of // n_end, cand]
    order = np.lexsort((cand, d, pair_of))
    pair_sorted = pair_of[order]
    first = np.flatnonzero(np.r_[True, pair_sorted[1:] != pair_sorted[:-1]])
    relay[pair_sorted[first]] = cand[order][first]
    return relay


def run_block(tx, rx, coop, start, idx, pw, fixed_relay, nu_alpha, protocol,
              g_tx, g_relay, e_tx, e_relay):
    n_end = pw.shape[0]
    if len(fixed_relay):
        relay = fixed_relay[tx]
    else:
        if protocol == 2:
            by_pair = _first_cooperator(coop, start, idx)
        else:
            by_pair = _nearest_to_tx(coop, start, idx, pw)
        relay = by_pair[tx * n_end + rx]

    direct = pw[tx, rx]
    helped = relay >= 0
    alone = ~helped
    np.add.at(g_tx, tx[alone], -((1.0 - nu_alpha) * direct[alone]))

    spent = direct.copy()
    if len(fixed_relay) or protocol == 1:
        spent[helped] = pw[tx[helped], relay[helped]]
    else:
        spent[helped] = nu_alpha * direct[helped]
    np.add.at(e_tx, tx, spent)

    r, b = relay[helped], rx[helped]
    cost = pw[r, b]
    np.add.at(g_relay, r, -cost)
    np.add.at(e_relay, r, cost)
    return int(helped.sum())
