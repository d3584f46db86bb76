"""Slow, obviously-correct reference implementations used by the tests."""

import itertools

import numpy as np


def dense_rank(m) -> int:
    a = (np.array(m, dtype=np.uint8) & 1).copy()
    rank = 0
    rows, cols = a.shape
    for c in range(cols):
        hit = [r for r in range(rank, rows) if a[r, c]]
        if not hit:
            continue
        a[[rank, hit[0]]] = a[[hit[0], rank]]
        for r in range(rows):
            if r != rank and a[r, c]:
                a[r] ^= a[rank]
        rank += 1
    return rank


def min_logical_weight(h_opp, h_same) -> int:
    """Lowest weight of a vector in ker(h_opp) outside rowspace(h_same)."""
    h_opp = np.array(h_opp, dtype=np.int64)
    h_same = np.array(h_same, dtype=np.uint8)
    n = h_opp.shape[1]
    base = dense_rank(h_same)
    for w in range(1, n + 1):
        for supp in itertools.combinations(range(n), w):
            v = np.zeros(n, np.uint8)
            v[list(supp)] = 1
            if (h_opp @ v % 2).any():
                continue
            if dense_rank(np.vstack([h_same, v])) > base:
                return w
    return n + 1
