"""Pure-numpy fallback for the 1D convolution kernels.

The three primitives below are the only compute paths that differ between
the compiled backend and this one, so they share a strict float contract:
float64 in and out, zero-initialized accumulators, and a fixed per-element
accumulation order (documented on each function). The compiled twin in
``_conv1d.pyx`` replays the same order, which makes the two backends
bit-identical, not merely close.
"""

import numpy as np


def correlate_valid(a, w):
    """Valid cross-correlation: out[b, p, t] = sum_{q,k} w[p, q, k] * a[b, q, t+k].

    Accumulation order per output element: (q, k) lexicographic.
    Shapes: a (B, Q, T), w (P, Q, K) -> out (B, P, T-K+1).
    """
    nb, nq, nt = a.shape
    np_, _, nk = w.shape
    nto = nt - nk + 1
    out = np.zeros((nb, np_, nto), dtype=np.float64)
    for q in range(nq):
        for k in range(nk):
            out += w[None, :, q, k, None] * a[:, None, q, k : k + nto]
    return out


def scatter_full(a, w):
    """Transpose counterpart: out[b, p, t+k] += a[b, q, t] * w[q, p, k].

    Accumulation order per output element: (q, k) lexicographic.
    Shapes: a (B, Q, T), w (Q, P, K) -> out (B, P, T+K-1).
    """
    nb, nq, nt = a.shape
    _, np_, nk = w.shape
    out = np.zeros((nb, np_, nt + nk - 1), dtype=np.float64)
    for q in range(nq):
        for k in range(nk):
            out[:, :, k : k + nt] += a[:, None, q, :] * w[None, q, :, k, None]
    return out


def weight_grad(g, x):
    """Kernel-weight gradient: out[p, q, k] = sum_{b,t} g[b, p, t] * x[b, q, t+k].

    Accumulation order per output element: (b, t) lexicographic.
    Shapes: g (B, P, Tg), x (B, Q, Tx) -> out (P, Q, Tx-Tg+1).
    """
    nb, np_, ntg = g.shape
    _, nq, ntx = x.shape
    nk = ntx - ntg + 1
    out = np.zeros((np_, nq, nk), dtype=np.float64)
    for b in range(nb):
        for t in range(ntg):
            out += g[b, :, t, None, None] * x[b, None, :, t : t + nk]
    return out
