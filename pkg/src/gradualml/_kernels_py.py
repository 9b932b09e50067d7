"""Pure-Python scoring kernels (numpy). Signature-compatible with the
compiled extension; selected automatically when it is unavailable."""

from __future__ import annotations

import numpy as np

_BITS_CACHE: dict[int, np.ndarray] = {}
_CHUNK = 1 << 14


def _bits(n_free: int, lo: int, hi: int) -> np.ndarray:
    """Assignment-bit matrix for indices [lo, hi): shape (hi-lo, n_free)."""
    if lo == 0 and hi <= _CHUNK and n_free in _BITS_CACHE:
        return _BITS_CACHE[n_free][:hi]
    idx = np.arange(lo, hi, dtype=np.int64)[:, None]
    m = ((idx >> np.arange(n_free, dtype=np.int64)[None, :]) & 1).astype(np.float64)
    if lo == 0 and hi == (1 << n_free) and hi <= _CHUNK:
        _BITS_CACHE[n_free] = m
    return m


def cond_logits(indptr, adj_rel, adj_nbr, labels, rel_w, var_ids):
    """Per-variable logit of P(v=1) from labeled neighbors only.

    z = sum over incident relations with labeled neighbor of
    +w if the neighbor label is 1 else -w.
    """
    out = np.empty(len(var_ids), dtype=np.float64)
    for i, v in enumerate(var_ids):
        lo, hi = indptr[v], indptr[v + 1]
        lab = labels[adj_nbr[lo:hi]]
        mask = lab >= 0
        if not mask.any():
            out[i] = 0.0
            continue
        w = rel_w[adj_rel[lo:hi]][mask]
        out[i] = float(np.sum(np.where(lab[mask] == 1, w, -w)))
    return out


def enum_marginal(u0, u1, pa, pb, pw, target):
    """Exact P(target=1) by enumerating all assignments of the free set.

    u0/u1: per free variable, summed log-potential from labeled neighbors
    when the variable takes 0/1. pa/pb/pw: pairwise factors between free
    variables (log-potential pw applies when the endpoints agree).
    """
    f = len(u0)
    n = 1 << f
    u0 = np.asarray(u0, dtype=np.float64)
    u1 = np.asarray(u1, dtype=np.float64)
    pw = np.asarray(pw, dtype=np.float64)
    ls = np.empty(n, dtype=np.float64)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        bits = _bits(f, lo, hi)
        block = bits @ u1 + (1.0 - bits) @ u0
        if len(pw):
            block = block + ((bits[:, pa] == bits[:, pb]) * pw).sum(axis=1)
        ls[lo:hi] = block
    m = ls.max()
    e = np.exp(ls - m)
    z = e.sum()
    tmask = ((np.arange(n, dtype=np.int64) >> target) & 1) == 1
    z1 = e[tmask].sum()
    return float(z1 / z)
