# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled scoring kernels. Hot paths of gradual inference:
candidate logit scoring over CSR adjacency and exact subgraph enumeration."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def cond_logits(cnp.int64_t[::1] indptr,
                cnp.int64_t[::1] adj_rel,
                cnp.int64_t[::1] adj_nbr,
                cnp.int8_t[::1] labels,
                cnp.float64_t[::1] rel_w,
                cnp.int64_t[::1] var_ids):
    cdef Py_ssize_t i, pos, v, nbr
    cdef Py_ssize_t nv = var_ids.shape[0]
    cdef cnp.int8_t lab
    cdef double z
    out_arr = np.empty(nv, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    for i in range(nv):
        v = var_ids[i]
        z = 0.0
        for pos in range(indptr[v], indptr[v + 1]):
            nbr = adj_nbr[pos]
            lab = labels[nbr]
            if lab < 0:
                continue
            if lab == 1:
                z += rel_w[adj_rel[pos]]
            else:
                z -= rel_w[adj_rel[pos]]
        out[i] = z
    return out_arr


def enum_marginal(cnp.float64_t[::1] u0,
                  cnp.float64_t[::1] u1,
                  cnp.int64_t[::1] pa,
                  cnp.int64_t[::1] pb,
                  cnp.float64_t[::1] pw,
                  Py_ssize_t target):
    cdef Py_ssize_t f = u0.shape[0]
    cdef Py_ssize_t np_ = pw.shape[0]
    cdef unsigned long long n = 1ULL << f
    cdef unsigned long long s
    cdef Py_ssize_t i, j
    cdef double acc, m, z, z1, e
    ls_arr = np.empty(n, dtype=np.float64)
    cdef cnp.float64_t[::1] ls = ls_arr
    m = -1e300
    for s in range(n):
        acc = 0.0
        for i in range(f):
            if (s >> i) & 1:
                acc += u1[i]
            else:
                acc += u0[i]
        for j in range(np_):
            if ((s >> pa[j]) & 1) == ((s >> pb[j]) & 1):
                acc += pw[j]
        ls[s] = acc
        if acc > m:
            m = acc
    z = 0.0
    z1 = 0.0
    for s in range(n):
        e = exp(ls[s] - m)
        z += e
        if (s >> target) & 1:
            z1 += e
    return z1 / z
