# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tree-evaluation kernel.

Same contract as prereqkt._evalpy.evaluate_batch: one uint8 value per
(example, node), nodes evaluated in reverse id order so children are ready
before their parent.
"""

import numpy as np

cimport cython
from libc.stdint cimport int8_t, int32_t, uint8_t


def evaluate_batch(const int8_t[::1] node_type,
                   const int32_t[::1] slot,
                   const uint8_t[::1] const_bit,
                   const int32_t[::1] theta,
                   const int32_t[::1] child_flat,
                   const int32_t[::1] child_start,
                   const uint8_t[:, ::1] X):
    cdef Py_ssize_t batch = X.shape[0]
    cdef Py_ssize_t n_nodes = node_type.shape[0]
    out_arr = np.empty((batch, n_nodes), dtype=np.uint8)
    cdef uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t b, c
    cdef Py_ssize_t i
    cdef int32_t s
    cdef int8_t t
    cdef uint8_t v
    with nogil:
        for b in range(batch):
            for i in range(n_nodes - 1, -1, -1):
                t = node_type[i]
                if t == 0:
                    v = X[b, slot[i]]
                elif t == 1:
                    v = const_bit[i]
                else:
                    s = 0
                    for c in range(child_start[i], child_start[i + 1]):
                        s += out[b, child_flat[c]]
                    v = 1 if s >= theta[i] else 0
                out[b, i] = v
    return out_arr
