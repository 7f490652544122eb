# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fused cosine top-k kernel.

For each query row, computes the dot product against every candidate row and
keeps the k best in a small insertion-sorted buffer: one pass, no N-sized
temporaries. The accumulation over feature dimensions is strictly sequential
(and the extension is compiled with FP contraction off), so every similarity
is bit-identical to a plain left-to-right dot product; the numpy fallback in
``labelaudit.kernels`` reproduces the same bits.
"""
import numpy as np

cimport numpy as cnp


def topk_fused(double[:, ::1] x, Py_ssize_t start, Py_ssize_t stop, Py_ssize_t k,
               cnp.int64_t[:, ::1] out_ids, double[:, ::1] out_sims):
    """Top-k cosine neighbors for query rows ``start:stop`` of ``x``.

    ``x`` must have unit-norm rows. The query row itself is skipped. Results
    per row are sorted by similarity descending; equal similarities keep the
    smaller row index first. ``out_ids``/``out_sims`` hold one row per query.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t n_rows = stop - start
    cdef Py_ssize_t r, c, dd, filled, j, row
    cdef double s

    if out_ids.shape[0] != n_rows or out_ids.shape[1] != k:
        raise ValueError("out_ids has wrong shape")
    if out_sims.shape[0] != n_rows or out_sims.shape[1] != k:
        raise ValueError("out_sims has wrong shape")
    if k < 1 or k > n - 1:
        raise ValueError("k out of range")
    if start < 0 or stop > n or stop < start:
        raise ValueError("bad block bounds")

    with nogil:
        for r in range(n_rows):
            row = start + r
            filled = 0
            for c in range(n):
                if c == row:
                    continue
                s = 0.0
                for dd in range(d):
                    s = s + x[row, dd] * x[c, dd]
                if filled == k:
                    # Equal to the current k-th value loses the tie: the
                    # buffered entry was seen earlier, at a smaller index.
                    if s <= out_sims[r, k - 1]:
                        continue
                    j = k - 1
                else:
                    j = filled
                    filled += 1
                # Strict comparison keeps equal-similarity entries in
                # ascending-index order.
                while j > 0 and out_sims[r, j - 1] < s:
                    out_sims[r, j] = out_sims[r, j - 1]
                    out_ids[r, j] = out_ids[r, j - 1]
                    j -= 1
                out_sims[r, j] = s
                out_ids[r, j] = c
