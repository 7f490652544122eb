"""Neighbor-selection kernels with compiled and pure-numpy backends.

The compiled extension (``labelaudit._topk``, built from Cython) is picked up
at import time when present; otherwise everything runs through the numpy
fallback. Both backends implement the identical contract for a block of
query rows:

* the k largest cosine similarities per query row, the row itself excluded,
* sorted by similarity descending, ties broken toward the smaller row index,
* every similarity computed as a strictly left-to-right dot product, so the
  two backends (and a naive double-loop reference) agree bit for bit.

The compiled kernel fuses the dot products with the selection and never
materializes a similarity slab; the fallback builds the block slab one
feature dimension at a time and runs a full stable argsort per row.
``benchmarks/bench_topk.py`` compares the two.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError

try:
    from . import _topk as _compiled
except ImportError:  # extension not built; numpy path only
    _compiled = None

HAVE_COMPILED = _compiled is not None

BACKENDS = ("auto", "compiled", "numpy")


def resolve_backend(backend: str = "auto") -> str:
    """Map a requested backend name to the concrete one that will run."""
    if backend not in BACKENDS:
        raise ConfigError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == "auto":
        return "compiled" if HAVE_COMPILED else "numpy"
    if backend == "compiled" and not HAVE_COMPILED:
        raise ConfigError("compiled kernel requested but the extension is not built")
    return backend


def similarity_block(x: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Cosine similarities of rows ``start:stop`` against all rows of ``x``.

    Accumulates one feature dimension at a time with elementwise multiply-add,
    keeping the per-entry floating-point sequence identical to a naive dot
    product regardless of block height.
    """
    block = np.multiply(x[start:stop, 0:1], x[:, 0][None, :])
    for dd in range(1, x.shape[1]):
        block += x[start:stop, dd : dd + 1] * x[:, dd][None, :]
    return block


def topk_rows_numpy(x, start, stop, k, out_ids, out_sims):
    """Numpy reference kernel: block slab plus full stable argsort per row.

    Stable sort on the negated similarities reproduces the
    smaller-index-wins tie rule of the compiled kernel exactly.
    """
    block = similarity_block(x, start, stop)
    rows = np.arange(stop - start)
    block[rows, start + rows] = -np.inf
    order = np.argsort(-block, axis=1, kind="stable")[:, :k]
    out_ids[...] = order
    out_sims[...] = np.take_along_axis(block, order, axis=1)


def topk_rows(x, start, stop, k, out_ids, out_sims, backend: str):
    """Dispatch one block of query rows to the selected backend."""
    if backend == "compiled":
        _compiled.topk_fused(x, start, stop, k, out_ids, out_sims)
    else:
        topk_rows_numpy(x, start, stop, k, out_ids, out_sims)
