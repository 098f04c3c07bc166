"""Pure numpy tree-evaluation kernel (fallback for the compiled core).

Vectorizes across the batch: one pass over nodes in reverse id order, each
internal node gathering its child columns and comparing the sum against the
node threshold.  Output is bit-identical to the compiled kernel.
"""

from __future__ import annotations

import numpy as np

NODE_SLOT = 0
NODE_CONST = 1
NODE_INTERNAL = 2


def evaluate_batch(node_type, slot, const, theta, child_flat, child_start, X):
    batch = X.shape[0]
    n_nodes = node_type.shape[0]
    out = np.empty((batch, n_nodes), dtype=np.uint8)
    for i in range(n_nodes - 1, -1, -1):
        t = node_type[i]
        if t == NODE_SLOT:
            out[:, i] = X[:, slot[i]]
        elif t == NODE_CONST:
            out[:, i] = const[i]
        else:
            kids = child_flat[child_start[i]:child_start[i + 1]]
            sums = out[:, kids].sum(axis=1, dtype=np.int32)
            out[:, i] = sums >= theta[i]
    return out
