"""Evaluation-kernel selection: compiled core with a pure numpy fallback.

The hot loop of the toolkit is batched bottom-up tree evaluation (dataset
labeling, Monte Carlo checks, label audits).  Both kernels consume the same
flattened tree arrays and produce identical (batch, n_nodes) uint8 value
matrices; the compiled Cython core is preferred when importable, and
``PREREQKT_FORCE_PURE=1`` forces the numpy fallback (used by tests and the
benchmark to compare the two).

Every rule in the node alphabet (MAJ/ALL/ANY) is a counting rule, so an
internal node evaluates as ``sum(child values) >= theta`` with theta
precomputed per node; the kernels never see rule kinds.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _evalpy

NODE_SLOT = 0
NODE_CONST = 1
NODE_INTERNAL = 2


@dataclass(frozen=True)
class FlatTree:
    """Parallel array form of a PrereqTree, node ids preserved.

    Children always have larger ids than their parent, so iterating nodes in
    reverse id order is a valid bottom-up schedule.
    """

    node_type: np.ndarray    # int8[N]: NODE_SLOT / NODE_CONST / NODE_INTERNAL
    slot: np.ndarray         # int32[N]; -1 for non-slot nodes
    const: np.ndarray        # uint8[N]; 0 for non-const nodes
    theta: np.ndarray        # int32[N]; child-sum firing threshold, internal only
    child_flat: np.ndarray   # int32[total children], grouped by parent
    child_start: np.ndarray  # int32[N+1]; node i's children at child_flat[start[i]:start[i+1]]
    n_slots: int

    @staticmethod
    def from_tree(tree) -> "FlatTree":
        n = tree.n_nodes
        node_type = np.zeros(n, dtype=np.int8)
        slot = np.full(n, -1, dtype=np.int32)
        const = np.zeros(n, dtype=np.uint8)
        theta = np.zeros(n, dtype=np.int32)
        child_start = np.zeros(n + 1, dtype=np.int32)
        flat: list[int] = []
        for i in range(n):
            kind = tree.kinds[i]
            child_start[i] = len(flat)
            if kind == "slot":
                node_type[i] = NODE_SLOT
                slot[i] = tree.slots[i]
            elif kind == "const":
                node_type[i] = NODE_CONST
                const[i] = tree.consts[i]
            else:
                node_type[i] = NODE_INTERNAL
                kids = tree.children[i]
                theta[i] = tree.rules[i].threshold(len(kids))
                flat.extend(kids)
        child_start[n] = len(flat)
        return FlatTree(
            node_type=node_type,
            slot=slot,
            const=const,
            theta=theta,
            child_flat=np.asarray(flat, dtype=np.int32),
            child_start=child_start,
            n_slots=tree.n_slots,
        )


_compiled = None
if not os.environ.get("PREREQKT_FORCE_PURE"):
    try:
        from . import _evalcore as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "pure"


def available_backends() -> dict[str, object]:
    """Kernel name -> batch-eval callable, for tests and benchmarks."""
    out = {"pure": _evalpy.evaluate_batch}
    if _compiled is not None:
        out["compiled"] = _compiled.evaluate_batch
    return out


def evaluate_batch(flat: FlatTree, X: np.ndarray) -> np.ndarray:
    """Evaluate all nodes for a batch of assignments; returns uint8[batch, N]."""
    X = np.ascontiguousarray(X, dtype=np.uint8)
    if _compiled is not None:
        return _compiled.evaluate_batch(
            flat.node_type, flat.slot, flat.const, flat.theta,
            flat.child_flat, flat.child_start, X,
        )
    return _evalpy.evaluate_batch(
        flat.node_type, flat.slot, flat.const, flat.theta,
        flat.child_flat, flat.child_start, X,
    )
