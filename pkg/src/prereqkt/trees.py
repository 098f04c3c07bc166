"""Prerequisite concept trees and their bottom-up evaluation.

A prerequisite tree is a rooted tree whose leaves carry binary mastery bits
(or hard-wired constants) and whose internal nodes aggregate child values
with one of three rules:

* ``MAJ(k)`` -- strict majority of exactly k children: fires iff the child
  sum is at least floor(k/2) + 1 (the threshold is always derived, never
  stored, so the tie convention for even k cannot drift).
* ``ALL``   -- conjunction of the children.
* ``ANY``   -- disjunction of the children.

Trees are stored as parallel per-node records in canonical level order:
the root has id 0, children are listed left to right and always have larger
ids than their parent.  For a balanced k-ary tree of depth d (root at depth
0) the leaf count is n = k**d, the total node count is
(k**(d+1) - 1) // (k - 1), and the i-th non-constant leaf in left-to-right
order carries input slot i (slots are 0-based here and throughout the JSON
formats).

Everything is immutable after construction and evaluation is pure, so trees
may be shared freely across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import backend

MAJ = "MAJ"
ALL = "ALL"
ANY = "ANY"

KIND_INTERNAL = "internal"
KIND_SLOT = "slot"
KIND_CONST = "const"


@dataclass(frozen=True)
class NodeRule:
    """Aggregation rule of an internal node."""

    kind: str
    k: int | None = None

    def __post_init__(self):
        if self.kind not in (MAJ, ALL, ANY):
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.kind == MAJ:
            if not isinstance(self.k, int) or self.k < 1:
                raise ValueError("MAJ requires an integer arity k >= 1")
        elif self.k is not None:
            raise ValueError(f"{self.kind} does not take an arity")

    def threshold(self, fanin: int) -> int:
        """Child-sum threshold at which the rule fires, for a given fanin."""
        if fanin < 1:
            raise ValueError("rule needs at least one child")
        if self.kind == MAJ:
            if fanin != self.k:
                raise ValueError(f"MAJ({self.k}) applied to {fanin} children")
            return self.k // 2 + 1
        if self.kind == ALL:
            return fanin
        return 1  # ANY

    def spec(self) -> dict:
        return {"kind": self.kind} if self.k is None else {"kind": self.kind, "k": self.k}

    @staticmethod
    def from_spec(spec: dict) -> "NodeRule":
        return NodeRule(spec["kind"], spec.get("k"))


def maj(k: int) -> NodeRule:
    return NodeRule(MAJ, k)


ALL_RULE = NodeRule(ALL)
ANY_RULE = NodeRule(ANY)


@dataclass(frozen=True)
class Alternation:
    """Level-alternating ALL/ANY rule assignment, given the root-level kind."""

    root_kind: str

    def __post_init__(self):
        if self.root_kind not in (ALL, ANY):
            raise ValueError("alternation root kind must be ALL or ANY")

    def rule_at_depth(self, depth: int) -> NodeRule:
        first = self.root_kind == ALL
        even = depth % 2 == 0
        return ALL_RULE if first == even else ANY_RULE


RuleSpec = Union[NodeRule, Alternation]


def apply_rule(rule: NodeRule, child_bits: Sequence[int]) -> int:
    """Apply an aggregation rule to a vector of child bits."""
    bits = list(child_bits)
    if any(b not in (0, 1) for b in bits):
        raise ValueError("child bits must be 0/1")
    theta = rule.threshold(len(bits))
    return int(sum(bits) >= theta)


@dataclass
class PrereqTree:
    """Immutable rooted prerequisite tree in level order (root id 0).

    Per-node parallel records:
      kinds[i]    -- "internal" | "slot" | "const"
      rules[i]    -- NodeRule for internal nodes, else None
      children[i] -- ordered child ids (empty for leaves)
      slots[i]    -- input slot for "slot" leaves, else None
      consts[i]   -- fixed bit for "const" leaves, else None

    ``k`` is the uniform arity for balanced trees (None for irregular
    shapes); ``depth`` uses the root-at-depth-0 convention.
    """

    kinds: tuple[str, ...]
    rules: tuple[NodeRule | None, ...]
    children: tuple[tuple[int, ...], ...]
    slots: tuple[int | None, ...]
    consts: tuple[int | None, ...]
    k: int | None
    depth: int
    rule_spec: dict = field(default_factory=dict)
    _flat: "backend.FlatTree | None" = field(default=None, repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.kinds)

    @property
    def n_slots(self) -> int:
        return sum(1 for knd in self.kinds if knd == KIND_SLOT)

    @property
    def root(self) -> int:
        return 0

    def validate(self) -> None:
        """Check the tree-ness and slot invariants; raise ValueError on any breach."""
        n_nodes = self.n_nodes
        if n_nodes == 0:
            raise ValueError("empty tree")
        parent_count = [0] * n_nodes
        for i, kids in enumerate(self.children):
            if self.kinds[i] == KIND_INTERNAL:
                if len(kids) < 1:
                    raise ValueError(f"internal node {i} has no children")
                if self.rules[i] is None:
                    raise ValueError(f"internal node {i} has no rule")
                self.rules[i].threshold(len(kids))  # arity check
            elif kids:
                raise ValueError(f"leaf node {i} has children")
            for c in kids:
                if not (0 <= c < n_nodes):
                    raise ValueError(f"node {i} has dangling child {c}")
                if c <= i:
                    raise ValueError(
                        f"child {c} does not follow its parent {i}; nodes must be level-ordered"
                    )
                parent_count[c] += 1
        if parent_count[0] != 0:
            raise ValueError("root must not be a child")
        for i in range(1, n_nodes):
            if parent_count[i] != 1:
                raise ValueError(f"node {i} has {parent_count[i]} parents, expected 1")
        slots = sorted(self.slots[i] for i in range(n_nodes) if self.kinds[i] == KIND_SLOT)
        if slots != list(range(len(slots))):
            raise ValueError("input slots must be exactly 0..n-1, each used once")
        for i in range(n_nodes):
            if self.kinds[i] == KIND_CONST and self.consts[i] not in (0, 1):
                raise ValueError(f"const leaf {i} must hold 0 or 1")

    def node_depths(self) -> list[int]:
        depths = [0] * self.n_nodes
        for i, kids in enumerate(self.children):
            for c in kids:
                depths[c] = depths[i] + 1
        return depths

    def flat(self) -> "backend.FlatTree":
        """Array form consumed by the evaluation kernels (cached)."""
        if self._flat is None:
            self._flat = backend.FlatTree.from_tree(self)
        return self._flat

    # -- construction -------------------------------------------------------

    @staticmethod
    def from_nested(spec, k: int | None = None, rule_spec: dict | None = None) -> "PrereqTree":
        """Build a tree from a nested spec, assigning level-order ids by BFS.

        Spec grammar:
          ("slot", i)            leaf reading input slot i
          ("const", bit)         constant leaf
          (NodeRule, [specs...]) internal node
        """
        kinds: list[str] = []
        rules: list[NodeRule | None] = []
        children: list[list[int]] = []
        slots: list[int | None] = []
        consts: list[int | None] = []

        # BFS: parents are materialized before children, so child ids are larger.
        frontier = [(spec, None)]
        for node_spec, parent in frontier:
            idx = len(kinds)
            if parent is not None:
                children[parent].append(idx)
            head = node_spec[0]
            if head == KIND_SLOT:
                kinds.append(KIND_SLOT)
                rules.append(None)
                children.append([])
                slots.append(int(node_spec[1]))
                consts.append(None)
            elif head == KIND_CONST:
                kinds.append(KIND_CONST)
                rules.append(None)
                children.append([])
                slots.append(None)
                consts.append(int(node_spec[1]))
            elif isinstance(head, NodeRule):
                kinds.append(KIND_INTERNAL)
                rules.append(head)
                children.append([])
                slots.append(None)
                consts.append(None)
                frontier.extend((child, idx) for child in node_spec[1])
            else:
                raise ValueError(f"bad nested node spec {node_spec!r}")

        return _finish_tree(
            kinds, rules, [tuple(c) for c in children], slots, consts,
            k=k, rule_spec=rule_spec,
        )


def _finish_tree(kinds, rules, children, slots, consts, k, rule_spec) -> PrereqTree:
    """Assemble a PrereqTree, deriving depth and running validation."""
    tree = PrereqTree(
        kinds=tuple(kinds),
        rules=tuple(rules),
        children=tuple(tuple(c) for c in children),
        slots=tuple(slots),
        consts=tuple(consts),
        k=k,
        depth=0,
        rule_spec=rule_spec or {},
    )
    tree.depth = max(tree.node_depths(), default=0)
    tree.validate()
    return tree


def build_tree_by_levels(fanins: Sequence[int], rules_by_level: Sequence[NodeRule],
                         rule_spec: dict | None = None, k: int | None = None) -> PrereqTree:
    """Build a tree where every depth-i internal node has fanin fanins[i].

    Depth t = len(fanins); leaves sit at depth t and read slots 0..n-1 in
    left-to-right order.  t = 0 yields the single-leaf tree.
    """
    t = len(fanins)
    if len(rules_by_level) != t:
        raise ValueError("need one rule per internal level")
    for f in fanins:
        if not isinstance(f, int) or f < 1:
            raise ValueError("fanins must be positive integers")

    level_counts = [1]
    for f in fanins:
        level_counts.append(level_counts[-1] * f)
    offsets = [0]
    for c in level_counts:
        offsets.append(offsets[-1] + c)
    n_nodes = offsets[-1]

    kinds: list[str] = [KIND_INTERNAL] * n_nodes
    rules: list[NodeRule | None] = [None] * n_nodes
    children: list[tuple[int, ...]] = [()] * n_nodes
    slots: list[int | None] = [None] * n_nodes
    consts: list[int | None] = [None] * n_nodes

    for level in range(t):
        f = fanins[level]
        for j in range(level_counts[level]):
            idx = offsets[level] + j
            base = offsets[level + 1] + j * f
            rules[idx] = rules_by_level[level]
            children[idx] = tuple(range(base, base + f))
    for j in range(level_counts[t]):
        idx = offsets[t] + j
        kinds[idx] = KIND_SLOT
        slots[idx] = j

    return _finish_tree(kinds, rules, children, slots, consts, k=k, rule_spec=rule_spec)


def build_balanced_tree(k: int, d: int, rule: RuleSpec,
                        allow_nonstandard_maj: bool = False) -> PrereqTree:
    """Perfectly balanced k-ary tree of depth d (root at depth 0).

    ``rule`` is either a uniform NodeRule or an Alternation giving the
    root-level kind of an alternating ALL/ANY tree.  The result has k**d
    input slots and (k**(d+1) - 1) // (k - 1) nodes.

    Majority trees are restricted to odd k >= 3 (the only configurations the
    task family uses) unless ``allow_nonstandard_maj`` is set, which admits
    any k >= 1 for testing, with the even-k threshold fixed at k//2 + 1.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError("arity k must be a positive integer")
    if not isinstance(d, int) or d < 0:
        raise ValueError("depth d must be a non-negative integer")

    if isinstance(rule, Alternation):
        rules_by_level = [rule.rule_at_depth(i) for i in range(d)]
        spec = {"kind": "ALT", "root": rule.root_kind, "k": k, "d": d}
    elif isinstance(rule, NodeRule):
        if rule.kind == MAJ:
            if rule.k != k:
                raise ValueError(f"tree arity {k} does not match MAJ({rule.k})")
            if (k < 3 or k % 2 == 0) and not allow_nonstandard_maj:
                raise ValueError(
                    "MAJ trees use odd k >= 3; pass allow_nonstandard_maj=True to override"
                )
        rules_by_level = [rule] * d
        spec = dict(rule.spec(), k=k, d=d)
    else:
        raise ValueError("rule must be a NodeRule or an Alternation")

    return build_tree_by_levels([k] * d, rules_by_level, rule_spec=spec, k=k)


@dataclass(frozen=True)
class EvalTrace:
    """Per-node values of one bottom-up evaluation (indexed by node id)."""

    values: np.ndarray

    @property
    def root_value(self) -> int:
        return int(self.values[0])


def _as_bit_matrix(x, n_slots: int, batch: bool) -> np.ndarray:
    arr = np.asarray(x, dtype=np.uint8)
    if not batch:
        if arr.ndim != 1 or arr.shape[0] != n_slots:
            raise ValueError(f"assignment must have length {n_slots}, got shape {arr.shape}")
        arr = arr[None, :]
    elif arr.ndim != 2 or arr.shape[1] != n_slots:
        raise ValueError(f"assignments must have shape (batch, {n_slots})")
    if arr.size and arr.max() > 1:
        raise ValueError("assignment bits must be 0/1")
    return arr


def evaluate(tree: PrereqTree, x) -> EvalTrace:
    """Evaluate the tree bottom-up on assignment ``x`` and keep every node value."""
    X = _as_bit_matrix(x, tree.n_slots, batch=False)
    values = backend.evaluate_batch(tree.flat(), X)[0]
    return EvalTrace(values=values)


def evaluate_batch(tree: PrereqTree, X) -> np.ndarray:
    """Vectorized ``evaluate``: returns a (batch, n_nodes) uint8 value matrix."""
    X = _as_bit_matrix(X, tree.n_slots, batch=True)
    return backend.evaluate_batch(tree.flat(), X)


def subtree_value_at(trace: EvalTrace, node_index: int) -> int:
    """Value of the subtree rooted at ``node_index`` in a recorded trace."""
    n = trace.values.shape[0]
    if not (0 <= node_index < n):
        raise IndexError(f"node index {node_index} out of range [0, {n})")
    return int(trace.values[node_index])


# -- JSON serialization -----------------------------------------------------


def tree_to_json(tree: PrereqTree) -> dict:
    nodes = []
    for i in range(tree.n_nodes):
        node: dict = {"id": i, "kind": tree.kinds[i]}
        if tree.kinds[i] == KIND_INTERNAL:
            node["rule"] = tree.rules[i].spec()
            node["children"] = list(tree.children[i])
        elif tree.kinds[i] == KIND_SLOT:
            node["slot"] = tree.slots[i]
        else:
            node["const"] = tree.consts[i]
        nodes.append(node)
    return {"k": tree.k, "d": tree.depth, "rule_spec": tree.rule_spec, "nodes": nodes}


def tree_from_json(doc: dict) -> PrereqTree:
    nodes = sorted(doc["nodes"], key=lambda nd: nd["id"])
    if [nd["id"] for nd in nodes] != list(range(len(nodes))):
        raise ValueError("node ids must be exactly 0..N-1")
    kinds, rules, children, slots, consts = [], [], [], [], []
    for nd in nodes:
        kinds.append(nd["kind"])
        if nd["kind"] == KIND_INTERNAL:
            rules.append(NodeRule.from_spec(nd["rule"]))
            children.append(tuple(nd["children"]))
            slots.append(None)
            consts.append(None)
        elif nd["kind"] == KIND_SLOT:
            rules.append(None)
            children.append(())
            slots.append(int(nd["slot"]))
            consts.append(None)
        elif nd["kind"] == KIND_CONST:
            rules.append(None)
            children.append(())
            slots.append(None)
            consts.append(int(nd["const"]))
        else:
            raise ValueError(f"unknown node kind {nd['kind']!r}")
    return _finish_tree(kinds, rules, children, slots, consts,
                        k=doc.get("k"), rule_spec=doc.get("rule_spec"))


def tree_to_json_str(tree: PrereqTree) -> str:
    return json.dumps(tree_to_json(tree), sort_keys=True, separators=(",", ":"))
