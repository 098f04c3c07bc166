"""Boolean and threshold circuit IR plus the tree compilers.

Two compilation targets for prerequisite trees:

* bounded-fanin: AND/OR/NOT gates with fanin <= 2 and no threshold gates.
  MAJ(3) nodes become the 5-gate gadget (a&b)|(a&c)|(b&c); general MAJ(k)
  nodes become a fanin-2 adder tree over the k child bits followed by a
  fixed comparison against k//2 + 1; ALL/ANY nodes become balanced fanin-2
  AND/OR trees.  Per tree node the gadget is constant-size, so circuit
  depth is at most (per-arity gadget depth) * (tree depth).
* threshold: one unit-weight THRESHOLD gate per internal node (MAJ(k):
  theta = k//2 + 1, ALL: theta = fanin, ANY: theta = 1), giving a monotone
  circuit whose depth equals the tree depth.

Depth counts every non-input gate on the longest input-to-output path
(NOT gates included); size counts non-INPUT/CONST gates.  Both are always
recomputed from the DAG, never trusted from serialized metadata.

Also here: the depth-t alternating AND/OR read-once formula builder and the
rewrite that replaces each fanin-2 AND/OR node by a ternary majority over
the two operands and a constant leaf (0 under former ANDs, 1 under former
ORs), which preserves the computed function on every assignment.

Circuits are immutable after construction and evaluation is pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .trees import (
    ALL,
    ANY,
    KIND_CONST,
    KIND_INTERNAL,
    KIND_SLOT,
    MAJ,
    Alternation,
    NodeRule,
    PrereqTree,
    build_tree_by_levels,
    maj,
)

INPUT = "INPUT"
CONST = "CONST"
NOT = "NOT"
AND = "AND"
OR = "OR"
THRESHOLD = "THRESHOLD"

_GATE_KINDS = (INPUT, CONST, NOT, AND, OR, THRESHOLD)


@dataclass(frozen=True)
class Gate:
    kind: str
    inputs: tuple[int, ...] = ()
    slot: int | None = None
    bit: int | None = None
    weights: tuple[int, ...] | None = None
    theta: int | None = None


@dataclass(frozen=True)
class Circuit:
    """Gate DAG in topological order (every gate's inputs precede it)."""

    gates: tuple[Gate, ...]
    output: int
    n_inputs: int

    def validate(self) -> None:
        if not (0 <= self.output < len(self.gates)):
            raise ValueError("output index out of range")
        for i, g in enumerate(self.gates):
            if g.kind not in _GATE_KINDS:
                raise ValueError(f"gate {i}: unknown kind {g.kind!r}")
            for j in g.inputs:
                if not (0 <= j < len(self.gates)):
                    raise ValueError(f"gate {i}: dangling input {j}")
                if j >= i:
                    raise ValueError(f"gate {i}: input {j} does not precede it")
            if g.kind == INPUT:
                if g.inputs or not (0 <= (g.slot or 0) < self.n_inputs) or g.slot is None:
                    raise ValueError(f"gate {i}: bad INPUT gate")
            elif g.kind == CONST:
                if g.inputs or g.bit not in (0, 1):
                    raise ValueError(f"gate {i}: bad CONST gate")
            elif g.kind == NOT:
                if len(g.inputs) != 1:
                    raise ValueError(f"gate {i}: NOT takes exactly one input")
            elif g.kind in (AND, OR):
                if len(g.inputs) < 1:
                    raise ValueError(f"gate {i}: {g.kind} needs inputs")
            else:  # THRESHOLD
                if g.weights is None or g.theta is None:
                    raise ValueError(f"gate {i}: THRESHOLD needs weights and theta")
                if len(g.weights) != len(g.inputs):
                    raise ValueError(f"gate {i}: weight vector length != fanin")


@dataclass(frozen=True)
class CircuitMetrics:
    depth: int
    size: int


def circuit_metrics(c: Circuit) -> CircuitMetrics:
    """Longest-path depth to the output and non-input gate count, recomputed."""
    depth = [0] * len(c.gates)
    for i, g in enumerate(c.gates):
        if g.kind in (INPUT, CONST):
            depth[i] = 0
        else:
            depth[i] = 1 + max((depth[j] for j in g.inputs), default=0)
    size = sum(1 for g in c.gates if g.kind not in (INPUT, CONST))
    return CircuitMetrics(depth=depth[c.output], size=size)


def evaluate_circuit(c: Circuit, x: Sequence[int]) -> int:
    """Evaluate the circuit on an input vector; THRESHOLD fires iff sum(w*x) >= theta."""
    bits = list(x)
    if len(bits) != c.n_inputs:
        raise ValueError(f"expected {c.n_inputs} input bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("input bits must be 0/1")
    vals = [0] * len(c.gates)
    for i, g in enumerate(c.gates):
        if g.kind == INPUT:
            vals[i] = bits[g.slot]
        elif g.kind == CONST:
            vals[i] = g.bit
        elif g.kind == NOT:
            vals[i] = 1 - vals[g.inputs[0]]
        elif g.kind == AND:
            vals[i] = int(all(vals[j] for j in g.inputs))
        elif g.kind == OR:
            vals[i] = int(any(vals[j] for j in g.inputs))
        else:
            acc = sum(w * vals[j] for w, j in zip(g.weights, g.inputs))
            vals[i] = int(acc >= g.theta)
    return vals[c.output]


@dataclass(frozen=True)
class MonotonicityReport:
    monotone: bool
    gate: int | None = None
    reason: str | None = None


def check_monotone(c: Circuit) -> MonotonicityReport:
    """Syntactic monotonicity: no NOT gate, no negative THRESHOLD weight."""
    for i, g in enumerate(c.gates):
        if g.kind == NOT:
            return MonotonicityReport(False, gate=i, reason="NOT gate")
        if g.kind == THRESHOLD and any(w < 0 for w in g.weights):
            return MonotonicityReport(False, gate=i, reason="negative threshold weight")
    return MonotonicityReport(True)


class _Builder:
    def __init__(self, n_inputs: int):
        self.gates: list[Gate] = [Gate(INPUT, slot=i) for i in range(n_inputs)]
        self.n_inputs = n_inputs
        self._consts: dict[int, int] = {}

    def _add(self, gate: Gate) -> int:
        self.gates.append(gate)
        return len(self.gates) - 1

    def const(self, bit: int) -> int:
        if bit not in self._consts:
            self._consts[bit] = self._add(Gate(CONST, bit=bit))
        return self._consts[bit]

    def not_(self, a: int) -> int:
        return self._add(Gate(NOT, inputs=(a,)))

    def and_(self, a: int, b: int) -> int:
        return self._add(Gate(AND, inputs=(a, b)))

    def or_(self, a: int, b: int) -> int:
        return self._add(Gate(OR, inputs=(a, b)))

    def xor(self, a: int, b: int) -> int:
        # fanin-2 AND/OR/NOT expansion: (a|b) & !(a&b)
        return self.and_(self.or_(a, b), self.not_(self.and_(a, b)))

    def threshold(self, inputs: Sequence[int], weights: Sequence[int], theta: int) -> int:
        return self._add(Gate(THRESHOLD, inputs=tuple(inputs),
                              weights=tuple(weights), theta=theta))

    def balanced_gate_tree(self, op: str, idxs: Sequence[int]) -> int:
        """Reduce idxs with fanin-2 op gates, pairing round by round (depth ceil(log2 m))."""
        layer = list(idxs)
        add = self.and_ if op == AND else self.or_
        while len(layer) > 1:
            nxt = [add(layer[j], layer[j + 1]) for j in range(0, len(layer) - 1, 2)]
            if len(layer) % 2:
                nxt.append(layer[-1])
            layer = nxt
        return layer[0]

    def build(self, output: int) -> Circuit:
        c = Circuit(gates=tuple(self.gates), output=output, n_inputs=self.n_inputs)
        c.validate()
        return c


def _maj3_gadget(b: _Builder, a1: int, a2: int, a3: int) -> int:
    # (a&b) | (a&c) | (b&c): 3 ANDs then an OR chain of depth 2.
    ab = b.and_(a1, a2)
    ac = b.and_(a1, a3)
    bc = b.and_(a2, a3)
    return b.or_(b.or_(ab, ac), bc)


def _ripple_add(b: _Builder, xs: list[int], ys: list[int]) -> list[int]:
    """Add two little-endian binary numbers held in gate wires."""
    if len(xs) < len(ys):
        xs, ys = ys, xs
    out: list[int] = []
    carry: int | None = None
    for i in range(len(xs)):
        x = xs[i]
        y = ys[i] if i < len(ys) else None
        if y is None and carry is None:
            out.append(x)
        elif y is None:
            out.append(b.xor(x, carry))
            carry = b.and_(x, carry)
        else:
            s = b.xor(x, y)
            c1 = b.and_(x, y)
            if carry is None:
                out.append(s)
                carry = c1
            else:
                out.append(b.xor(s, carry))
                carry = b.or_(c1, b.and_(s, carry))
    if carry is not None:
        out.append(carry)
    return out


def _sum_bits(b: _Builder, bits: list[int]) -> list[int]:
    """Binary (little-endian) population count of the given wires, fanin-2 gates only."""
    if len(bits) == 1:
        return [bits[0]]
    mid = len(bits) // 2
    return _ripple_add(b, _sum_bits(b, bits[:mid]), _sum_bits(b, bits[mid:]))


def _ge_const(b: _Builder, num: list[int], theta: int) -> int:
    """Wire computing (little-endian binary number) >= theta for constant theta."""
    if theta <= 0:
        return b.const(1)
    if theta >= 1 << len(num):
        return b.const(0)
    # MSB-first scan maintaining gt ("already greater") and eq ("equal so far");
    # None stands for the constant the wire would start at (gt=0, eq=1).
    gt: int | None = None
    eq: int | None = None
    for pos in range(len(num) - 1, -1, -1):
        x = num[pos]
        t_bit = (theta >> pos) & 1
        if t_bit:
            eq = x if eq is None else b.and_(eq, x)
        else:
            step = x if eq is None else b.and_(eq, x)
            gt = step if gt is None else b.or_(gt, step)
            neg = b.not_(x)
            eq = neg if eq is None else b.and_(eq, neg)
    if gt is None:
        return eq  # theta is all-ones over num's width
    return b.or_(gt, eq)


def _compile_maj_general(b: _Builder, kids: list[int], theta: int) -> int:
    return _ge_const(b, _sum_bits(b, kids), theta)


def compile_tree_to_bounded_fanin(tree: PrereqTree) -> Circuit:
    """Compile to an equivalent AND/OR/NOT circuit with fanin <= 2 everywhere."""
    b = _Builder(tree.n_slots)

    def emit(node: int) -> int:
        kind = tree.kinds[node]
        if kind == KIND_SLOT:
            return tree.slots[node]  # INPUT gate i holds slot i
        if kind == KIND_CONST:
            return b.const(tree.consts[node])
        rule = tree.rules[node]
        kids = [emit(c) for c in tree.children[node]]
        if rule.kind == MAJ:
            if rule.k == 3:
                return _maj3_gadget(b, *kids)
            return _compile_maj_general(b, kids, rule.threshold(len(kids)))
        if rule.kind in (ALL, ANY):
            return b.balanced_gate_tree(AND if rule.kind == ALL else OR, kids)
        raise ValueError(f"unsupported rule kind {rule.kind!r}")

    return b.build(emit(tree.root))


def bounded_fanin_gadget_depth(rule: NodeRule, fanin: int) -> int:
    """Depth added per tree node of this rule/fanin in the bounded-fanin compile."""
    b = _Builder(fanin)
    wires = list(range(fanin))
    if rule.kind == MAJ:
        if rule.k == 3:
            out = _maj3_gadget(b, *wires)
        else:
            out = _compile_maj_general(b, wires, rule.threshold(fanin))
    else:
        out = b.balanced_gate_tree(AND if rule.kind == ALL else OR, wires)
    return circuit_metrics(b.build(out)).depth


def compile_tree_to_threshold(tree: PrereqTree) -> Circuit:
    """Compile to a monotone threshold circuit, one gate per internal node."""
    b = _Builder(tree.n_slots)

    def emit(node: int) -> int:
        kind = tree.kinds[node]
        if kind == KIND_SLOT:
            return tree.slots[node]
        if kind == KIND_CONST:
            return b.const(tree.consts[node])
        rule = tree.rules[node]
        kids = [emit(c) for c in tree.children[node]]
        theta = rule.threshold(len(kids))
        return b.threshold(kids, [1] * len(kids), theta)

    return b.build(emit(tree.root))


def build_alternating_formula(t: int, branching: Sequence[int], root_kind: str) -> PrereqTree:
    """Depth-t read-once alternating AND/OR tree with per-level fanins.

    Level i (root = level 0) has fanin branching[i]; gate kinds alternate
    starting from root_kind; the prod(branching) leaves read distinct slots.
    """
    if not branching:
        raise ValueError("branching list must be non-empty")
    if len(branching) != t:
        raise ValueError(f"branching list length {len(branching)} != t={t}")
    if t < 1:
        raise ValueError("t must be >= 1")
    for f in branching:
        if not isinstance(f, int) or f < 2:
            raise ValueError("every fanin must be an integer >= 2")
    alt = Alternation(root_kind)
    rules = [alt.rule_at_depth(i) for i in range(t)]
    spec = {"kind": "ALT", "root": root_kind, "branching": list(branching)}
    return build_tree_by_levels(list(branching), rules, rule_spec=spec)


def uniform_branching(n: int, t: int) -> list[int]:
    """Default per-level fanin ceil(n ** (1/t)), uniform across levels."""
    f = 2
    while f ** t < n:
        f += 1
    return [f] * t


def rewrite_andor_to_maj3(tree: PrereqTree) -> PrereqTree:
    """Rewrite an AND/OR tree into a pure ternary-majority tree.

    Internal fanins above 2 are first expanded into balanced fanin-2
    subtrees of the same kind; each binary AND then becomes MAJ(3) over its
    operands and a constant-0 leaf, each binary OR a MAJ(3) with a
    constant-1 leaf.  Input slot numbering is preserved and the result
    agrees with the original tree on every assignment.
    """
    for i in range(tree.n_nodes):
        if tree.kinds[i] == KIND_INTERNAL:
            rule = tree.rules[i]
            if rule.kind == MAJ:
                raise ValueError("tree already contains MAJ nodes")
            if len(tree.children[i]) < 2:
                raise ValueError(f"internal node {i} has fanin < 2")

    maj3 = maj(3)

    def pair(kind: str, specs: list):
        if len(specs) == 1:
            return specs[0]
        mid = (len(specs) + 1) // 2
        a = pair(kind, specs[:mid])
        b2 = pair(kind, specs[mid:])
        third = (KIND_CONST, 0 if kind == ALL else 1)
        return (maj3, [a, b2, third])

    def convert(node: int):
        kind = tree.kinds[node]
        if kind == KIND_SLOT:
            return (KIND_SLOT, tree.slots[node])
        if kind == KIND_CONST:
            return (KIND_CONST, tree.consts[node])
        return pair(tree.rules[node].kind, [convert(c) for c in tree.children[node]])

    spec = {"kind": "MAJ3_REWRITE", "source": tree.rule_spec}
    return PrereqTree.from_nested(convert(tree.root), rule_spec=spec)


# -- JSON serialization -----------------------------------------------------


def circuit_to_json(c: Circuit) -> dict:
    gates = []
    for i, g in enumerate(c.gates):
        doc: dict = {"id": i, "kind": g.kind}
        if g.kind == INPUT:
            doc["slot"] = g.slot
        elif g.kind == CONST:
            doc["bit"] = g.bit
        else:
            doc["inputs"] = list(g.inputs)
            if g.kind == THRESHOLD:
                doc["weights"] = list(g.weights)
                doc["theta"] = g.theta
        gates.append(doc)
    m = circuit_metrics(c)
    return {
        "n_inputs": c.n_inputs,
        "output": c.output,
        "gates": gates,
        "metrics": {"depth": m.depth, "size": m.size},  # informational; recomputed on load
    }


def circuit_from_json(doc: dict) -> Circuit:
    gates = []
    for gd in sorted(doc["gates"], key=lambda g: g["id"]):
        gates.append(Gate(
            kind=gd["kind"],
            inputs=tuple(gd.get("inputs", ())),
            slot=gd.get("slot"),
            bit=gd.get("bit"),
            weights=tuple(gd["weights"]) if "weights" in gd else None,
            theta=gd.get("theta"),
        ))
    c = Circuit(gates=tuple(gates), output=doc["output"], n_inputs=doc["n_inputs"])
    c.validate()
    return c


def circuit_to_json_str(c: Circuit) -> str:
    return json.dumps(circuit_to_json(c), sort_keys=True, separators=(",", ":"))
