"""Seeded dataset generation for the recursive-majority task.

Two token encodings of an example's leaf bits:

* flat: one "0"/"1" token per leaf, in slot order (any [CLS]-style special
  token is the consumer's business, not stored here);
* scaffold: the same left-to-right leaf stream with a level-tagged
  separator "]_L" emitted every time a height-L subtree closes, so three
  height-L closures are immediately followed by one "]_{L+1}" and the
  sequence ends with "]_d".  Each separator carries an auxiliary label: the
  evaluation value of the subtree that just closed.  A depth-d ternary tree
  has (3**d - 1) // 2 separators, one per internal node.

Separator levels count height above the leaves (1..d); tree node depths
count down from the root at 0, so a "]_L" closes a node at depth d - L.
Aux "pos" indexes the tokens array, 0-based, before any special-token
prepending by downstream consumers.

Splits are written as JSON lines, one example per line:

  {"id": int, "leaves": [0,1,...], "label": 0|1, "tokens": ["0","1","]_1",...],
   "aux": [{"pos": int, "level": int, "value": 0|1}, ...] | null,
   "perm": [int, ...] | null}

with a manifest.json alongside (config echo + hash, per-split counts and
label means).  Example i of a split draws its bits from a dedicated
generator seeded by the first 8 bytes of
SHA-256("{seed}:{split}:{i}") — a pure function of (seed, split, i), so the
output is byte-identical however generation is scheduled.  Permuted test
files reuse the same ids and original labels ("test~perm" in the sub-seed
tag) so accuracy drops can be computed pairwise.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .trees import EvalTrace, PrereqTree, build_balanced_tree, evaluate_batch, maj

LEAF_TOKENS = ("0", "1")


@dataclass(frozen=True)
class AuxLabel:
    pos: int
    level: int
    value: int


@dataclass(frozen=True)
class Example:
    example_id: int
    leaves: tuple[int, ...]
    label: int
    tokens: tuple[str, ...] | None = None
    aux: tuple[AuxLabel, ...] | None = None
    perm: tuple[int, ...] | None = None


@dataclass(frozen=True)
class DatasetConfig:
    depth: int
    k: int = 3
    p: float = 0.5
    train: int = 20000
    val: int = 5000
    test: int = 5000
    seed: int = 0
    encoding: str = "flat"
    permuted: bool = False

    def __post_init__(self):
        if self.encoding not in ("flat", "scaffold"):
            raise ValueError(f"unknown encoding {self.encoding!r}")
        if min(self.train, self.val, self.test) < 0:
            raise ValueError("split sizes must be >= 0")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")

    def as_dict(self) -> dict:
        return {
            "depth": self.depth, "k": self.k, "p": self.p,
            "sizes": {"train": self.train, "val": self.val, "test": self.test},
            "seed": self.seed, "encoding": self.encoding, "permuted": self.permuted,
        }


def separator_count(k: int, d: int) -> int:
    """Number of separators in a depth-d scaffold = number of internal nodes."""
    return (k ** d - 1) // (k - 1)


def encode_flat(x: Sequence[int]) -> tuple[str, ...]:
    """One token per leaf bit, in slot order."""
    return tuple(LEAF_TOKENS[b] for b in x)


def encode_scaffold(x: Sequence[int], trace: EvalTrace, d: int,
                    k: int = 3) -> tuple[tuple[str, ...], tuple[AuxLabel, ...]]:
    """Leaf tokens interleaved with subtree-closure separators, plus aux labels.

    Walks leaves left to right; after the i-th leaf, the height-L subtree
    ending there closes iff i is a multiple of k**L, and its separator's aux
    value is the trace value of the corresponding internal node (level-order
    node id arithmetic: nodes of depth dd start at (k**dd - 1)//(k-1)).
    """
    n = k ** d
    if len(x) != n:
        raise ValueError(f"assignment length {len(x)} != k**d = {n}")
    if trace.values.shape[0] != (k ** (d + 1) - 1) // (k - 1):
        raise ValueError("trace does not match a balanced tree of this k and d")
    tokens: list[str] = []
    aux: list[AuxLabel] = []
    for i in range(1, n + 1):
        tokens.append(LEAF_TOKENS[x[i - 1]])
        block = k
        for level in range(1, d + 1):
            if i % block:
                break
            node_depth = d - level
            first = (k ** node_depth - 1) // (k - 1)
            node = first + i // block - 1
            aux.append(AuxLabel(pos=len(tokens), level=level,
                                value=int(trace.values[node])))
            tokens.append(f"]_{level}")
            block *= k
    return tuple(tokens), tuple(aux)


def decode_flat(tokens: Sequence[str]) -> tuple[int, ...]:
    return tuple(LEAF_TOKENS.index(t) for t in tokens)


def decode_scaffold(tokens: Sequence[str]) -> tuple[int, ...]:
    """Strip separators; the remaining tokens are the leaves in slot order."""
    return tuple(LEAF_TOKENS.index(t) for t in tokens if t in LEAF_TOKENS)


def _rng_from_tag(tag: str) -> np.random.Generator:
    digest = hashlib.sha256(tag.encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def example_seed_tag(seed: int, split: str, index: int) -> str:
    """Sub-seed tag for example ``index`` of a split; documented contract."""
    return f"{seed}:{split}:{index}"


def permute_leaves(e: Example, seed: int) -> Example:
    """Uniformly permute the leaf values, keeping the original label (and aux).

    ``perm`` records the draw: new_leaves[i] = old_leaves[perm[i]].  For
    scaffold examples only leaf tokens move; separators stay in place.
    """
    rng = np.random.default_rng(seed)
    n = len(e.leaves)
    perm = rng.permutation(n)
    new_leaves = tuple(e.leaves[j] for j in perm)
    tokens = e.tokens
    if tokens is not None:
        out = list(tokens)
        leaf_positions = [i for i, t in enumerate(tokens) if t in LEAF_TOKENS]
        for pos, bit in zip(leaf_positions, new_leaves):
            out[pos] = LEAF_TOKENS[bit]
        tokens = tuple(out)
    return Example(
        example_id=e.example_id,
        leaves=new_leaves,
        label=e.label,
        tokens=tokens,
        aux=e.aux,
        perm=tuple(int(j) for j in perm),
    )


# -- JSONL records -----------------------------------------------------------


def example_to_record(e: Example) -> dict:
    return {
        "id": e.example_id,
        "leaves": list(e.leaves),
        "label": e.label,
        "tokens": list(e.tokens) if e.tokens is not None else None,
        "aux": [{"pos": a.pos, "level": a.level, "value": a.value} for a in e.aux]
               if e.aux is not None else None,
        "perm": list(e.perm) if e.perm is not None else None,
    }


def record_to_example(rec: dict) -> Example:
    aux = rec.get("aux")
    return Example(
        example_id=rec["id"],
        leaves=tuple(rec["leaves"]),
        label=rec["label"],
        tokens=tuple(rec["tokens"]) if rec.get("tokens") is not None else None,
        aux=tuple(AuxLabel(a["pos"], a["level"], a["value"]) for a in aux)
            if aux is not None else None,
        perm=tuple(rec["perm"]) if rec.get("perm") is not None else None,
    )


def write_jsonl(path: Path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def read_jsonl(path: Path) -> Iterator[dict]:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


# -- split generation --------------------------------------------------------

_EVAL_CHUNK = 4096


def _draw_split(cfg: DatasetConfig, tree: PrereqTree, split: str, count: int) -> Iterator[Example]:
    n = cfg.k ** cfg.depth
    start = 0
    while start < count:
        stop = min(start + _EVAL_CHUNK, count)
        X = np.empty((stop - start, n), dtype=np.uint8)
        for i in range(start, stop):
            rng = _rng_from_tag(example_seed_tag(cfg.seed, split, i))
            X[i - start] = rng.random(n) < cfg.p
        values = evaluate_batch(tree, X)
        for i in range(start, stop):
            row = X[i - start]
            leaves = tuple(int(b) for b in row)
            trace = EvalTrace(values=values[i - start])
            if cfg.encoding == "scaffold":
                tokens, aux = encode_scaffold(leaves, trace, cfg.depth, cfg.k)
            else:
                tokens, aux = encode_flat(leaves), None
            yield Example(example_id=i, leaves=leaves, label=trace.root_value,
                          tokens=tokens, aux=aux)
        start = stop


def config_hash(cfg: DatasetConfig) -> str:
    canon = json.dumps(cfg.as_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def generate_split(cfg: DatasetConfig, out_dir: str | Path) -> dict:
    """Write train/val/test JSONL files plus manifest.json; returns the manifest.

    Deterministic given the config: example i of each split derives its
    generator from example_seed_tag(seed, split, i), so reruns (and any
    generation parallelism) produce byte-identical files.  With
    cfg.permuted, test_permuted.jsonl is derived from the same test
    examples (same ids, original labels/aux, per-example permutation seeded
    by the "test~perm" tag).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tree = build_balanced_tree(cfg.k, cfg.depth, maj(cfg.k))

    manifest: dict = {
        "format_version": 1,
        "config": cfg.as_dict(),
        "config_hash": config_hash(cfg),
        "tree": {"k": cfg.k, "d": cfg.depth, "rule": "MAJ"},
        "splits": {},
    }
    for split, count in (("train", cfg.train), ("val", cfg.val), ("test", cfg.test)):
        path = out / f"{split}.jsonl"
        label_total = 0
        with open(path, "w") as fh:
            for e in _draw_split(cfg, tree, split, count):
                label_total += e.label
                fh.write(json.dumps(example_to_record(e), separators=(",", ":")) + "\n")
        manifest["splits"][split] = {
            "file": path.name,
            "count": count,
            "label_mean": label_total / count if count else None,
        }

    if cfg.permuted:
        path = out / "test_permuted.jsonl"
        label_total = 0
        with open(path, "w") as fh:
            for e in _draw_split(cfg, tree, "test", cfg.test):
                pe = permute_leaves(e, seed=_perm_seed(cfg.seed, e.example_id))
                label_total += pe.label
                fh.write(json.dumps(example_to_record(pe), separators=(",", ":")) + "\n")
        manifest["splits"]["test_permuted"] = {
            "file": path.name,
            "count": cfg.test,
            "label_mean": label_total / cfg.test if cfg.test else None,
        }

    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _perm_seed(seed: int, index: int) -> int:
    digest = hashlib.sha256(example_seed_tag(seed, "test~perm", index).encode()).digest()
    return int.from_bytes(digest[:8], "big")
