"""Command-line entry point.

Subcommands: gen-data, stats, diagnose, verify, compile-circuit.  All
commands are deterministic given their flags (seeds are explicit).  Exit
codes: 0 ok, 1 verification/data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, circuits, diagnostics, trees, verify
from .datasets import DatasetConfig, generate_split


def _parse_depths(spec: str) -> list[int]:
    """'4' -> [4]; '3..6' -> [3, 4, 5, 6]."""
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty depth range {spec!r}")
        return list(range(lo, hi + 1))
    return [int(spec)]


def _rule_from_name(name: str, k: int) -> trees.RuleSpec:
    name = name.lower()
    if name == "maj":
        return trees.maj(k)
    if name == "all":
        return trees.ALL_RULE
    if name == "any":
        return trees.ANY_RULE
    if name == "alt-all":
        return trees.Alternation(trees.ALL)
    if name == "alt-any":
        return trees.Alternation(trees.ANY)
    raise argparse.ArgumentTypeError(f"unknown rule {name!r}")


def cmd_gen_data(args) -> int:
    cfg = DatasetConfig(
        depth=args.depth, k=args.k, p=args.p,
        train=args.train, val=args.val, test=args.test,
        seed=args.seed, encoding=args.encoding, permuted=args.permuted,
    )
    manifest = generate_split(cfg, args.out)
    for split, info in manifest["splits"].items():
        print(f"wrote {split}: {info['count']} examples -> {Path(args.out) / info['file']}")
    print(f"manifest: {Path(args.out) / 'manifest.json'} (config hash {manifest['config_hash']})")
    return 0


def cmd_stats(args) -> int:
    rows = []
    for d in args.depth:
        dist = analysis.joint_sum_value_distribution(args.k, d, args.p)
        rows.append({
            "depth": d,
            "n": args.k ** d,
            "bayes_sum_accuracy": analysis.bayes_sum_accuracy(dist),
            "permuted_oracle_score": analysis.permuted_oracle_score(dist),
            "majority_class_accuracy": analysis.majority_class_accuracy(dist),
        })
    if args.json:
        print(json.dumps({"k": args.k, "p": args.p, "rows": rows}, indent=2, sort_keys=True))
        return 0
    print(f"k={args.k} p={args.p}")
    print(f"{'depth':>5} {'n':>6} {'bayes_sum':>10} {'perm_oracle':>12} {'majority':>9}")
    for r in rows:
        print(f"{r['depth']:>5} {r['n']:>6} {r['bayes_sum_accuracy']:>10.6f} "
              f"{r['permuted_oracle_score']:>12.6f} {r['majority_class_accuracy']:>9.6f}")
    return 0


def cmd_diagnose(args) -> int:
    try:
        report = diagnostics.diagnose(args.dataset, args.predictions,
                                      args.permuted_dataset, args.permuted_predictions)
    except (ValueError, OSError, KeyError) as exc:
        print(f"diagnose failed: {exc}", file=sys.stderr)
        return 1
    if args.json:
        print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    else:
        print(diagnostics.format_report(report))
    return 0


def cmd_verify(args) -> int:
    results = []
    if args.dataset:
        results.extend(verify.audit_dataset(args.dataset))
    if args.suite == "small-exhaustive" or not args.dataset:
        results.extend(verify.run_small_exhaustive())
    failed = 0
    for r in results:
        status = "ok" if r.ok else "FAIL"
        detail = f" ({r.detail})" if r.detail else ""
        print(f"[{status}] {r.name}{detail}")
        failed += 0 if r.ok else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def cmd_compile_circuit(args) -> int:
    rule = _rule_from_name(args.rule, args.k)
    tree = trees.build_balanced_tree(args.k, args.depth, rule)
    if args.target == "bounded-fanin":
        circ = circuits.compile_tree_to_bounded_fanin(tree)
    else:
        circ = circuits.compile_tree_to_threshold(tree)
    m = circuits.circuit_metrics(circ)
    line = (f"target={args.target} k={args.k} tree_depth={args.depth} "
            f"circuit_depth={m.depth} size={m.size}")
    if args.check_monotone:
        rep = circuits.check_monotone(circ)
        line += f" monotone={'true' if rep.monotone else 'false'}"
        if not rep.monotone:
            line += f" (gate {rep.gate}: {rep.reason})"
    print(line)
    doc = circuits.circuit_to_json(circ)
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"wrote circuit JSON -> {args.out}")
    else:
        print(json.dumps(doc, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prereqkt",
        description="Prerequisite-tree knowledge tracing toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate seeded train/val/test JSONL splits")
    g.add_argument("--depth", type=int, required=True)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--p", type=float, default=0.5)
    g.add_argument("--train", type=int, default=20000)
    g.add_argument("--val", type=int, default=5000)
    g.add_argument("--test", type=int, default=5000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--encoding", choices=("flat", "scaffold"), default="flat")
    g.add_argument("--permuted", action="store_true",
                   help="also write test_permuted.jsonl from the same test examples")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("stats", help="exact analytical ceilings per depth")
    s.add_argument("--depth", type=_parse_depths, required=True,
                   help="single depth '4' or range '3..6'")
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_stats)

    d = sub.add_parser("diagnose", help="score a prediction file against a dataset")
    d.add_argument("--dataset", required=True)
    d.add_argument("--predictions", required=True)
    d.add_argument("--permuted-dataset")
    d.add_argument("--permuted-predictions")
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=cmd_diagnose)

    v = sub.add_parser("verify", help="run exhaustive equivalence suites / dataset audits")
    v.add_argument("--suite", choices=("small-exhaustive",), default=None)
    v.add_argument("--dataset", help="dataset directory to re-label (expects manifest.json)")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compile-circuit", help="compile a balanced tree to a circuit")
    c.add_argument("--k", type=int, default=3)
    c.add_argument("--depth", type=int, required=True)
    c.add_argument("--rule", default="maj",
                   help="maj | all | any | alt-all | alt-any")
    c.add_argument("--target", choices=("bounded-fanin", "threshold"), required=True)
    c.add_argument("--check-monotone", action="store_true")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compile_circuit)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
