"""Scoring of model prediction files against generated datasets.

A prediction file is JSON lines whose first line is a header
{"depth": int, "encoding": "flat"|"scaffold", "model_tag": str} and whose
remaining lines are {"id": int, "pred_root": 0|1, "pred_aux": [0|1,...]|null}
with pred_aux aligned with the dataset's aux entries (same order).

The diagnose report pairs an original dataset+predictions with an optional
permuted dataset+predictions (same ids, original labels) and computes root
accuracy on both, the permutation drop, and separator accuracy both pooled
over all separator positions and broken down by level — the pooled number
is dominated by the many low-level separators, which is why the per-level
view is always included.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import datasets


@dataclass(frozen=True)
class PredictionHeader:
    depth: int
    encoding: str
    model_tag: str


def write_predictions(path: str | Path, header: PredictionHeader, records) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"depth": header.depth, "encoding": header.encoding,
                             "model_tag": header.model_tag}) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def read_predictions(path: str | Path) -> tuple[PredictionHeader, dict[int, dict]]:
    with open(path) as fh:
        lines = [ln for ln in (l.strip() for l in fh) if ln]
    if not lines:
        raise ValueError(f"empty prediction file {path}")
    head = json.loads(lines[0])
    if "model_tag" not in head or "id" in head:
        raise ValueError("first line must be the header {depth, encoding, model_tag}")
    header = PredictionHeader(depth=head["depth"], encoding=head["encoding"],
                              model_tag=head["model_tag"])
    records: dict[int, dict] = {}
    for ln in lines[1:]:
        rec = json.loads(ln)
        records[rec["id"]] = rec
    return header, records


@dataclass
class DiagnoseReport:
    model_tag: str
    n_examples: int
    root_acc: float
    root_acc_perm: float | None = None
    drop: float | None = None
    aux_acc: float | None = None
    aux_acc_per_level: dict[int, float] = field(default_factory=dict)
    aux_positions: int = 0

    def as_dict(self) -> dict:
        return {
            "model_tag": self.model_tag,
            "n_examples": self.n_examples,
            "root_acc": self.root_acc,
            "root_acc_perm": self.root_acc_perm,
            "drop": self.drop,
            "aux_acc": self.aux_acc,
            "aux_acc_per_level": {str(k): v for k, v in self.aux_acc_per_level.items()},
            "aux_positions": self.aux_positions,
        }


def _root_accuracy(dataset_path: Path, preds: dict[int, dict]) -> tuple[float, int]:
    hits = 0
    total = 0
    ids_seen = set()
    for rec in datasets.read_jsonl(dataset_path):
        ids_seen.add(rec["id"])
        if rec["id"] not in preds:
            raise ValueError(f"id mismatch: dataset id {rec['id']} missing from predictions")
        hits += int(preds[rec["id"]]["pred_root"] == rec["label"])
        total += 1
    extra = set(preds) - ids_seen
    if extra:
        raise ValueError(f"id mismatch: predictions contain unknown ids {sorted(extra)[:5]}")
    if total == 0:
        raise ValueError(f"empty dataset {dataset_path}")
    return hits / total, total


def _aux_accuracy(dataset_path: Path, preds: dict[int, dict]):
    pooled_hits = 0
    pooled_total = 0
    by_level_hits: dict[int, int] = {}
    by_level_total: dict[int, int] = {}
    has_aux = False
    for rec in datasets.read_jsonl(dataset_path):
        aux = rec.get("aux")
        if aux is None:
            continue
        has_aux = True
        pred_aux = preds[rec["id"]].get("pred_aux")
        if pred_aux is None:
            raise ValueError(f"dataset has aux labels but prediction id {rec['id']} "
                             f"has no pred_aux")
        if len(pred_aux) != len(aux):
            raise ValueError(f"id {rec['id']}: pred_aux length {len(pred_aux)} != "
                             f"separator count {len(aux)}")
        for a, p in zip(aux, pred_aux):
            hit = int(p == a["value"])
            pooled_hits += hit
            pooled_total += 1
            lvl = a["level"]
            by_level_hits[lvl] = by_level_hits.get(lvl, 0) + hit
            by_level_total[lvl] = by_level_total.get(lvl, 0) + 1
    if not has_aux:
        return None, {}, 0
    per_level = {lvl: by_level_hits[lvl] / by_level_total[lvl]
                 for lvl in sorted(by_level_total)}
    return pooled_hits / pooled_total, per_level, pooled_total


def diagnose(dataset: str | Path, predictions: str | Path,
             permuted_dataset: str | Path | None = None,
             permuted_predictions: str | Path | None = None) -> DiagnoseReport:
    """Score predictions against a dataset, optionally with its permuted twin."""
    if (permuted_dataset is None) != (permuted_predictions is None):
        raise ValueError("permuted dataset and permuted predictions go together")
    header, preds = read_predictions(predictions)
    root_acc, n = _root_accuracy(Path(dataset), preds)
    aux_acc, per_level, aux_positions = _aux_accuracy(Path(dataset), preds)

    report = DiagnoseReport(model_tag=header.model_tag, n_examples=n, root_acc=root_acc,
                            aux_acc=aux_acc, aux_acc_per_level=per_level,
                            aux_positions=aux_positions)
    if permuted_dataset is not None:
        _, perm_preds = read_predictions(permuted_predictions)
        # permuted files carry the original labels, so this scores
        # predictions-on-permuted-inputs against the unpermuted ground truth.
        perm_acc, n_perm = _root_accuracy(Path(permuted_dataset), perm_preds)
        if n_perm != n:
            raise ValueError(f"permuted split has {n_perm} examples, original has {n}")
        report.root_acc_perm = perm_acc
        report.drop = root_acc - perm_acc
    return report


def format_report(report: DiagnoseReport) -> str:
    lines = [
        f"model: {report.model_tag}",
        f"examples: {report.n_examples}",
        f"root accuracy (original): {100 * report.root_acc:.2f}%",
    ]
    if report.root_acc_perm is not None:
        lines.append(f"root accuracy (permuted): {100 * report.root_acc_perm:.2f}%")
        lines.append(f"permutation drop: {100 * report.drop:+.2f} points")
    if report.aux_acc is not None:
        lines.append(f"aux accuracy (all {report.aux_positions} separator positions): "
                     f"{100 * report.aux_acc:.2f}%")
        for lvl, acc in report.aux_acc_per_level.items():
            lines.append(f"  level {lvl}: {100 * acc:.2f}%")
    return "\n".join(lines)


def oracle_prediction_records(dataset_path: str | Path, tree) -> list[dict]:
    """Reference predictions from the true evaluator, for wiring checks.

    Evaluates each record's STORED leaves (so on a permuted split this is
    the 'true tree evaluator applied to permuted leaves' diagnostic) and
    emits aux predictions aligned with the record's aux entries.
    """
    from .trees import evaluate

    out = []
    for rec in datasets.read_jsonl(Path(dataset_path)):
        trace = evaluate(tree, rec["leaves"])
        pred: dict = {"id": rec["id"], "pred_root": trace.root_value, "pred_aux": None}
        if rec.get("aux") is not None:
            tokens, aux = datasets.encode_scaffold(
                tuple(rec["leaves"]), trace, tree.depth, tree.k)
            pred["pred_aux"] = [a.value for a in aux]
        out.append(pred)
    return out
