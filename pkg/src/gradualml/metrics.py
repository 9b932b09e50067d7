"""Multi-label evaluation: per-category and micro P/R/F1, macro-F1, and
strict (all-categories-correct) per-instance accuracy.

Positives are label-1 decisions. F1 is 0 when precision + recall is 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from gradualml.errors import InputError
from gradualml.jsonl import read_records


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class MetricsReport:
    per_category: dict
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_f1: float
    strict_accuracy: float

    def to_dict(self) -> dict:
        return {
            "per_category": {
                cat: {"precision": p, "recall": r, "f1": f}
                for cat, (p, r, f) in sorted(self.per_category.items())
            },
            "micro": {
                "precision": self.micro_precision,
                "recall": self.micro_recall,
                "f1": self.micro_f1,
            },
            "macro_f1": self.macro_f1,
            "strict_accuracy": self.strict_accuracy,
        }


def evaluate(predictions: Mapping, gold: Mapping) -> MetricsReport:
    """Score predictions against gold over identical (instance, category)
    coverage; any asymmetry is an input error listing the missing pairs."""
    pred_keys = set(predictions)
    gold_keys = set(gold)
    if pred_keys != gold_keys:
        missing = sorted(gold_keys - pred_keys)
        extra = sorted(pred_keys - gold_keys)
        parts = []
        if missing:
            parts.append(f"{len(missing)} gold pairs missing from predictions: {missing[:10]}")
        if extra:
            parts.append(f"{len(extra)} predicted pairs missing from gold: {extra[:10]}")
        raise InputError("coverage mismatch: " + "; ".join(parts))
    if not gold_keys:
        raise InputError("nothing to evaluate")

    counts: dict[str, list[int]] = {}  # category -> [tp, fp, fn]
    correct_by_instance: dict[str, bool] = {}
    for key in gold_keys:
        iid, cat = key
        y = int(gold[key])
        yhat = int(predictions[key])
        tp_fp_fn = counts.setdefault(cat, [0, 0, 0])
        if yhat == 1 and y == 1:
            tp_fp_fn[0] += 1
        elif yhat == 1 and y == 0:
            tp_fp_fn[1] += 1
        elif yhat == 0 and y == 1:
            tp_fp_fn[2] += 1
        correct_by_instance[iid] = correct_by_instance.get(iid, True) and (yhat == y)

    per_category = {cat: _prf(*c) for cat, c in counts.items()}
    tp = sum(c[0] for c in counts.values())
    fp = sum(c[1] for c in counts.values())
    fn = sum(c[2] for c in counts.values())
    micro_p, micro_r, micro_f1 = _prf(tp, fp, fn)
    macro_f1 = sum(f for (_, _, f) in per_category.values()) / len(per_category)
    strict = sum(correct_by_instance.values()) / len(correct_by_instance)
    return MetricsReport(per_category, micro_p, micro_r, micro_f1, macro_f1, strict)


def load_gold(path: str | Path) -> dict:
    gold = {}
    for lineno, rec in read_records(path):
        try:
            key = (str(rec["id"]), str(rec["category"]))
            label = int(rec["label"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}:{lineno}: bad gold record: {exc}") from exc
        if label not in (0, 1):
            raise InputError(f"{path}:{lineno}: label must be 0 or 1")
        if key in gold:
            raise InputError(f"{path}:{lineno}: duplicate gold pair {key}")
        gold[key] = label
    return gold


def load_predictions(path: str | Path) -> dict:
    """Prediction labels keyed by (instance id, category)."""
    preds = {}
    for lineno, rec in read_records(path):
        try:
            key = (str(rec["id"]), str(rec["category"]))
            label = int(rec["label"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}:{lineno}: bad prediction record: {exc}") from exc
        if key in preds:
            raise InputError(f"{path}:{lineno}: duplicate prediction for {key}")
        preds[key] = label
    return preds
