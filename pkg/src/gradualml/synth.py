"""Synthetic workloads with planted labels and noise-controlled relations.

The generator plants i.i.d. 0/1 labels per (instance, category), then
emits relations whose polarity agrees with the planted labels with a
per-group probability (``precision``). That makes the consistency rate of
each group a controlled quantity, so recovered factor weights and
inference accuracy have predictable values. It also emits 2-D embeddings
where the two label classes of each category cluster around distinct
centroids, so KNN extraction can run on the same workload.

Everything is drawn from one seeded generator in a fixed order: byte-
identical outputs for identical specs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from gradualml.errors import InputError
from gradualml.graph import InstanceRecord
from gradualml.jsonl import read_json, write_records
from gradualml.relations import EmbeddingRecord, Polarity, RelationRecord

_NOISE_SIGMA = 0.08  # keeps within-class cosine ~> 0.95, cross-class ~< 0.3


@dataclass
class SynthSpec:
    """Workload shape and noise regime.

    precision maps each relation group to P(emitted polarity consistent
    with the planted labels); it must exceed 0.5 so relations carry
    signal. degree is the average number of relations drawn per (test
    variable, group). opposite_share is the share of partner draws aimed
    at differing-label instances, which controls the similar/opposite mix.
    """

    n_train: int
    n_test: int
    categories: list[str]
    positive_rate: float | Mapping[str, float] = 0.3
    degree: float = 5.0
    precision: Mapping[str, float] = field(default_factory=lambda: {"bert": 0.9})
    opposite_share: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise InputError("n_train and n_test must be >= 1")
        if not self.categories or len(set(self.categories)) != len(self.categories):
            raise InputError("categories must be non-empty and unique")
        for cat in self.categories:
            rate = self.rate_for(cat)
            if not (0.0 < rate < 1.0):
                raise InputError(f"positive_rate for {cat!r} must be in (0, 1)")
        if self.degree < 0:
            raise InputError("degree must be >= 0")
        if not self.precision:
            raise InputError("precision must name at least one relation group")
        for group, prec in self.precision.items():
            if not (0.5 < prec <= 1.0):
                raise InputError(
                    f"precision for group {group!r} must be in (0.5, 1], got {prec}"
                )
        if not (0.0 <= self.opposite_share <= 1.0):
            raise InputError("opposite_share must be in [0, 1]")

    def rate_for(self, category: str) -> float:
        if isinstance(self.positive_rate, Mapping):
            if category not in self.positive_rate:
                raise InputError(f"positive_rate missing category {category!r}")
            return float(self.positive_rate[category])
        return float(self.positive_rate)

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        allowed = {
            "n_train",
            "n_test",
            "categories",
            "positive_rate",
            "degree",
            "precision",
            "opposite_share",
            "seed",
        }
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise InputError(f"unknown synth spec keys: {unknown}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "SynthSpec":
        data = read_json(path)
        if not isinstance(data, dict):
            raise InputError(f"{path}: synth spec must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        rate = self.positive_rate
        return {
            "n_train": self.n_train,
            "n_test": self.n_test,
            "categories": list(self.categories),
            "positive_rate": dict(rate) if isinstance(rate, Mapping) else rate,
            "degree": self.degree,
            "precision": dict(self.precision),
            "opposite_share": self.opposite_share,
            "seed": self.seed,
        }


@dataclass
class SynthOutput:
    instances: list[InstanceRecord]
    categories: list[str]
    gold: dict  # (instance id, category) -> planted label, test split only
    relations: list[RelationRecord]
    embeddings: list[EmbeddingRecord]

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        """Write the four workload files; returns their paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "instances": out / "instances.jsonl",
            "gold": out / "gold.jsonl",
            "relations": out / "relations.jsonl",
            "embeddings": out / "embeddings.jsonl",
        }
        rows = []
        for rec in self.instances:
            row = {"id": rec.id, "split": rec.split}
            if rec.labels is not None:
                row["labels"] = rec.labels
            rows.append(row)
        write_records(paths["instances"], rows)
        write_records(
            paths["gold"],
            [
                {"id": iid, "category": cat, "label": int(label)}
                for (iid, cat), label in sorted(self.gold.items())
            ],
        )
        write_records(paths["relations"], [r.to_json() for r in self.relations])
        write_records(
            paths["embeddings"],
            [
                {
                    "id": e.instance,
                    "category": e.category,
                    "vector": [float(x) for x in e.vector],
                }
                for e in self.embeddings
            ],
        )
        return paths


def generate(spec: SynthSpec) -> SynthOutput:
    """Draw a full workload from the spec's seed."""
    rng = np.random.default_rng(spec.seed)
    n_total = spec.n_train + spec.n_test
    width = max(4, len(str(n_total)))
    ids = [f"train-{i:0{width}d}" for i in range(spec.n_train)] + [
        f"test-{i:0{width}d}" for i in range(spec.n_test)
    ]
    cats = list(spec.categories)

    # Planted labels, one column per category in spec order.
    labels = np.empty((n_total, len(cats)), dtype=np.int8)
    for ci, cat in enumerate(cats):
        labels[:, ci] = rng.random(n_total) < spec.rate_for(cat)

    # Embeddings: distinct per-class centroids plus Gaussian noise.
    embeddings: list[EmbeddingRecord] = []
    for ci, cat in enumerate(cats):
        noise = rng.normal(0.0, _NOISE_SIGMA, size=(n_total, 2))
        base = np.where(labels[:, ci, None] == 1, (1.0, 0.0), (0.0, 1.0))
        pts = base + noise
        for ii, iid in enumerate(ids):
            embeddings.append(
                EmbeddingRecord(iid, cat, (float(pts[ii, 0]), float(pts[ii, 1])))
            )

    # Relations, per group in sorted order for a stable draw sequence.
    relations: list[RelationRecord] = []
    seen_pairs: set[tuple] = set()
    frac, base_count = math.modf(spec.degree)
    all_idx = np.arange(n_total)
    for group in sorted(spec.precision):
        prec = float(spec.precision[group])
        for ti in range(spec.n_train, n_total):
            for ci, cat in enumerate(cats):
                count = int(base_count) + (1 if rng.random() < frac else 0)
                for _ in range(count):
                    want_opposite = rng.random() < spec.opposite_share
                    same = labels[:, ci] == labels[ti, ci]
                    same[ti] = False  # no self-relations
                    pool = all_idx[~same & (all_idx != ti)] if want_opposite else all_idx[same]
                    if len(pool) == 0:
                        pool = all_idx[all_idx != ti]
                    partner = int(pool[rng.integers(len(pool))])
                    pair = (min(ti, partner), max(ti, partner), ci, group)
                    if pair in seen_pairs:
                        continue
                    seen_pairs.add(pair)
                    equal = labels[ti, ci] == labels[partner, ci]
                    consistent = Polarity.SIMILAR if equal else Polarity.OPPOSITE
                    inconsistent = Polarity.OPPOSITE if equal else Polarity.SIMILAR
                    polarity = consistent if rng.random() < prec else inconsistent
                    relations.append(
                        RelationRecord(
                            a=ids[pair[0]],
                            b=ids[pair[1]],
                            category=cat,
                            polarity=polarity,
                            group=group,
                        )
                    )

    instances = []
    for ii, iid in enumerate(ids):
        if ii < spec.n_train:
            instances.append(
                InstanceRecord(
                    iid,
                    "train",
                    {cat: int(labels[ii, ci]) for ci, cat in enumerate(cats)},
                )
            )
        else:
            instances.append(InstanceRecord(iid, "test"))
    gold = {
        (ids[ii], cat): int(labels[ii, ci])
        for ii in range(spec.n_train, n_total)
        for ci, cat in enumerate(cats)
    }
    return SynthOutput(instances, cats, gold, relations, embeddings)


def oracle_accuracy(gold: Mapping, predictions: Mapping) -> float:
    """Fraction of (instance, category) decisions matching the gold labels."""
    gold_keys = set(gold)
    pred_keys = set(predictions)
    if gold_keys != pred_keys:
        missing = sorted(gold_keys - pred_keys)[:5]
        extra = sorted(pred_keys - gold_keys)[:5]
        raise InputError(
            f"prediction/gold id sets differ (missing {missing}, extra {extra})"
        )
    if not gold_keys:
        raise InputError("empty gold set")
    hits = sum(1 for k in gold_keys if int(gold[k]) == int(predictions[k]))
    return hits / len(gold_keys)
