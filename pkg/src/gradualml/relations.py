"""Relation production: KNN extraction from category-specific embeddings,
ingestion of externally predicted relation files, and per-variable budget
sampling.

All functions here are pure over immutable inputs; extraction is an exact
scan (no ANN index) which is sufficient at the workload sizes this engine
targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from gradualml.errors import InputError
from gradualml.graph import FactorGraph, Polarity, Relation
from gradualml.jsonl import read_records, write_records

KNN_GROUP = "knn"


@dataclass(frozen=True)
class RelationRecord:
    """A relation in instance-id form, as stored in relation files."""

    a: str
    b: str
    category: str
    polarity: Polarity
    group: str
    confidence: float = 1.0

    def to_json(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "category": self.category,
            "polarity": self.polarity.value,
            "group": self.group,
            "confidence": float(self.confidence),
        }


@dataclass(frozen=True)
class EmbeddingRecord:
    instance: str
    category: str
    vector: tuple


@dataclass(frozen=True)
class KnnConfig:
    k: int = 3
    tau: float = 0.9

    def __post_init__(self):
        if self.k < 1:
            raise InputError("knn k must be >= 1")
        if not (0.0 < self.tau <= 1.0):
            raise InputError("knn tau must be in (0, 1]")


def load_embeddings(path: str | Path) -> list[EmbeddingRecord]:
    out = []
    for lineno, rec in read_records(path):
        try:
            vec = tuple(float(x) for x in rec["vector"])
            out.append(EmbeddingRecord(str(rec["id"]), str(rec["category"]), vec))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}:{lineno}: bad embedding record: {exc}") from exc
    return out


def write_embeddings(path: str | Path, embeddings: Sequence[EmbeddingRecord]) -> None:
    write_records(
        path,
        [
            {"id": e.instance, "category": e.category, "vector": [float(x) for x in e.vector]}
            for e in embeddings
        ],
    )


def _embedding_index(
    embeddings: Sequence[EmbeddingRecord],
) -> dict[str, dict[str, np.ndarray]]:
    """category -> instance -> vector, with dimension/nonzero validation."""
    by_cat: dict[str, dict[str, np.ndarray]] = {}
    for e in embeddings:
        cat = by_cat.setdefault(e.category, {})
        if e.instance in cat:
            raise InputError(
                f"duplicate embedding for instance {e.instance!r} category {e.category!r}"
            )
        vec = np.asarray(e.vector, dtype=np.float64)
        if vec.ndim != 1 or len(vec) < 2:
            raise InputError(
                f"embedding for {e.instance!r}/{e.category!r} must have dimension >= 2"
            )
        if not np.any(vec != 0.0):
            raise InputError(f"embedding for {e.instance!r}/{e.category!r} is all zeros")
        cat[e.instance] = vec
    for cat, vecs in by_cat.items():
        dims = {len(v) for v in vecs.values()}
        if len(dims) > 1:
            raise InputError(f"embedding dimension mismatch in category {cat!r}: {sorted(dims)}")
    return by_cat


def knn_extract(
    embeddings: Sequence[EmbeddingRecord],
    graph: FactorGraph,
    config: KnnConfig | None = None,
) -> list[Relation]:
    """Similar relations from each unlabeled variable to its k nearest
    train instances in the category's embedding space.

    Similarity is the cosine; only neighbors at or above ``tau`` are kept,
    and the cosine becomes the relation confidence. Ties break on
    ascending instance id. Output order: ascending unlabeled variable id.
    """
    cfg = config or KnnConfig()
    index = _embedding_index(embeddings)
    known = set(graph.instances)

    # Train-side matrices per category, rows ordered by instance id for
    # deterministic tie-breaking.
    train_side: dict[str, tuple[list[str], np.ndarray]] = {}

    out: list[Relation] = []
    for v in graph.unlabeled_ids():
        v = int(v)
        inst = graph.var_instance(v)
        cat = graph.var_category(v)
        cat_vecs = index.get(cat, {})
        if inst not in cat_vecs:
            raise InputError(
                f"missing embedding for test instance {inst!r} in category {cat!r}"
            )
        if cat not in train_side:
            ids = sorted(
                other
                for other in cat_vecs
                if other in known and graph.is_labeled(graph.var_id(other, cat))
            )
            if not ids:
                raise InputError(f"no train embeddings for category {cat!r}")
            mat = np.stack([cat_vecs[i] for i in ids])
            norms = np.linalg.norm(mat, axis=1)
            train_side[cat] = (ids, mat / norms[:, None])
        ids, unit = train_side[cat]
        vec = cat_vecs[inst]
        sims = unit @ (vec / np.linalg.norm(vec))
        order = np.argsort(-sims, kind="stable")  # ids pre-sorted: ties by id
        taken = 0
        for j in order:
            sim = float(sims[j])
            if sim < cfg.tau or taken >= cfg.k:
                break
            out.append(
                Relation(
                    a=v,
                    b=graph.var_id(ids[int(j)], cat),
                    polarity=Polarity.SIMILAR,
                    group=KNN_GROUP,
                    confidence=min(sim, 1.0),
                )
            )
            taken += 1
    return out


def resolve_records(
    records: Sequence[RelationRecord], graph: FactorGraph
) -> list[Relation]:
    """Map instance-id relation records onto graph variable ids."""
    out = []
    for rec in records:
        try:
            va = graph.var_id(rec.a, rec.category)
            vb = graph.var_id(rec.b, rec.category)
        except InputError as exc:
            raise InputError(f"relation {rec.to_json()}: {exc}") from exc
        out.append(Relation(va, vb, rec.polarity, rec.group, rec.confidence))
    return out


def load_relations(path: str | Path, graph: FactorGraph) -> list[Relation]:
    """Read and validate a relations file against a graph.

    Duplicate canonical tuples (endpoints, group, polarity) are an error
    naming both offending lines.
    """
    relations: list[Relation] = []
    seen: dict[tuple, int] = {}
    for lineno, rec in read_records(path):
        missing = [k for k in ("a", "b", "category", "polarity", "group") if k not in rec]
        if missing:
            raise InputError(f"{path}:{lineno}: missing fields {missing}")
        try:
            polarity = Polarity(rec["polarity"])
        except ValueError:
            raise InputError(
                f"{path}:{lineno}: polarity must be 'similar' or 'opposite', "
                f"got {rec['polarity']!r}"
            ) from None
        confidence = rec.get("confidence", 1.0)
        try:
            record = RelationRecord(
                a=str(rec["a"]),
                b=str(rec["b"]),
                category=str(rec["category"]),
                polarity=polarity,
                group=str(rec["group"]),
                confidence=float(confidence),
            )
            (rel,) = resolve_records([record], graph)
        except (InputError, TypeError, ValueError) as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
        if rel.key in seen:
            raise InputError(
                f"{path}:{lineno}: duplicate relation (also at line {seen[rel.key]}): "
                f"{record.to_json()}"
            )
        seen[rel.key] = lineno
        relations.append(rel)
    return relations


def relations_to_records(
    relations: Sequence[Relation], graph: FactorGraph
) -> list[RelationRecord]:
    return [
        RelationRecord(
            a=graph.var_instance(r.a),
            b=graph.var_instance(r.b),
            category=graph.var_category(r.a),
            polarity=r.polarity,
            group=r.group,
            confidence=r.confidence,
        )
        for r in relations
    ]


def write_relations(
    path: str | Path, relations: Sequence[Relation], graph: FactorGraph
) -> None:
    write_records(path, [r.to_json() for r in relations_to_records(relations, graph)])


def sample_relation_budget(
    relations: Sequence[Relation],
    graph: FactorGraph,
    k_b: int,
    seed: int = 0,
) -> list[Relation]:
    """Cap each unlabeled variable at k_b incident relations per group.

    Sampling is uniform without replacement and seeded; a relation
    survives if any of its unlabeled endpoints drew it. KNN relations are
    exempt, as are relations with no unlabeled endpoint (they only feed
    weight learning). Output preserves input order.
    """
    if k_b < 1:
        raise InputError("k_b must be >= 1")
    rng = np.random.default_rng(seed)
    unlabeled = set(int(v) for v in graph.unlabeled_ids())
    incident: dict[int, dict[str, list[int]]] = {}
    keep: set[int] = set()
    for i, rel in enumerate(relations):
        if rel.group == KNN_GROUP:
            keep.add(i)
            continue
        ends = [v for v in (rel.a, rel.b) if v in unlabeled]
        if not ends:
            keep.add(i)
            continue
        for v in ends:
            incident.setdefault(v, {}).setdefault(rel.group, []).append(i)
    for v in sorted(incident):
        for group in sorted(incident[v]):
            idxs = incident[v][group]
            if len(idxs) <= k_b:
                keep.update(idxs)
            else:
                chosen = rng.choice(len(idxs), size=k_b, replace=False)
                keep.update(idxs[int(c)] for c in chosen)
    return [rel for i, rel in enumerate(relations) if i in keep]


def budget_sweep_files(
    relations: Sequence[Relation],
    graph: FactorGraph,
    k_values: Sequence[int],
    seed: int,
    out_dir: str | Path,
) -> dict[int, Path]:
    """Write one sampled relations file per budget setting."""
    out_dir = Path(out_dir)
    paths = {}
    for k_b in k_values:
        sampled = sample_relation_budget(relations, graph, k_b, seed)
        path = out_dir / f"relations_kb{k_b}.jsonl"
        write_relations(path, sampled, graph)
        paths[k_b] = path
    return paths
