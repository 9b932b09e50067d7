"""End-to-end orchestration: workload in, predictions and metrics out.

Every run writes a manifest (config, seed, input digests) so results are
reproducible; identical inputs yield byte-identical artifacts. Stage
failures are wrapped with the stage name and surface through the CLI as
nonzero exits.
"""

from __future__ import annotations

import hashlib
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from gradualml import __version__, kernels
from gradualml.config import InferenceConfig
from gradualml.errors import InputError, StageError
from gradualml.graph import (
    FactorGraph,
    InstanceRecord,
    Relation,
    build_graph,
    categories_from_instances,
    load_instances,
)
from gradualml.inference import gradual_inference
from gradualml.jsonl import write_json, write_records
from gradualml.learning import WeightTable, learn_weights
from gradualml.metrics import MetricsReport, evaluate, load_gold
from gradualml.relations import (
    KNN_GROUP,
    KnnConfig,
    knn_extract,
    load_embeddings,
    load_relations,
    sample_relation_budget,
    write_relations,
)
from gradualml.synth import SynthSpec, generate


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def prediction_rows(graph: FactorGraph) -> list[dict]:
    """One row per variable, in variable-id order."""
    methods = {rec.variable: rec.method for rec in graph.commit_log}
    rows = []
    for vid in range(graph.n_variables):
        var = graph.variable(vid)
        if var.state == "unlabeled":
            raise InputError(f"variable {vid} is still unlabeled; run inference first")
        if var.state == "evidence":
            method = "evidence"
        else:
            method = methods[vid]
        rows.append(
            {
                "id": var.instance,
                "category": var.category,
                "label": var.label,
                "probability": var.probability,
                "order": var.commit_order,
                "method": method,
            }
        )
    return rows


def predictions_mapping(rows: Sequence[dict]) -> dict:
    return {(row["id"], row["category"]): row["label"] for row in rows}


def evaluate_against_gold(rows: Sequence[dict], gold: Mapping) -> MetricsReport:
    """Score the prediction rows on the gold pair set.

    Predictions cover every variable (evidence included); gold usually
    covers the test split only, so predictions are restricted to gold's
    pairs first. Gold pairs without a prediction remain an error.
    """
    preds = predictions_mapping(rows)
    restricted = {k: v for k, v in preds.items() if k in gold}
    return evaluate(restricted, gold)


@dataclass
class WorkloadResult:
    graph: FactorGraph
    weights: WeightTable
    rows: list[dict]
    metrics: MetricsReport | None


def run_workload(
    instances: Sequence[InstanceRecord],
    categories: Sequence[str],
    relations: Sequence[Relation],
    config: InferenceConfig | None = None,
    gold: Mapping | None = None,
) -> WorkloadResult:
    """Build, learn, infer, and (optionally) score one workload in memory."""
    cfg = config or InferenceConfig()
    with _stage("build_graph"):
        graph = build_graph(instances, categories, relations)
    with _stage("learn_weights"):
        weights = learn_weights(graph, cfg)
    with _stage("gradual_inference"):
        gradual_inference(graph, weights, cfg)
    rows = prediction_rows(graph)
    metrics = None
    if gold is not None:
        with _stage("evaluate"):
            metrics = evaluate_against_gold(rows, gold)
    return WorkloadResult(graph, weights, rows, metrics)


def _load_workload_files(
    instances_path: str | Path,
    relations_paths: Sequence[str | Path],
    embeddings_path: str | Path | None,
    extract_knn: bool,
    knn_config: KnnConfig | None,
):
    with _stage("load_instances"):
        instances = load_instances(instances_path)
        categories = categories_from_instances(instances)
        resolver = build_graph(instances, categories)
    relations: list[Relation] = []
    with _stage("load_relations"):
        for path in relations_paths:
            relations.extend(load_relations(path, resolver))
    if extract_knn:
        with _stage("extract_knn"):
            if embeddings_path is None:
                raise InputError("KNN extraction requested without an embeddings file")
            embeddings = load_embeddings(embeddings_path)
            relations.extend(knn_extract(embeddings, resolver, knn_config))
    return instances, categories, resolver, relations


def pipeline_run(
    out_dir: str | Path,
    synth_spec: SynthSpec | None = None,
    instances_path: str | Path | None = None,
    relations_paths: Sequence[str | Path] = (),
    gold_path: str | Path | None = None,
    embeddings_path: str | Path | None = None,
    extract_knn: bool = False,
    knn_config: KnnConfig | None = None,
    k_b: int | None = None,
    kb_sweep: Sequence[int] | None = None,
    config: InferenceConfig | None = None,
    seed: int | None = None,
    exclude_groups: Sequence[str] = (),
) -> dict:
    """The full pipeline over a synthetic or file-based workload.

    Writes predictions.jsonl, metrics.json (when gold labels exist) and
    manifest.json into out_dir; with ``kb_sweep`` one relations file and
    one metrics file per budget setting plus a sweep summary.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = config or InferenceConfig()
    if seed is not None:
        cfg.seed = seed
    inputs: dict[str, dict] = {}
    gold = None

    if synth_spec is not None:
        with _stage("synth"):
            if seed is not None:
                synth_spec.seed = seed
            workload = generate(synth_spec)
            paths = workload.write(out)
        instances = workload.instances
        categories = workload.categories
        gold = workload.gold
        with _stage("build_graph"):
            resolver = build_graph(instances, categories)
        with _stage("load_relations"):
            relations = load_relations(paths["relations"], resolver)
        if extract_knn:
            with _stage("extract_knn"):
                relations.extend(
                    knn_extract(workload.embeddings, resolver, knn_config)
                )
        for name, p in paths.items():
            inputs[name] = {"path": str(p), "sha256": file_digest(p)}
    else:
        if instances_path is None:
            raise InputError("either a synth spec or an instances file is required")
        instances, categories, resolver, relations = _load_workload_files(
            instances_path, relations_paths, embeddings_path, extract_knn, knn_config
        )
        for label, p in [("instances", instances_path)] + [
            (f"relations_{i}", p) for i, p in enumerate(relations_paths)
        ]:
            inputs[label] = {"path": str(p), "sha256": file_digest(p)}
        if gold_path is not None:
            with _stage("load_gold"):
                gold = load_gold(gold_path)
            inputs["gold"] = {"path": str(gold_path), "sha256": file_digest(gold_path)}

    if exclude_groups:
        dropped = set(exclude_groups)
        relations = [r for r in relations if r.group not in dropped]

    manifest = {
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "synth_spec": synth_spec.to_dict() if synth_spec is not None else None,
        "inputs": inputs,
        "exclude_groups": sorted(exclude_groups),
        "outputs": {},
    }

    def one_run(rels: list[Relation], tag: str = "") -> dict:
        suffix = f"_{tag}" if tag else ""
        result = run_workload(instances, categories, rels, cfg, gold)
        pred_path = out / f"predictions{suffix}.jsonl"
        write_records(pred_path, result.rows)
        entry = {"predictions": str(pred_path), "n_relations": len(rels)}
        if result.metrics is not None:
            metrics_path = out / f"metrics{suffix}.json"
            write_json(metrics_path, result.metrics.to_dict())
            entry["metrics"] = str(metrics_path)
            entry["macro_f1"] = result.metrics.macro_f1
            entry["strict_accuracy"] = result.metrics.strict_accuracy
        return entry

    if kb_sweep:
        sweep: dict[str, dict] = {}
        for kb in kb_sweep:
            with _stage("sample_relation_budget"):
                sampled = sample_relation_budget(relations, resolver, kb, cfg.seed)
                write_relations(out / f"relations_kb{kb}.jsonl", sampled, resolver)
            sweep[str(kb)] = one_run(sampled, tag=f"kb{kb}")
        scores = [e["macro_f1"] for e in sweep.values() if "macro_f1" in e]
        manifest["outputs"]["kb_sweep"] = sweep
        if scores:
            manifest["outputs"]["macro_f1_range"] = max(scores) - min(scores)
    else:
        if k_b is not None:
            with _stage("sample_relation_budget"):
                relations = sample_relation_budget(relations, resolver, k_b, cfg.seed)
        manifest["outputs"]["run"] = one_run(relations)

    write_json(out / "manifest.json", manifest)
    return manifest


def ablate_run(
    out_dir: str | Path,
    synth_spec: SynthSpec | None = None,
    seeds: Sequence[int] | None = None,
    instances_path: str | Path | None = None,
    relations_paths: Sequence[str | Path] = (),
    gold_path: str | Path | None = None,
    config: InferenceConfig | None = None,
    k_b: int | None = None,
) -> dict:
    """Macro-F1 with vs without the KNN relation group, side by side.

    Synthetic mode runs one comparison per seed; file mode runs a single
    comparison on the given workload. Both arms' configurations are
    recorded verbatim in the report (ablation.json).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = config or InferenceConfig()

    def both_arms(instances, categories, relations, gold):
        with_knn = run_workload(instances, categories, relations, cfg, gold)
        rest = [r for r in relations if r.group != KNN_GROUP]
        without_knn = run_workload(instances, categories, rest, cfg, gold)
        return {
            "with_knn": {
                "macro_f1": with_knn.metrics.macro_f1,
                "strict_accuracy": with_knn.metrics.strict_accuracy,
                "n_relations": len(relations),
            },
            "without_knn": {
                "macro_f1": without_knn.metrics.macro_f1,
                "strict_accuracy": without_knn.metrics.strict_accuracy,
                "n_relations": len(rest),
            },
            "macro_f1_delta": with_knn.metrics.macro_f1 - without_knn.metrics.macro_f1,
        }

    runs = []
    if synth_spec is not None:
        for seed in seeds if seeds else [synth_spec.seed]:
            spec = SynthSpec.from_dict({**synth_spec.to_dict(), "seed": seed})
            with _stage("synth"):
                workload = generate(spec)
            with _stage("build_graph"):
                resolver = build_graph(workload.instances, workload.categories)
            with _stage("load_relations"):
                from gradualml.relations import resolve_records

                relations = resolve_records(workload.relations, resolver)
                if k_b is not None:
                    relations = sample_relation_budget(relations, resolver, k_b, seed)
            entry = both_arms(
                workload.instances, workload.categories, relations, workload.gold
            )
            entry["seed"] = seed
            runs.append(entry)
    else:
        if instances_path is None or gold_path is None:
            raise InputError("file-mode ablation needs instances and gold files")
        instances, categories, resolver, relations = _load_workload_files(
            instances_path, relations_paths, None, False, None
        )
        if k_b is not None:
            with _stage("sample_relation_budget"):
                relations = sample_relation_budget(relations, resolver, k_b, cfg.seed)
        with _stage("load_gold"):
            gold = load_gold(gold_path)
        runs.append(both_arms(instances, categories, relations, gold))

    wins = sum(
        1 for r in runs if r["with_knn"]["macro_f1"] >= r["without_knn"]["macro_f1"]
    )
    arm_config = cfg.to_dict()
    report = {
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "synth_spec": synth_spec.to_dict() if synth_spec is not None else None,
        "arms": {
            "with_knn": {"config": arm_config, "relation_groups": "all"},
            "without_knn": {
                "config": arm_config,
                "relation_groups": f"all except {KNN_GROUP!r}",
            },
        },
        "runs": runs,
        "wins_with_knn": wins,
        "n_runs": len(runs),
    }
    write_json(out / "ablation.json", report)
    return report
