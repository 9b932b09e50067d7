"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 invariant breach.
"""

from __future__ import annotations

import argparse
import json
import sys

from gradualml import __version__
from gradualml.config import InferenceConfig
from gradualml.errors import InputError, InvariantError, StageError
from gradualml.graph import build_graph, categories_from_instances, load_instances
from gradualml.inference import gradual_inference
from gradualml.jsonl import write_json, write_records
from gradualml.learning import learn_weights
from gradualml.metrics import evaluate, load_gold, load_predictions
from gradualml.pipeline import (
    _stage,
    ablate_run,
    pipeline_run,
    prediction_rows,
)
from gradualml.relations import (
    KnnConfig,
    knn_extract,
    load_embeddings,
    load_relations,
    write_relations,
)
from gradualml.synth import SynthSpec, generate


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"expected a comma-separated integer list, got {text!r}") from None


def _load_config(path: str | None, seed: int | None) -> InferenceConfig:
    cfg = InferenceConfig.from_file(path) if path else InferenceConfig()
    if seed is not None:
        cfg.seed = seed
    return cfg


def _cmd_synth(args) -> int:
    spec = SynthSpec.from_file(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    out = generate(spec)
    paths = out.write(args.out_dir)
    print(json.dumps({name: str(p) for name, p in sorted(paths.items())}, indent=2))
    return 0


def _cmd_extract_knn(args) -> int:
    instances = load_instances(args.instances)
    graph = build_graph(instances, categories_from_instances(instances))
    embeddings = load_embeddings(args.embeddings)
    relations = knn_extract(embeddings, graph, KnnConfig(k=args.k, tau=args.tau))
    write_relations(args.out, relations, graph)
    print(f"wrote {len(relations)} relations to {args.out}")
    return 0


def _cmd_infer(args) -> int:
    cfg = _load_config(args.config, args.seed)
    with _stage("load_instances"):
        instances = load_instances(args.instances)
        categories = categories_from_instances(instances)
        resolver = build_graph(instances, categories)
    relations = []
    with _stage("load_relations"):
        for path in args.relations.split(","):
            relations.extend(load_relations(path.strip(), resolver))
    with _stage("build_graph"):
        graph = build_graph(instances, categories, relations)
    with _stage("learn_weights"):
        weights = learn_weights(graph, cfg)
    with _stage("gradual_inference"):
        gradual_inference(graph, weights, cfg)
    write_records(args.out, prediction_rows(graph))
    print(f"wrote predictions for {graph.n_variables} variables to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    gold = load_gold(args.gold)
    preds = load_predictions(args.predictions)
    restricted = {k: v for k, v in preds.items() if k in gold}
    report = evaluate(restricted, gold).to_dict()
    if args.out:
        write_json(args.out, report)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _cmd_pipeline(args) -> int:
    spec = SynthSpec.from_file(args.synth_spec) if args.synth_spec else None
    if spec is None and not args.instances:
        raise InputError("pipeline needs --synth-spec or --instances")
    manifest = pipeline_run(
        out_dir=args.out_dir,
        synth_spec=spec,
        instances_path=args.instances,
        relations_paths=[p.strip() for p in args.relations.split(",")] if args.relations else (),
        gold_path=args.gold,
        embeddings_path=args.embeddings,
        extract_knn=args.extract_knn,
        knn_config=KnnConfig(k=args.knn_k, tau=args.knn_tau),
        k_b=args.kb,
        kb_sweep=_int_list(args.kb_sweep) if args.kb_sweep else None,
        config=_load_config(args.config, None),
        seed=args.seed,
    )
    print(json.dumps(manifest["outputs"], indent=2, sort_keys=True))
    return 0


def _cmd_ablate(args) -> int:
    spec = SynthSpec.from_file(args.synth_spec) if args.synth_spec else None
    report = ablate_run(
        out_dir=args.out_dir,
        synth_spec=spec,
        seeds=_int_list(args.seeds) if args.seeds else None,
        instances_path=args.instances,
        relations_paths=[p.strip() for p in args.relations.split(",")] if args.relations else (),
        gold_path=args.gold,
        config=_load_config(args.config, args.seed),
        k_b=args.kb,
    )
    summary = {
        "wins_with_knn": report["wins_with_knn"],
        "n_runs": report["n_runs"],
        "runs": report["runs"],
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradualml",
        description="Gradual machine learning over relational factor graphs",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic workload")
    p.add_argument("--spec", required=True, help="synth spec JSON file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("extract-knn", help="similar relations from embeddings")
    p.add_argument("--instances", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--tau", type=float, default=0.9)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="accepted for uniformity; extraction is deterministic")
    p.set_defaults(func=_cmd_extract_knn)

    p = sub.add_parser("infer", help="learn weights and label all variables")
    p.add_argument("--instances", required=True)
    p.add_argument("--relations", required=True, help="comma-separated relation files")
    p.add_argument("--config", default=None, help="inference config JSON file")
    p.add_argument("--out", required=True, help="predictions output (JSON Lines)")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("eval", help="score predictions against gold labels")
    p.add_argument("--predictions", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", default=None, help="also write the metrics JSON here")
    p.add_argument("--seed", type=int, default=None, help="accepted for uniformity; evaluation is deterministic")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("pipeline", help="synth/load -> sample -> infer -> eval")
    p.add_argument("--synth-spec", default=None)
    p.add_argument("--instances", default=None)
    p.add_argument("--relations", default=None, help="comma-separated relation files")
    p.add_argument("--gold", default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--extract-knn", action="store_true")
    p.add_argument("--knn-k", type=int, default=3)
    p.add_argument("--knn-tau", type=float, default=0.9)
    p.add_argument("--kb", type=int, default=None, help="per-variable relation budget")
    p.add_argument("--kb-sweep", default=None, help="comma-separated budgets, one run each")
    p.add_argument("--config", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("ablate", help="compare runs with and without knn relations")
    p.add_argument("--synth-spec", default=None)
    p.add_argument("--seeds", default=None, help="comma-separated seeds for synthetic mode")
    p.add_argument("--instances", default=None)
    p.add_argument("--relations", default=None)
    p.add_argument("--gold", default=None)
    p.add_argument("--kb", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_ablate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        cause = exc.cause
        return 3 if isinstance(cause, InvariantError) else 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
