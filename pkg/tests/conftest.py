"""Shared fixtures and the independent brute-force marginal oracle."""

from __future__ import annotations

import itertools
import math

from gradualml.graph import InstanceRecord, Polarity, Relation, build_graph


def make_graph(train=None, test=(), categories=("c0",), relations=()):
    """Small-graph builder for tests.

    train: {instance id: {category: label}}; relations: tuples of
    (inst_a, inst_b, category, polarity, group, confidence).
    """
    train = train or {}
    cats = list(categories)
    instances = [
        InstanceRecord(iid, "train", dict(labels)) for iid, labels in train.items()
    ] + [InstanceRecord(iid, "test") for iid in test]
    resolver = build_graph(instances, cats)
    rels = [
        Relation(
            resolver.var_id(a, cat),
            resolver.var_id(b, cat),
            Polarity(pol),
            group,
            conf,
        )
        for (a, b, cat, pol, group, conf) in relations
    ]
    return build_graph(instances, cats, rels)


def brute_marginal(graph, weights, target, free_ids):
    """Exhaustive-enumeration oracle for P(target=1), written independently
    of the package's kernels: plain itertools + math over the factor
    definition (e^w when endpoint labels agree, 1 otherwise).

    Relations with an unlabeled endpoint outside the free set are absent,
    matching the subgraph semantics of the code under test.
    """
    free_ids = list(free_ids)
    z_total = 0.0
    z_target = 0.0
    for assignment in itertools.product((0, 1), repeat=len(free_ids)):
        values = dict(zip(free_ids, assignment))
        score = 1.0
        for rid in range(graph.n_relations):
            rel = graph.relation(rid)
            va, vb = rel.a, rel.b
            if va in values:
                ya = values[va]
            elif graph.is_labeled(va):
                ya = graph.label_of(va)
            else:
                continue
            if vb in values:
                yb = values[vb]
            elif graph.is_labeled(vb):
                yb = graph.label_of(vb)
            else:
                continue
            if va not in values and vb not in values:
                continue  # fully labeled factor: constant, cancels anyway
            w = weights.get(rel.group, rel.polarity, graph.var_category(va))
            if ya == yb:
                score *= math.exp(w)
        z_total += score
        if values[target] == 1:
            z_target += score
    return z_target / z_total
