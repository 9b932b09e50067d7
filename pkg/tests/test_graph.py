"""Graph construction, commit bookkeeping, and neighbor queries."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_graph
from gradualml.errors import InputError, InvariantError
from gradualml.graph import (
    InstanceRecord,
    Polarity,
    Relation,
    build_graph,
    categories_from_instances,
    replay_commit_log,
)

CATS4 = ("ambience", "food", "price", "service")


def two_train_one_test():
    return make_graph(
        train={
            "s1": {"ambience": 0, "food": 1, "price": 1, "service": 0},
            "s2": {"ambience": 0, "food": 0, "price": 0, "service": 1},
        },
        test=("s3",),
        categories=CATS4,
    )


class TestBuildGraph:
    def test_variable_counts(self):
        g = two_train_one_test()
        assert g.n_variables == 12
        assert len(g.evidence_ids()) == 8
        assert len(g.unlabeled_ids()) == 4

    def test_running_example_evidence_labels(self):
        # "Food was very expensive for what you get" -> Food, Price
        g = two_train_one_test()
        s1 = {c: g.variable(g.var_id("s1", c)) for c in CATS4}
        assert s1["food"].label == 1
        assert s1["price"].label == 1
        assert s1["service"].label == 0
        assert s1["ambience"].label == 0
        assert all(v.state == "evidence" for v in s1.values())
        for c in CATS4:
            assert g.variable(g.var_id("s3", c)).state == "unlabeled"

    def test_unknown_instance_in_relation(self):
        g = two_train_one_test()
        with pytest.raises(InputError, match="zzz"):
            g.var_id("zzz", "food")

    def test_relation_out_of_range_rejected(self):
        insts = [InstanceRecord("a", "train", {"c0": 1}), InstanceRecord("b", "test")]
        bad = Relation(0, 99, Polarity.SIMILAR, "g", 1.0)
        with pytest.raises(InputError, match="unknown variable"):
            build_graph(insts, ["c0"], [bad])

    def test_duplicate_instance_rejected(self):
        insts = [
            InstanceRecord("a", "train", {"c0": 1}),
            InstanceRecord("a", "test"),
        ]
        with pytest.raises(InputError, match="duplicate instance"):
            build_graph(insts, ["c0"])

    def test_duplicate_relation_rejected(self):
        with pytest.raises(InputError, match="duplicate relation"):
            make_graph(
                train={"a": {"c0": 1}, "b": {"c0": 0}},
                relations=[
                    ("a", "b", "c0", "similar", "g", 0.9),
                    ("b", "a", "c0", "similar", "g", 0.8),
                ],
            )

    def test_cross_category_relation_rejected(self):
        insts = [
            InstanceRecord("a", "train", {"c0": 1, "c1": 0}),
            InstanceRecord("b", "test"),
        ]
        resolver = build_graph(insts, ["c0", "c1"])
        bad = Relation(
            resolver.var_id("a", "c0"),
            resolver.var_id("b", "c1"),
            Polarity.SIMILAR,
            "g",
            1.0,
        )
        with pytest.raises(InputError, match="different categories"):
            build_graph(insts, ["c0", "c1"], [bad])

    def test_train_missing_label_rejected(self):
        insts = [InstanceRecord("a", "train", {"c0": 1})]
        with pytest.raises(InputError, match="missing labels"):
            build_graph(insts, ["c0", "c1"])

    def test_evidence_evidence_relations_kept(self):
        g = make_graph(
            train={"a": {"c0": 1}, "b": {"c0": 1}},
            relations=[("a", "b", "c0", "similar", "g", 0.9)],
        )
        assert g.n_relations == 1


class TestCommitLabel:
    def test_commit_then_immutable(self):
        g = two_train_one_test()
        v = g.var_id("s3", "food")
        g.commit_label(v, 1, 0.91)
        var = g.variable(v)
        assert (var.state, var.label, var.probability, var.commit_order) == (
            "inferred",
            1,
            0.91,
            1,
        )
        with pytest.raises(InvariantError):
            g.commit_label(v, 1, 0.91)

    def test_commit_evidence_is_invariant_breach(self):
        g = two_train_one_test()
        with pytest.raises(InvariantError):
            g.commit_label(g.var_id("s1", "food"), 1, 1.0)

    def test_dense_commit_order(self):
        g = two_train_one_test()
        g.commit_label(g.var_id("s3", "food"), 1, 0.9)
        g.commit_label(g.var_id("s3", "price"), 0, 0.2)
        assert g.variable(g.var_id("s3", "food")).commit_order == 1
        assert g.variable(g.var_id("s3", "price")).commit_order == 2
        assert [rec.variable for rec in g.commit_log] == [
            g.var_id("s3", "food"),
            g.var_id("s3", "price"),
        ]


class TestLabeledNeighbors:
    def make(self):
        return make_graph(
            train={"a": {"c0": 1}, "b": {"c0": 0}},
            test=("t1", "t2"),
            categories=("c0",),
            relations=[
                ("t1", "a", "c0", "similar", "g", 0.9),
                ("t1", "t2", "c0", "similar", "g", 0.8),
                ("t1", "b", "c0", "opposite", "g", 0.7),
            ],
        )

    def test_filters_unlabeled(self):
        g = self.make()
        got = g.labeled_neighbors(g.var_id("t1", "c0"))
        assert [label for _, label in got] == [1, 0]

    def test_inferred_counts_as_labeled(self):
        g = self.make()
        g.commit_label(g.var_id("t2", "c0"), 0, 0.1)
        got = g.labeled_neighbors(g.var_id("t1", "c0"))
        assert [label for _, label in got] == [1, 0, 0]

    def test_isolated_variable(self):
        g = two_train_one_test()
        assert g.labeled_neighbors(g.var_id("s3", "food")) == []

    def test_only_unlabeled_neighbor(self):
        g = make_graph(
            train={"a": {"c0": 1}},
            test=("t1", "t2"),
            relations=[("t1", "t2", "c0", "similar", "g", 0.8)],
        )
        assert g.labeled_neighbors(g.var_id("t1", "c0")) == []


class TestInvariants:
    @given(
        n_train=st.integers(1, 5),
        n_test=st.integers(0, 5),
        n_cats=st.integers(1, 4),
    )
    @settings(max_examples=25, deadline=None)
    def test_grid_size(self, n_train, n_test, n_cats):
        cats = [f"c{i}" for i in range(n_cats)]
        g = make_graph(
            train={f"tr{i}": {c: 0 for c in cats} for i in range(n_train)},
            test=[f"te{i}" for i in range(n_test)],
            categories=cats,
        )
        assert g.n_variables == (n_train + n_test) * n_cats

    def test_adjacency_symmetric(self):
        g = TestLabeledNeighbors().make()
        for rid in range(g.n_relations):
            rel = g.relation(rid)
            for v, other in ((rel.a, rel.b), (rel.b, rel.a)):
                lo, hi = g.adj_indptr[v], g.adj_indptr[v + 1]
                entries = list(zip(g.adj_rel[lo:hi], g.adj_nbr[lo:hi]))
                assert (rid, other) in entries

    def test_replay_reproduces_state(self):
        g = TestLabeledNeighbors().make()
        g.commit_label(g.var_id("t2", "c0"), 1, 0.75)
        g.commit_label(g.var_id("t1", "c0"), 0, 0.25)
        fresh = TestLabeledNeighbors().make()
        replay_commit_log(fresh, g.commit_log)
        assert np.array_equal(fresh._state, g._state)
        assert np.array_equal(fresh._label, g._label)
        assert np.array_equal(fresh._prob, g._prob)
        assert np.array_equal(fresh._order, g._order)
        assert fresh.commit_log == g.commit_log

    def test_canonical_relation_order(self):
        r = Relation(7, 3, Polarity.SIMILAR, "g", 0.5)
        assert (r.a, r.b) == (3, 7)


class TestInstanceHelpers:
    def test_categories_from_instances(self):
        recs = [
            InstanceRecord("a", "train", {"z": 1, "b": 0}),
            InstanceRecord("c", "test"),
        ]
        assert categories_from_instances(recs) == ["b", "z"]

    def test_inconsistent_train_labels(self):
        recs = [
            InstanceRecord("a", "train", {"x": 1}),
            InstanceRecord("b", "train", {"y": 1}),
        ]
        with pytest.raises(InputError, match="do not match"):
            categories_from_instances(recs)
