"""Marginal computation, entropy, evidential support, and the gradual loop."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_marginal, make_graph
from gradualml.config import InferenceConfig
from gradualml.errors import InputError
from gradualml.graph import Polarity
from gradualml.inference import (
    conditional_marginal,
    entropy,
    evidential_support,
    exact_marginal,
    factor_value,
    gradual_inference,
    one_shot_labels,
)
from gradualml.learning import WeightTable


def star_graph(neighbor_labels, polarity="similar", conf=0.9):
    """One unlabeled variable 't' with one evidence neighbor per label."""
    train = {f"n{i}": {"c0": int(y)} for i, y in enumerate(neighbor_labels)}
    rels = [
        (f"n{i}", "t", "c0", polarity, "g", conf) for i in range(len(neighbor_labels))
    ]
    return make_graph(train=train, test=("t",), relations=rels)


def wt(similar=1.0, opposite=-1.0):
    table = WeightTable()
    table.group_weights[("g", Polarity.SIMILAR)] = similar
    table.group_weights[("g", Polarity.OPPOSITE)] = opposite
    return table


class TestFactorValue:
    def test_agreeing_labels(self):
        assert factor_value(1, 1, 0.7) == pytest.approx(2.013752, abs=1e-6)
        assert factor_value(1, 1, 0.7) == math.exp(0.7)

    def test_disagreeing_labels_exactly_one(self):
        assert factor_value(1, 0, 0.7) == 1.0
        assert factor_value(0, 1, -3.2) == 1.0

    def test_negative_weight_penalizes_agreement(self):
        assert factor_value(0, 0, -1.2) == pytest.approx(0.301194, abs=1e-6)

    def test_bad_labels(self):
        with pytest.raises(InputError):
            factor_value(2, 0, 1.0)


class TestEntropy:
    def test_maximum_at_half(self):
        assert entropy(0.5) == pytest.approx(math.log(2), abs=1e-12)

    def test_degenerate(self):
        assert entropy(0.0) == 0.0
        assert entropy(1.0) == 0.0

    @given(st.floats(0.0, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_symmetry(self, p):
        assert entropy(p) == pytest.approx(entropy(1.0 - p), abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(InputError):
            entropy(1.5)


class TestConditionalMarginal:
    def test_three_neighbor_star(self):
        # Frozen from the enumeration oracle: sigma(1) for labels [1,1,0], w=1.
        g = star_graph([1, 1, 0])
        table = wt(similar=1.0)
        t = g.var_id("t", "c0")
        p = conditional_marginal(g, t, table)
        assert p == pytest.approx(0.7310585786300049, abs=1e-12)
        assert abs(p - brute_marginal(g, table, t, [t])) <= 1e-12

    def test_no_labeled_neighbors_exact_half(self):
        g = make_graph(train={"a": {"c0": 1}}, test=("t",))
        assert conditional_marginal(g, g.var_id("t", "c0"), wt()) == 0.5

    def test_opposite_neighbor(self):
        # Frozen from the enumeration oracle: sigma(-2).
        g = star_graph([1], polarity="opposite")
        table = wt(opposite=-2.0)
        t = g.var_id("t", "c0")
        p = conditional_marginal(g, t, table)
        assert p == pytest.approx(0.11920292202211755, abs=1e-12)
        assert abs(p - brute_marginal(g, table, t, [t])) <= 1e-12

    def test_unlabeled_neighbors_ignored(self):
        g = make_graph(
            train={"a": {"c0": 1}},
            test=("t", "u"),
            relations=[
                ("a", "t", "c0", "similar", "g", 0.9),
                ("u", "t", "c0", "similar", "g", 0.9),
            ],
        )
        table = wt(similar=0.8)
        p = conditional_marginal(g, g.var_id("t", "c0"), table)
        assert p == pytest.approx(1.0 / (1.0 + math.exp(-0.8)), abs=1e-12)


class TestExactMarginal:
    def test_single_free_matches_conditional(self):
        g = star_graph([1, 1, 0])
        table = wt(similar=1.0)
        t = g.var_id("t", "c0")
        assert abs(
            exact_marginal(g, t, [t], table) - conditional_marginal(g, t, table)
        ) <= 1e-12

    def test_two_free_symmetric_pair(self):
        g = make_graph(
            train={"a": {"c0": 1}},
            test=("t", "u"),
            relations=[("t", "u", "c0", "similar", "g", 0.9)],
        )
        table = wt(similar=1.0)
        t, u = g.var_id("t", "c0"), g.var_id("u", "c0")
        assert exact_marginal(g, t, [t, u], table) == pytest.approx(0.5, abs=1e-12)
        assert exact_marginal(g, u, [t, u], table) == pytest.approx(0.5, abs=1e-12)

    def test_isolated_free_variable(self):
        g = make_graph(train={"a": {"c0": 1}}, test=("t",))
        t = g.var_id("t", "c0")
        assert exact_marginal(g, t, [t], wt()) == 0.5

    def test_enum_cap_enforced(self):
        g = make_graph(train={"a": {"c0": 1}}, test=[f"t{i}" for i in range(5)])
        free = [g.var_id(f"t{i}", "c0") for i in range(5)]
        with pytest.raises(InputError, match="enum_cap"):
            exact_marginal(g, free[0], free, wt(), enum_cap=4)

    def test_agrees_with_oracle_on_coupled_subgraph(self):
        g = make_graph(
            train={"a": {"c0": 1}, "b": {"c0": 0}},
            test=("t", "u", "v"),
            relations=[
                ("a", "t", "c0", "similar", "g", 0.9),
                ("b", "u", "c0", "opposite", "g", 0.8),
                ("t", "u", "c0", "similar", "g", 0.7),
                ("u", "v", "c0", "opposite", "g", 0.6),
                ("t", "v", "c0", "similar", "g", 0.5),
            ],
        )
        table = wt(similar=1.3, opposite=-0.8)
        free = [g.var_id(x, "c0") for x in ("t", "u", "v")]
        for target in free:
            got = exact_marginal(g, target, free, table)
            want = brute_marginal(g, table, target, free)
            assert abs(got - want) <= 1e-12


class TestEvidentialSupport:
    def test_sum_of_confidences(self):
        g = make_graph(
            train={"a": {"c0": 1}, "b": {"c0": 0}, "c": {"c0": 1}},
            test=("t",),
            relations=[
                ("a", "t", "c0", "similar", "g", 1.0),
                ("b", "t", "c0", "similar", "g", 0.8),
                ("c", "t", "c0", "opposite", "g", 0.5),
            ],
        )
        assert evidential_support(g, g.var_id("t", "c0")) == pytest.approx(2.3)

    def test_isolated_is_zero(self):
        g = make_graph(train={"a": {"c0": 1}}, test=("t",))
        assert evidential_support(g, g.var_id("t", "c0")) == 0.0

    def test_increases_when_neighbor_labeled(self):
        g = make_graph(
            train={"a": {"c0": 1}},
            test=("t", "u"),
            relations=[
                ("a", "t", "c0", "similar", "g", 0.9),
                ("u", "t", "c0", "similar", "g", 0.6),
            ],
        )
        t = g.var_id("t", "c0")
        before = evidential_support(g, t)
        g.commit_label(g.var_id("u", "c0"), 1, 0.8)
        assert evidential_support(g, t) == pytest.approx(before + 0.6)


class TestPathEquivalence:
    @given(st.data())
    @settings(max_examples=40, deadline=None)
    def test_conditional_equals_exact_for_leaf_variables(self, data):
        n_nbrs = data.draw(st.integers(0, 6))
        labels = [data.draw(st.integers(0, 1)) for _ in range(n_nbrs)]
        polarity = data.draw(st.sampled_from(["similar", "opposite"]))
        sim_w = data.draw(st.floats(0.0, 5.0))
        opp_w = data.draw(st.floats(-5.0, 0.0))
        g = star_graph(labels, polarity=polarity)
        table = wt(similar=sim_w, opposite=opp_w)
        t = g.var_id("t", "c0")
        assert abs(
            conditional_marginal(g, t, table) - exact_marginal(g, t, [t], table)
        ) <= 1e-12


def chain_workload():
    """Evidence anchors a chain of unlabeled variables: e - t0 - t1 - t2."""
    return make_graph(
        train={"e": {"c0": 1}, "f": {"c0": 0}},
        test=("t0", "t1", "t2"),
        relations=[
            ("e", "t0", "c0", "similar", "g", 0.9),
            ("t0", "t1", "c0", "similar", "g", 0.8),
            ("t1", "t2", "c0", "opposite", "g", 0.7),
        ],
    )


class TestGradualInference:
    def test_running_example_commits(self):
        g = make_graph(
            train={
                "s1": {"ambience": 0, "food": 1, "price": 1, "service": 0},
                "s2": {"ambience": 0, "food": 0, "price": 0, "service": 1},
            },
            test=("s3",),
            categories=("ambience", "food", "price", "service"),
            relations=[
                ("s3", "s1", "food", "similar", "knn", 0.97),
                ("s3", "s2", "service", "similar", "knn", 0.95),
            ],
        )
        gradual_inference(g, WeightTable())
        assert g.variable(g.var_id("s3", "food")).label == 1
        assert g.variable(g.var_id("s3", "service")).label == 1
        # no relational evidence for the rest: fallback label 0
        methods = {rec.variable: rec.method for rec in g.commit_log}
        assert methods[g.var_id("s3", "price")] == "fallback"
        assert g.variable(g.var_id("s3", "price")).label == 0

    def test_chain_propagates_through_commits(self):
        g = chain_workload()
        gradual_inference(g, wt(similar=2.0, opposite=-2.0))
        assert g.variable(g.var_id("t0", "c0")).label == 1
        assert g.variable(g.var_id("t1", "c0")).label == 1
        assert g.variable(g.var_id("t2", "c0")).label == 0  # opposite flip

    def test_one_commit_per_iteration_and_termination(self):
        g = chain_workload()
        gradual_inference(g, wt())
        orders = sorted(
            g.variable(int(v)).commit_order
            for v in range(g.n_variables)
            if g.variable(int(v)).state == "inferred"
        )
        assert orders == [1, 2, 3]
        assert len(g.commit_log) == 3
        assert len(g.unlabeled_ids()) == 0

    def test_degree_zero_all_fallback(self):
        g = make_graph(
            train={"a": {"c0": 1, "c1": 0}},
            test=("t0", "t1"),
            categories=("c0", "c1"),
        )
        gradual_inference(g, wt())
        assert all(rec.method == "fallback" for rec in g.commit_log)
        assert all(rec.label == 0 for rec in g.commit_log)
        # fallback probability is the evidence positive rate of the category
        probs = {g.var_category(rec.variable): rec.probability for rec in g.commit_log}
        assert probs["c0"] == 1.0 and probs["c1"] == 0.0

    def test_evidence_immutable_through_run(self):
        g = chain_workload()
        before = {
            int(v): g.variable(int(v)).label for v in g.evidence_ids()
        }
        gradual_inference(g, wt())
        for v, label in before.items():
            assert g.variable(v).label == label
        committed = [rec.variable for rec in g.commit_log]
        assert len(committed) == len(set(committed))

    def test_deterministic_commit_log(self):
        g1, g2 = chain_workload(), chain_workload()
        gradual_inference(g1, wt())
        gradual_inference(g2, wt())
        assert g1.commit_log == g2.commit_log

    def test_confidence_scaling_preserves_run(self):
        # powers of two keep float cosines exact, so the entire commit
        # sequence must be identical
        def build(scale):
            return make_graph(
                train={"e": {"c0": 1}, "f": {"c0": 0}},
                test=("t0", "t1", "t2"),
                relations=[
                    ("e", "t0", "c0", "similar", "g", 0.875 * scale),
                    ("t0", "t1", "c0", "similar", "g", 0.75 * scale),
                    ("f", "t1", "c0", "opposite", "g", 0.5 * scale),
                    ("t1", "t2", "c0", "similar", "g", 0.25 * scale),
                ],
            )

        g1, g2 = build(1.0), build(0.5)
        gradual_inference(g1, wt())
        gradual_inference(g2, wt())
        assert [ (r.variable, r.label, r.method) for r in g1.commit_log ] == [
            (r.variable, r.label, r.method) for r in g2.commit_log
        ]

    def test_p_half_commits_zero(self):
        # two labeled neighbors voting 1 and 0 through the same group: z = 0
        g = make_graph(
            train={"a": {"c0": 1}, "b": {"c0": 0}},
            test=("t",),
            relations=[
                ("a", "t", "c0", "similar", "g", 0.9),
                ("b", "t", "c0", "similar", "g", 0.9),
            ],
        )
        gradual_inference(g, wt())
        var = g.variable(g.var_id("t", "c0"))
        assert var.probability == 0.5
        assert var.label == 0

    def test_relearn_interval_zero_disables_refits(self):
        g = chain_workload()
        cfg = InferenceConfig(relearn_interval=0)
        gradual_inference(g, wt(), cfg)
        assert len(g.unlabeled_ids()) == 0


class TestOneShotBaseline:
    def test_only_evidence_neighbors_count(self):
        g = chain_workload()
        got = one_shot_labels(g, wt(similar=2.0, opposite=-2.0))
        t0, t1, t2 = (g.var_id(t, "c0") for t in ("t0", "t1", "t2"))
        assert got[t0][0] == 1
        # t1 and t2 have no evidence neighbor: p = 0.5 -> label 0
        assert got[t1] == (0, 0.5)
        assert got[t2] == (0, 0.5)
