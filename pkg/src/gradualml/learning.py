"""Relational factor weight learning.

Weights are learned per (group, polarity, category) key by maximizing the
regularized conditional pseudo-likelihood of the labeled variables given
their labeled neighbors:

    L(w) = sum_v [ y_v * z_v - log(1 + exp(z_v)) ] - lambda * ||w||^2,
    z_v  = sum_k w_k * x_k(v),   x_k(v) = n_k^{y=1}(v) - n_k^{y=0}(v)

where n_k^{y}(v) counts v's labeled neighbors with label y reached through
key-k relations. Optimization is projected gradient ascent with
backtracking; every iterate is projected into the per-key sign box
([0, w_max] for similar keys, [-w_max, 0] for opposite ones). Keys with
fewer than ``min_obs`` observations fall back to the pooled per-group
weight, then to the defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gradualml.config import InferenceConfig
from gradualml.errors import InputError
from gradualml.graph import FactorGraph, Polarity


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


@dataclass
class WeightTable:
    """Learned factor weights with sign boxes and layered fallbacks.

    Lookup order for (group, polarity, category): the per-category weight,
    then the pooled per-(group, polarity) weight, then the defaults
    (+default_similar for similar keys, default_opposite for opposite).
    Similar weights stay in [0, w_max] and opposite weights in
    [-w_max, 0] at all times.
    """

    w_max: float = 5.0
    default_similar: float = 1.0
    default_opposite: float = -1.0
    category_weights: dict = field(default_factory=dict)
    group_weights: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.w_max <= 0:
            raise InputError("w_max must be positive")
        if not (0.0 <= self.default_similar <= self.w_max):
            raise InputError("default similar weight outside [0, w_max]")
        if not (-self.w_max <= self.default_opposite <= 0.0):
            raise InputError("default opposite weight outside [-w_max, 0]")
        for (group, pol, cat), w in self.category_weights.items():
            self._check(pol, w, f"({group}, {pol}, {cat})")
        for (group, pol), w in self.group_weights.items():
            self._check(pol, w, f"({group}, {pol})")

    def _check(self, polarity: Polarity, w: float, where: str) -> None:
        if polarity is Polarity.SIMILAR and not (0.0 <= w <= self.w_max):
            raise InputError(f"similar weight out of box at {where}: {w}")
        if polarity is Polarity.OPPOSITE and not (-self.w_max <= w <= 0.0):
            raise InputError(f"opposite weight out of box at {where}: {w}")

    def set_weight(self, group: str, polarity: Polarity, category: str, w: float):
        self._check(polarity, w, f"({group}, {polarity}, {category})")
        self.category_weights[(group, polarity, category)] = float(w)

    def get(self, group: str, polarity: Polarity, category: str) -> float:
        key = (group, polarity, category)
        if key in self.category_weights:
            return self.category_weights[key]
        gkey = (group, polarity)
        if gkey in self.group_weights:
            return self.group_weights[gkey]
        return self.default_similar if polarity is Polarity.SIMILAR else self.default_opposite

    def relation_weights(self, graph: FactorGraph) -> np.ndarray:
        """Materialize the signed per-relation weight vector for a graph."""
        m = len(graph.categories)
        out = np.empty(graph.n_relations, dtype=np.float64)
        cache: dict = {}
        for i in range(graph.n_relations):
            key = (
                int(graph.rel_group_code[i]),
                int(graph.rel_sign[i]),
                int(graph.rel_a[i] % m),
            )
            w = cache.get(key)
            if w is None:
                pol = Polarity.SIMILAR if key[1] > 0 else Polarity.OPPOSITE
                w = self.get(graph.group_names[key[0]], pol, graph.categories[key[2]])
                cache[key] = w
            out[i] = w
        return out


class PseudoLikelihood:
    """The learning objective over one key layout, with analytic gradient.

    ``pooled=True`` collapses categories, giving the per-(group, polarity)
    layout used for the fallback weights.
    """

    def __init__(self, graph: FactorGraph, lambda_l2: float = 0.01, pooled: bool = False):
        self.lambda_l2 = float(lambda_l2)
        self.pooled = pooled
        m = len(graph.categories)
        labeled = graph.labels >= 0
        both = labeled[graph.rel_a] & labeled[graph.rel_b]
        rids = np.flatnonzero(both)
        # Each evidence-evidence relation yields two observations (either
        # endpoint as the conditioned-on target).
        targets = np.concatenate([graph.rel_a[rids], graph.rel_b[rids]])
        nbrs = np.concatenate([graph.rel_b[rids], graph.rel_a[rids]])
        pol_idx = (np.concatenate([graph.rel_sign[rids]] * 2) < 0).astype(np.int64)
        gcode = np.concatenate([graph.rel_group_code[rids]] * 2).astype(np.int64)
        cat_idx = targets % m
        if pooled:
            keycode = gcode * 2 + pol_idx
        else:
            keycode = (gcode * 2 + pol_idx) * m + cat_idx

        codes, cols = np.unique(keycode, return_inverse=True)
        self.keys = []
        for code in codes:
            if pooled:
                g, p = divmod(int(code), 2)
                cat = None
            else:
                gp, c = divmod(int(code), m)
                g, p = divmod(gp, 2)
                cat = graph.categories[c]
            pol = Polarity.OPPOSITE if p else Polarity.SIMILAR
            self.keys.append((graph.group_names[g], pol, cat))
        self.signs = np.array(
            [1 if k[1] is Polarity.SIMILAR else -1 for k in self.keys], dtype=np.int64
        )

        uniq_targets, rows = np.unique(targets, return_inverse=True)
        self.n_obs = len(uniq_targets)
        self.n_keys = len(self.keys)
        self.y = (graph.labels[uniq_targets] == 1).astype(np.float64)
        self.X = np.zeros((self.n_obs, self.n_keys), dtype=np.float64)
        contrib = np.where(graph.labels[nbrs] == 1, 1.0, -1.0)
        np.add.at(self.X, (rows, cols), contrib)

        self.obs_counts = np.zeros(self.n_keys, dtype=np.int64)
        np.add.at(self.obs_counts, cols, 1)
        equal = graph.labels[targets] == graph.labels[nbrs]
        consistent = np.where(pol_idx == 0, equal, ~equal)
        self.consistent_counts = np.zeros(self.n_keys, dtype=np.int64)
        np.add.at(self.consistent_counts, cols[consistent], 1)

    def initial_weights(self) -> np.ndarray:
        """Sign-adjusted smoothed log-odds of per-key consistency."""
        cons = self.consistent_counts.astype(np.float64)
        incons = (self.obs_counts - self.consistent_counts).astype(np.float64)
        return self.signs * np.log((cons + 1.0) / (incons + 1.0))

    def objective(self, w: np.ndarray) -> float:
        z = self.X @ w
        loglik = float(np.sum(self.y * z - np.logaddexp(0.0, z)))
        return loglik - self.lambda_l2 * float(np.dot(w, w))

    def gradient(self, w: np.ndarray) -> np.ndarray:
        z = self.X @ w
        return self.X.T @ (self.y - sigmoid(z)) - 2.0 * self.lambda_l2 * w

    def project(self, w: np.ndarray, w_max: float) -> np.ndarray:
        lo = np.where(self.signs > 0, 0.0, -w_max)
        hi = np.where(self.signs > 0, w_max, 0.0)
        return np.clip(w, lo, hi)

    def fit(
        self,
        w_max: float,
        learning_rate: float = 0.1,
        max_iters: int = 500,
        grad_tol: float = 1e-6,
    ) -> tuple[np.ndarray, list[float]]:
        """Projected gradient ascent from the smoothed log-odds start.

        Returns the weight vector and the trace of accepted objective
        values (non-decreasing by construction: a step is accepted only if
        it improves the objective after projection).
        """
        w = self.project(self.initial_weights(), w_max)
        value = self.objective(w)
        trace = [value]
        for _ in range(max_iters):
            g = self.gradient(w)
            if float(np.max(np.abs(g))) <= grad_tol:
                break
            step = learning_rate
            improved = False
            while step >= 1e-12:
                cand = self.project(w + step * g, w_max)
                cand_value = self.objective(cand)
                if cand_value > value:
                    w, value = cand, cand_value
                    trace.append(value)
                    improved = True
                    break
                step *= 0.5
            if not improved:
                break
        return w, trace


def learn_weights(graph: FactorGraph, config: InferenceConfig | None = None) -> WeightTable:
    """Fit the weight table from the currently labeled variables.

    Inferred variables count as labeled, so refits during inference see
    the committed labels. With no labeled-labeled relation pairs the table
    is all defaults.
    """
    cfg = config or InferenceConfig()
    table = WeightTable(
        w_max=cfg.w_max,
        default_similar=cfg.default_similar,
        default_opposite=cfg.default_opposite,
    )
    per_cat = PseudoLikelihood(graph, cfg.lambda_l2, pooled=False)
    if per_cat.n_obs == 0:
        return table
    pooled = PseudoLikelihood(graph, cfg.lambda_l2, pooled=True)
    w_cat, _ = per_cat.fit(cfg.w_max, cfg.learning_rate, cfg.max_iters, cfg.grad_tol)
    w_grp, _ = pooled.fit(cfg.w_max, cfg.learning_rate, cfg.max_iters, cfg.grad_tol)
    for (group, pol, _), w, count in zip(pooled.keys, w_grp, pooled.obs_counts):
        if count >= cfg.min_obs:
            table.group_weights[(group, pol)] = float(w)
    for (group, pol, cat), w, count in zip(per_cat.keys, w_cat, per_cat.obs_counts):
        if count >= cfg.min_obs:
            table.category_weights[(group, pol, cat)] = float(w)
    return table
