"""Factor-graph domain types, construction, and label-state bookkeeping.

A workload is a grid of variables: one variable per (instance, category)
pair. Train-split instances enter as evidence (fixed 0/1 labels per
category); test-split instances enter unlabeled and are committed exactly
once during inference. Pairwise relations connect two variables of the
same category with a polarity (similar or opposite), a group tag naming
the extraction source, and a confidence.

Storage is array-backed (numpy) so the scoring kernels can operate on the
graph without conversion; the dataclasses below are read-only views.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from gradualml.errors import InputError, InvariantError
from gradualml.jsonl import read_records

UNLABELED = "unlabeled"
EVIDENCE = "evidence"
INFERRED = "inferred"

_STATE_NAMES = (UNLABELED, EVIDENCE, INFERRED)


class Polarity(str, Enum):
    SIMILAR = "similar"
    OPPOSITE = "opposite"

    @property
    def sign(self) -> int:
        return 1 if self is Polarity.SIMILAR else -1


@dataclass(frozen=True)
class Relation:
    """Undirected pairwise relation between two variables of one category.

    Endpoints are stored in canonical order (a < b) so duplicate detection
    and iteration are deterministic.
    """

    a: int
    b: int
    polarity: Polarity
    group: str
    confidence: float = 1.0

    def __post_init__(self):
        if self.a == self.b:
            raise InputError(f"self-relation on variable {self.a}")
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)
        if not self.group:
            raise InputError("relation group must be non-empty")
        if not isinstance(self.polarity, Polarity):
            object.__setattr__(self, "polarity", Polarity(self.polarity))
        if not (0.0 < self.confidence <= 1.0):
            raise InputError(
                f"relation confidence must be in (0, 1], got {self.confidence}"
            )

    @property
    def key(self) -> tuple[int, int, str, Polarity]:
        return (self.a, self.b, self.group, self.polarity)


@dataclass(frozen=True)
class Variable:
    """Read-only view of one (instance, category) node."""

    id: int
    instance: str
    category: str
    state: str
    label: int | None = None
    probability: float | None = None
    commit_order: int | None = None


@dataclass(frozen=True)
class CommitRecord:
    variable: int
    label: int
    probability: float
    method: str


@dataclass(frozen=True)
class InstanceRecord:
    id: str
    split: str
    labels: dict[str, int] | None = None


class FactorGraph:
    """Variables + relations with adjacency indices and a commit log.

    Construct via :func:`build_graph`. Variable ids are dense:
    ``id = instance_index * n_categories + category_index``, which makes
    ids stable across rebuilds from the same instance/category lists.

    Reads are thread-safe between mutations; ``commit_label`` requires
    exclusive access (single-writer contract).
    """

    def __init__(
        self,
        instances: Sequence[str],
        categories: Sequence[str],
        relations: Sequence[Relation],
        state: np.ndarray,
        label: np.ndarray,
    ):
        self.instances = tuple(instances)
        self.categories = tuple(categories)
        self._inst_index = {s: i for i, s in enumerate(self.instances)}
        self._cat_index = {c: i for i, c in enumerate(self.categories)}
        n = len(self.instances) * len(self.categories)
        self._state = state
        self._label = label
        self._prob = np.where(state == 1, label.astype(np.float64), np.nan)
        self._order = np.zeros(n, dtype=np.int64)
        self._next_order = 1
        self.commit_log: list[CommitRecord] = []
        self._init_relations(relations)

    def _init_relations(self, relations: Sequence[Relation]) -> None:
        m = len(self.categories)
        n = self.n_variables
        seen: dict[tuple, int] = {}
        groups: list[str] = []
        group_index: dict[str, int] = {}
        a_arr = np.empty(len(relations), dtype=np.int64)
        b_arr = np.empty(len(relations), dtype=np.int64)
        conf = np.empty(len(relations), dtype=np.float64)
        sign = np.empty(len(relations), dtype=np.int8)
        gcode = np.empty(len(relations), dtype=np.int32)
        for i, rel in enumerate(relations):
            if not (0 <= rel.a < n and 0 <= rel.b < n):
                raise InputError(f"relation {i} references unknown variable: {rel}")
            if rel.a % m != rel.b % m:
                raise InputError(
                    f"relation {i} endpoints are in different categories: {rel}"
                )
            if rel.key in seen:
                raise InputError(
                    f"duplicate relation {rel.key} at positions {seen[rel.key]} and {i}"
                )
            seen[rel.key] = i
            if rel.group not in group_index:
                group_index[rel.group] = len(groups)
                groups.append(rel.group)
            a_arr[i] = rel.a
            b_arr[i] = rel.b
            conf[i] = rel.confidence
            sign[i] = rel.polarity.sign
            gcode[i] = group_index[rel.group]
        self.rel_a = a_arr
        self.rel_b = b_arr
        self.rel_conf = conf
        self.rel_sign = sign
        self.rel_group_code = gcode
        self.group_names = tuple(groups)
        # CSR adjacency, relation ids ascending within each variable's slice.
        counts = np.zeros(n + 1, dtype=np.int64)
        for v in (a_arr, b_arr):
            np.add.at(counts, v + 1, 1)
        self.adj_indptr = np.cumsum(counts)
        nnz = int(self.adj_indptr[-1])
        self.adj_rel = np.empty(nnz, dtype=np.int64)
        self.adj_nbr = np.empty(nnz, dtype=np.int64)
        cursor = self.adj_indptr[:-1].copy()
        for rid in range(len(relations)):
            for va, vb in ((a_arr[rid], b_arr[rid]), (b_arr[rid], a_arr[rid])):
                pos = cursor[va]
                self.adj_rel[pos] = rid
                self.adj_nbr[pos] = vb
                cursor[va] += 1

    # -- lookups ---------------------------------------------------------

    @property
    def n_variables(self) -> int:
        return len(self.instances) * len(self.categories)

    @property
    def n_relations(self) -> int:
        return len(self.rel_a)

    def var_id(self, instance: str, category: str) -> int:
        try:
            ii = self._inst_index[instance]
        except KeyError:
            raise InputError(f"unknown instance: {instance!r}") from None
        try:
            ci = self._cat_index[category]
        except KeyError:
            raise InputError(f"unknown category: {category!r}") from None
        return ii * len(self.categories) + ci

    def var_instance(self, var_id: int) -> str:
        return self.instances[var_id // len(self.categories)]

    def var_category(self, var_id: int) -> str:
        return self.categories[var_id % len(self.categories)]

    def var_category_index(self, var_id: int) -> int:
        return var_id % len(self.categories)

    def variable(self, var_id: int) -> Variable:
        s = int(self._state[var_id])
        label = int(self._label[var_id]) if s != 0 else None
        prob = float(self._prob[var_id]) if s != 0 else None
        order = int(self._order[var_id]) if s == 2 else None
        return Variable(
            id=var_id,
            instance=self.var_instance(var_id),
            category=self.var_category(var_id),
            state=_STATE_NAMES[s],
            label=label,
            probability=prob,
            commit_order=order,
        )

    def relation(self, rel_id: int) -> Relation:
        return Relation(
            a=int(self.rel_a[rel_id]),
            b=int(self.rel_b[rel_id]),
            polarity=Polarity.SIMILAR if self.rel_sign[rel_id] > 0 else Polarity.OPPOSITE,
            group=self.group_names[self.rel_group_code[rel_id]],
            confidence=float(self.rel_conf[rel_id]),
        )

    def state_name(self, var_id: int) -> str:
        return _STATE_NAMES[int(self._state[var_id])]

    def is_labeled(self, var_id: int) -> bool:
        return self._state[var_id] != 0

    def label_of(self, var_id: int) -> int:
        if self._state[var_id] == 0:
            raise InvariantError(f"variable {var_id} has no label")
        return int(self._label[var_id])

    def unlabeled_ids(self) -> np.ndarray:
        return np.flatnonzero(self._state == 0)

    def evidence_ids(self) -> np.ndarray:
        return np.flatnonzero(self._state == 1)

    @property
    def labels(self) -> np.ndarray:
        """int8 label array; -1 means unlabeled. Kernel input, do not mutate."""
        return self._label

    # -- mutation --------------------------------------------------------

    def commit_label(
        self, var_id: int, label: int, probability: float, method: str = "inferred"
    ) -> "FactorGraph":
        """Fix an unlabeled variable's label; appends to the commit log.

        Committing an evidence or already-inferred variable is an invariant
        breach, not a recoverable input error.
        """
        if label not in (0, 1):
            raise InputError(f"label must be 0 or 1, got {label}")
        if not (0.0 <= probability <= 1.0):
            raise InputError(f"probability must be in [0, 1], got {probability}")
        if method not in ("inferred", "fallback"):
            raise InputError(f"unknown commit method: {method!r}")
        if self._state[var_id] != 0:
            raise InvariantError(
                f"variable {var_id} is {self.state_name(var_id)}; labels are immutable"
            )
        self._state[var_id] = 2
        self._label[var_id] = label
        self._prob[var_id] = probability
        self._order[var_id] = self._next_order
        self._next_order += 1
        self.commit_log.append(CommitRecord(var_id, label, probability, method))
        return self

    # -- queries used by inference ---------------------------------------

    def labeled_neighbors(self, var_id: int) -> list[tuple[Relation, int]]:
        """Relations whose other endpoint is labeled, with that label.

        Deterministic order: ascending relation id.
        """
        if not (0 <= var_id < self.n_variables):
            raise InputError(f"unknown variable id: {var_id}")
        lo, hi = self.adj_indptr[var_id], self.adj_indptr[var_id + 1]
        out = []
        for pos in range(lo, hi):
            nbr = int(self.adj_nbr[pos])
            if self._state[nbr] != 0:
                out.append((int(self.adj_rel[pos]), int(self._label[nbr])))
        out.sort(key=lambda t: t[0])
        return [(self.relation(rid), lab) for rid, lab in out]

    def evidence_positive_rate(self, category_index: int) -> float:
        """Fraction of evidence variables of a category carrying label 1."""
        m = len(self.categories)
        idx = np.arange(category_index, self.n_variables, m)
        ev = idx[self._state[idx] == 1]
        if len(ev) == 0:
            return 0.5
        return float(np.mean(self._label[ev] == 1))


def build_graph(
    instances: Iterable[InstanceRecord | tuple],
    categories: Sequence[str],
    relations: Sequence[Relation] = (),
) -> FactorGraph:
    """Materialize the variable grid and relation arrays.

    Every train instance must carry a 0/1 label for every category; test
    instances become unlabeled variables. Relations must reference existing
    variables (build an empty graph first to resolve ids when extracting).
    """
    cats = list(categories)
    if not cats:
        raise InputError("categories must be non-empty")
    if len(set(cats)) != len(cats):
        raise InputError("duplicate category names")
    for c in cats:
        if not c:
            raise InputError("category names must be non-empty")

    recs: list[InstanceRecord] = []
    for item in instances:
        rec = item if isinstance(item, InstanceRecord) else InstanceRecord(*item)
        recs.append(rec)
    ids = [r.id for r in recs]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise InputError(f"duplicate instance ids: {dup}")
    for r in recs:
        if not r.id:
            raise InputError("instance ids must be non-empty")
        if r.split not in ("train", "test"):
            raise InputError(f"instance {r.id!r}: unknown split {r.split!r}")

    m = len(cats)
    n = len(recs) * m
    state = np.zeros(n, dtype=np.int8)
    label = np.full(n, -1, dtype=np.int8)
    for ii, r in enumerate(recs):
        if r.split != "train":
            continue
        if r.labels is None:
            raise InputError(f"train instance {r.id!r} is missing labels")
        missing = [c for c in cats if c not in r.labels]
        if missing:
            raise InputError(f"train instance {r.id!r} is missing labels for {missing}")
        for ci, c in enumerate(cats):
            val = r.labels[c]
            if val not in (0, 1):
                raise InputError(f"train instance {r.id!r}: label for {c!r} must be 0/1")
            state[ii * m + ci] = 1
            label[ii * m + ci] = val
    return FactorGraph(ids, cats, list(relations), state, label)


def load_instances(path: str | Path) -> list[InstanceRecord]:
    """Read the instances file (JSON Lines: id, split, labels)."""
    recs = []
    seen: dict[str, int] = {}
    for lineno, rec in read_records(path):
        if "id" not in rec or "split" not in rec:
            raise InputError(f"{path}:{lineno}: instance record needs 'id' and 'split'")
        iid = rec["id"]
        if not isinstance(iid, str) or not iid:
            raise InputError(f"{path}:{lineno}: 'id' must be a non-empty string")
        if iid in seen:
            raise InputError(
                f"{path}:{lineno}: duplicate instance {iid!r} (first at line {seen[iid]})"
            )
        seen[iid] = lineno
        split = rec["split"]
        if split not in ("train", "test"):
            raise InputError(f"{path}:{lineno}: split must be 'train' or 'test'")
        labels = rec.get("labels")
        if split == "train":
            if not isinstance(labels, dict) or not labels:
                raise InputError(f"{path}:{lineno}: train instance {iid!r} needs 'labels'")
            labels = {str(k): int(v) for k, v in labels.items()}
        else:
            labels = None  # ignored for test rows
        recs.append(InstanceRecord(iid, split, labels))
    return recs


def categories_from_instances(records: Sequence[InstanceRecord]) -> list[str]:
    """The fixed category set: sorted label keys shared by every train row."""
    train = [r for r in records if r.split == "train"]
    if not train:
        raise InputError("no train instances; cannot determine the category set")
    cats = sorted(train[0].labels)  # type: ignore[arg-type]
    catset = set(cats)
    for r in train:
        if set(r.labels) != catset:  # type: ignore[arg-type]
            raise InputError(
                f"train instance {r.id!r} labels {sorted(r.labels)} do not match {cats}"
            )
    return cats


def replay_commit_log(graph: FactorGraph, log: Sequence[CommitRecord]) -> FactorGraph:
    """Apply a recorded commit sequence to a freshly built graph."""
    for rec in log:
        graph.commit_label(rec.variable, rec.label, rec.probability, rec.method)
    return graph
