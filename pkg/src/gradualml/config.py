"""Engine tunables."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from gradualml.errors import InputError
from gradualml.jsonl import read_json

MAX_ENUM_CAP = 20  # 2**enum_cap assignments are materialized per subgraph


@dataclass
class InferenceConfig:
    """All knobs of weight learning and gradual inference.

    ``lambda_l2`` appears as ``"lambda"`` in config files. ``seed`` feeds
    the seeded stages an orchestrator may run (relation budget sampling,
    synthesis); the inference loop itself is deterministic.
    """

    top_m: int = 64
    top_k: int = 8
    enum_cap: int = 12
    relearn_interval: int = 100
    lambda_l2: float = 0.01
    learning_rate: float = 0.1
    max_iters: int = 500
    grad_tol: float = 1e-6
    min_obs: int = 20
    seed: int = 0
    w_max: float = 5.0
    default_similar: float = 1.0
    default_opposite: float = -1.0

    def __post_init__(self):
        if self.top_m < 1 or self.top_k < 1:
            raise InputError("top_m and top_k must be >= 1")
        if self.top_k > self.top_m:
            raise InputError("top_k must not exceed top_m")
        if not (1 <= self.enum_cap <= MAX_ENUM_CAP):
            raise InputError(f"enum_cap must be in [1, {MAX_ENUM_CAP}]")
        if self.relearn_interval < 0:
            raise InputError("relearn_interval must be >= 0 (0 disables refits)")
        if self.lambda_l2 < 0 or self.learning_rate <= 0:
            raise InputError("lambda must be >= 0 and learning_rate > 0")
        if self.max_iters < 1 or self.grad_tol <= 0 or self.min_obs < 0:
            raise InputError("bad optimizer setting")
        if self.w_max <= 0:
            raise InputError("w_max must be positive")
        if not (0.0 <= self.default_similar <= self.w_max):
            raise InputError("default_similar must lie in [0, w_max]")
        if not (-self.w_max <= self.default_opposite <= 0.0):
            raise InputError("default_opposite must lie in [-w_max, 0]")

    @classmethod
    def from_dict(cls, data: dict) -> "InferenceConfig":
        data = dict(data)
        if "lambda" in data:
            data["lambda_l2"] = data.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputError(f"unknown config keys: {unknown}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "InferenceConfig":
        data = read_json(path)
        if not isinstance(data, dict):
            raise InputError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["lambda"] = d.pop("lambda_l2")
        return d
