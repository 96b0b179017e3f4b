"""Run configuration: a strict YAML schema plus master-seed fan-out.

Every command is reproducible from a config file and one master seed.  Sub
seeds are derived, never drawn: ``derive_seed(master, label)`` hashes the
master seed with a stable string label (for example ``"gen/s03"``), so any
sub-artifact can be regenerated in isolation.  Unknown keys anywhere in the
config are rejected to catch typos early.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .augment import AugmentConfig
from .net import ModelConfig, TrainConfig
from .signals import Scenario


def derive_seed(master_seed: int, label: str) -> int:
    """Stable 63-bit child seed from a master seed and a string label."""
    digest = hashlib.blake2b(
        f"{master_seed}:{label}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little") >> 1


@dataclass(frozen=True)
class GenConfig:
    subjects: int = 8
    scenarios: tuple[Scenario, ...] = tuple(Scenario)
    trials_per_gesture: int = 15
    noise: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PipelineConfig:
    n_jobs: int = 1
    strategies: tuple[str, ...] = ("s1", "s2", "s3")
    augment_enabled: bool = True
    max_windows_per_class: int | None = None


@dataclass(frozen=True)
class RunConfig:
    master_seed: int = 42
    gen: GenConfig = field(default_factory=GenConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)


_GEN_KEYS = {"subjects", "scenarios", "trials_per_gesture", "noise"}
_AUGMENT_KEYS = {"delta_range", "gauss_mu", "gauss_sigma"}
_MODEL_KEYS = {
    "in_channels", "window", "conv_channels", "kernel_size",
    "conv_strides", "attn_heads", "lstm_hidden", "n_classes",
}
_TRAIN_KEYS = {"lr", "batch_size", "max_epochs", "patience", "val_fraction"}
_PIPELINE_KEYS = {"n_jobs", "strategies", "augment_enabled", "max_windows_per_class"}
_TOP_KEYS = {"master_seed", "gen", "augment", "model", "train", "pipeline"}


def _require_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ValueError(f"unknown config key(s) in {where}: {sorted(unknown)}")


def _parse_noise(raw: dict) -> dict:
    noise = {}
    for name, params in raw.items():
        scenario = Scenario(name)
        _require_keys(params, {"drift_amp", "jitter_sigma"}, f"gen.noise.{name}")
        noise[scenario] = (
            float(params.get("drift_amp", scenario.drift_amp)),
            float(params.get("jitter_sigma", scenario.jitter_sigma)),
        )
    return noise


def parse_config(raw: dict | None, seed_override: int | None = None) -> RunConfig:
    """Validate a raw mapping into a :class:`RunConfig`.

    Raises ``ValueError`` on unknown keys or malformed values.
    """
    raw = dict(raw or {})
    _require_keys(raw, _TOP_KEYS, "top level")
    master_seed = int(raw.get("master_seed", 42))
    if seed_override is not None:
        master_seed = seed_override

    gen_raw = dict(raw.get("gen") or {})
    _require_keys(gen_raw, _GEN_KEYS, "gen")
    gen = GenConfig(
        subjects=int(gen_raw.get("subjects", 8)),
        scenarios=tuple(
            Scenario(s) for s in gen_raw.get("scenarios", [s.value for s in Scenario])
        ),
        trials_per_gesture=int(gen_raw.get("trials_per_gesture", 15)),
        noise=_parse_noise(dict(gen_raw.get("noise") or {})),
    )

    aug_raw = dict(raw.get("augment") or {})
    _require_keys(aug_raw, _AUGMENT_KEYS, "augment")
    augment = AugmentConfig(
        delta_range=tuple(aug_raw.get("delta_range", (1.0, 5.0))),
        gauss_mu=float(aug_raw.get("gauss_mu", 0.0)),
        gauss_sigma=float(aug_raw.get("gauss_sigma", 0.5)),
        seed=derive_seed(master_seed, "augment"),
    )

    model_raw = dict(raw.get("model") or {})
    _require_keys(model_raw, _MODEL_KEYS, "model")
    if "conv_strides" in model_raw:
        model_raw["conv_strides"] = tuple(model_raw["conv_strides"])
    model = ModelConfig(**model_raw)

    train_raw = dict(raw.get("train") or {})
    _require_keys(train_raw, _TRAIN_KEYS, "train")
    train = TrainConfig(seed=derive_seed(master_seed, "train"), **train_raw)

    eval_raw = dict(raw.get("pipeline") or {})
    _require_keys(eval_raw, _PIPELINE_KEYS, "pipeline")
    strategies = eval_raw.get("strategies", ["s1", "s2", "s3"])
    if strategies in ("none", None):
        strategies = []
    unknown = set(strategies) - {"s1", "s2", "s3"}
    if unknown:
        raise ValueError(f"unknown strategies: {sorted(unknown)}")
    pipeline = PipelineConfig(
        n_jobs=int(eval_raw.get("n_jobs", 1)),
        strategies=tuple(strategies),
        augment_enabled=bool(eval_raw.get("augment_enabled", True)),
        max_windows_per_class=(
            None
            if eval_raw.get("max_windows_per_class") is None
            else int(eval_raw["max_windows_per_class"])
        ),
    )

    return RunConfig(
        master_seed=master_seed,
        gen=gen,
        augment=augment,
        model=model,
        train=train,
        pipeline=pipeline,
    )


def load_config(path: str | Path | None, seed_override: int | None = None) -> RunConfig:
    """Load and validate a YAML config file; None gives the defaults."""
    raw = None
    if path is not None:
        raw = yaml.safe_load(Path(path).read_text())
    return parse_config(raw, seed_override)


def strategy_flags(strategies: tuple[str, ...]) -> tuple[bool, bool, bool]:
    return ("s1" in strategies, "s2" in strategies, "s3" in strategies)
