"""Run configuration shared by the CLI, the training loop and the service.

One flat record with a default for every field; unknown keys are rejected and
the identifying hash is computed over a canonical (sorted-key) JSON dump, so
it is stable under key reordering.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields, asdict

from .structure import (
    NoiseStructure,
    per_column_partition,
    per_pixel_partition,
    per_row_partition,
    manual_partition,
    StructureError,
)
from .synthesis import GeneratorConfig
from .training import TrainConfig

__all__ = ["ConfigError", "RunConfig", "default_channels"]


class ConfigError(ValueError):
    pass


def default_channels(start: int, output: int) -> dict[int, int]:
    """Desk-scale schedule: 128 up to 16, halving afterwards, floor 16."""
    base = {4: 128, 8: 128, 16: 128, 32: 64, 64: 32}
    out = {}
    r = start
    while r <= output:
        out[r] = base[r] if r in base else max(base[64] // (r // 64), 16)
        r *= 2
    return out


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    # noise structure
    grid: int = 8
    local_dim: int = 16
    shared_scales: tuple = ((1, 1, 1), (2, 2, 1))
    style_dim: int = 128
    partition: object = "per-pixel"  # or "per-row" / "per-column" / explicit rows
    # generator
    resolution: int = 64
    channels: object = None  # {resolution: width}; None -> default schedule
    style_start: object = 16  # resolution, "all", or "off"
    mapping_depth: int = 8
    per_pixel_noise: bool = True
    # optimization
    batch_size: int = 32
    lr: float = 2e-3
    beta1: float = 0.0
    beta2: float = 0.99
    r1_gamma: float = 10.0
    r1_interval: int = 1
    ema_decay: object = None
    # run shape
    total_images: int = 100_000
    checkpoint_every: int = 50_000
    metrics_every: int = 25_000
    metrics_samples: int = 256
    ppl_samples: int = 64
    flip: bool = False

    # ---- construction ------------------------------------------------------

    @classmethod
    def field_names(cls) -> set[str]:
        return {f.name for f in fields(cls)}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - cls.field_names()
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        clean = dict(d)
        if "shared_scales" in clean:
            clean["shared_scales"] = tuple(tuple(int(x) for x in s) for s in clean["shared_scales"])
        if isinstance(clean.get("partition"), list):
            clean["partition"] = tuple(tuple(int(g) for g in row) for row in clean["partition"])
        if "channels" in clean and isinstance(clean["channels"], dict):
            clean["channels"] = {int(k): int(v) for k, v in clean["channels"].items()}
        return cls(**clean)

    def updated(self, **overrides) -> "RunConfig":
        merged = self.to_dict()
        for k, v in overrides.items():
            if v is None:
                continue
            if k not in self.field_names():
                raise ConfigError(f"unknown config key: {k}")
            merged[k] = v
        return RunConfig.from_dict(merged)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shared_scales"] = [list(s) for s in self.shared_scales]
        if isinstance(self.partition, tuple):
            d["partition"] = [list(r) for r in self.partition]
        if isinstance(self.channels, dict):
            d["channels"] = {str(k): v for k, v in self.channels.items()}
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    # ---- builders ------------------------------------------------------------

    def structure(self) -> NoiseStructure:
        part = self.partition
        if part == "per-pixel":
            partition = per_pixel_partition(self.grid, self.grid)
        elif part == "per-row":
            partition = per_row_partition(self.grid, self.grid)
        elif part == "per-column":
            partition = per_column_partition(self.grid, self.grid)
        elif isinstance(part, tuple):
            partition = manual_partition(part)
        else:
            raise ConfigError(f"unknown partition {part!r}")
        return NoiseStructure(
            grid_h=self.grid,
            grid_w=self.grid,
            partition=partition,
            local_dim=self.local_dim,
            shared_scales=self.shared_scales,
            style_dim=self.style_dim,
        )

    def resolved_style_start(self):
        ss = self.style_start
        if ss in (None, "off", "none"):
            return None
        if ss == "all":
            return "all"
        try:
            return int(ss)
        except (TypeError, ValueError):
            raise ConfigError(f"style_start must be a resolution, 'all' or 'off', got {ss!r}")

    def resolved_channels(self) -> dict[int, int]:
        if self.channels is None:
            return default_channels(self.grid, self.resolution)
        if not isinstance(self.channels, dict):
            raise ConfigError("channels must be a {resolution: width} mapping")
        return {int(k): int(v) for k, v in self.channels.items()}

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            structure=self.structure(),
            output_resolution=self.resolution,
            channels=self.resolved_channels(),
            style_start=self.resolved_style_start(),
            mapping_depth=self.mapping_depth,
            per_pixel_noise=self.per_pixel_noise,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            r1_gamma=self.r1_gamma,
            r1_interval=self.r1_interval,
            batch_size=self.batch_size,
            ema_decay=self.ema_decay,
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(open(path).read()))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}")
