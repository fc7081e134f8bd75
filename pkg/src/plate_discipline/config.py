"""Pipeline configuration: one versioned JSON file, overridable by CLI flags."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .estimator import DEFAULT_K, K_VALUES, SCALING_MODES
from .ingest import DEFAULT_CATEGORY_TABLE, DEFAULT_GEOMETRY, PitchCategory, ZoneGeometry

CONFIG_VERSION = 1


@dataclass
class PipelineConfig:
    version: int = CONFIG_VERSION
    half_width: float = DEFAULT_GEOMETRY.half_width
    ball_radius: float = DEFAULT_GEOMETRY.ball_radius
    category_table: dict = field(default_factory=lambda: {k: v.value for k, v in DEFAULT_CATEGORY_TABLE.items()})
    scaling: str = "zscore"
    k: int = DEFAULT_K
    k_values: list = field(default_factory=lambda: list(K_VALUES))
    n_bins: int = 10
    min_pa: int = 150
    min_balls: int = 250
    top_n: int = 5
    seasons: list | None = None
    seed: int = 0
    threads: int | None = None

    def errors(self) -> list[str]:
        """Every validation failure, not just the first."""
        errs = []
        if self.version != CONFIG_VERSION:
            errs.append(f"unsupported config version {self.version!r}")
        for name in ("half_width", "ball_radius"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                errs.append(f"{name} must be a positive number")
        if self.scaling not in SCALING_MODES:
            errs.append(f"scaling must be one of {SCALING_MODES}")
        for name in ("k", "n_bins", "top_n"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                errs.append(f"{name} must be an integer >= 1")
        if isinstance(self.n_bins, int) and self.n_bins == 1:
            errs.append("n_bins must be at least 2")
        if not isinstance(self.k_values, list) or not self.k_values or not all(
            isinstance(k, int) and not isinstance(k, bool) and k >= 1 for k in self.k_values
        ):
            errs.append("k_values must be a non-empty list of integers >= 1")
        for name in ("min_pa", "min_balls", "seed"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                errs.append(f"{name} must be an integer >= 0")
        if self.threads is not None and (not isinstance(self.threads, int) or self.threads < 1):
            errs.append("threads must be null or an integer >= 1")
        if self.seasons is not None:
            ok = (
                isinstance(self.seasons, list)
                and len(self.seasons) == 2
                and all(isinstance(s, int) for s in self.seasons)
                and self.seasons[0] <= self.seasons[1]
            )
            if not ok:
                errs.append("seasons must be null or [first, last] with first <= last")
        if not isinstance(self.category_table, dict) or not self.category_table:
            errs.append("category_table must be a non-empty mapping of pitch codes to categories")
        else:
            valid = {c.value for c in PitchCategory}
            bad = sorted(f"{code} -> {cat!r}" for code, cat in self.category_table.items() if cat not in valid)
            if bad:
                errs.append(f"category_table has unknown categories ({', '.join(bad)}); use {sorted(valid)}")
        return errs

    def validate(self) -> "PipelineConfig":
        errs = self.errors()
        if errs:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(errs))
        return self

    @property
    def geometry(self) -> ZoneGeometry:
        return ZoneGeometry(half_width=float(self.half_width), ball_radius=float(self.ball_radius))

    @property
    def categories(self) -> dict[str, PitchCategory]:
        return {code: PitchCategory(cat) for code, cat in self.category_table.items()}

    def season_range(self):
        return tuple(self.seasons) if self.seasons is not None else None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from None
        return cls.from_dict(data)
