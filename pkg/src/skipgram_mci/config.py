"""Run configuration for the command-line harness, read from YAML.

A minimal file::

    train_manifest: data/manifest.csv
    validation_manifest: data/validation_manifest.csv
    feature_set: all-skip-grams        # or a list such as [[2, 1], [3, 2]]
    k_top: 200
    k_list: [10, 50, 100, 200, 500, 1000]
    seed: 0
    out_dir: out
    models:                            # omitted -> the four default models
      - {name: SVM, variant: SVM_SMO, C: 0.9375, gamma: 1.0124e-4}
    grid:                              # omitted -> built-in per-family grid
      SVM:
        - {variant: SVM_SMO, C: 0.5}
        - {variant: SVM_SMO, C: 2.0}

Relative paths are resolved against the directory holding the config file.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .classifiers import ModelSpec, baseline_svm, table1_models
from .errors import SkipgramMCIError
from .features import LeakageMode, RankingMethod, Weighting
from .skipgrams import COMPOUND, FeatureSetSpec, feature_set
from .transcripts import VisitPolicy


class ConfigError(SkipgramMCIError):
    """Invalid or unreadable run configuration."""


@dataclass(frozen=True)
class RunConfig:
    train_manifest: Path | None = None
    validation_manifest: Path | None = None
    feature_set: FeatureSetSpec = COMPOUND
    k_top: int = 200
    k_list: tuple[int, ...] = (10, 50, 100, 200, 500, 1000)
    grid_k_top: int = 1000
    ranking: RankingMethod = RankingMethod.INFO_GAIN
    leakage: LeakageMode = LeakageMode.GLOBAL
    weighting: Weighting = Weighting.COUNT
    folds: int = 10
    seed: int = 0
    out_dir: Path = Path("out")
    models: tuple[ModelSpec, ...] = field(default_factory=lambda: tuple(table1_models()))
    baseline: ModelSpec | None = field(default_factory=baseline_svm)
    train_visit: VisitPolicy = VisitPolicy.LAST
    validation_visit: VisitPolicy = VisitPolicy.SECOND_TO_LAST
    speakers: tuple[str, ...] = ("PAR",)
    grid_objective: str = "AUC"
    allow_shared_participants: bool = False
    grid: dict[str, tuple[ModelSpec, ...]] | None = None  # None -> built-in grid

    def __post_init__(self):
        if self.k_top < 1 or self.grid_k_top < 1:
            raise ConfigError("k_top and grid_k_top must be >= 1")
        if not self.k_list or any(k < 1 for k in self.k_list):
            raise ConfigError("k_list must be a non-empty list of values >= 1")
        if list(self.k_list) != sorted(set(self.k_list)):
            raise ConfigError(f"k_list must be strictly ascending, got {list(self.k_list)}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if not self.models and self.baseline is None:
            raise ConfigError("no models configured")

    def check_files(self, *, need_validation: bool = False) -> None:
        """Raise :class:`ConfigError` when a referenced manifest does not exist."""
        if self.train_manifest is None:
            raise ConfigError("train_manifest is not set")
        paths = [("train_manifest", self.train_manifest)]
        if need_validation:
            if self.validation_manifest is None:
                raise ConfigError("validation_manifest is not set")
            paths.append(("validation_manifest", self.validation_manifest))
        for key, path in paths:
            if not Path(path).is_file():
                raise ConfigError(f"{key} not found: {path}")


_ENUM_FIELDS = {
    "ranking": RankingMethod,
    "leakage": LeakageMode,
    "weighting": Weighting,
    "train_visit": VisitPolicy,
    "validation_visit": VisitPolicy,
}


def config_from_dict(data: dict, base_dir: str | Path = ".") -> RunConfig:
    """Build a :class:`RunConfig` from plain data (as parsed from YAML)."""
    base = Path(base_dir)
    data = dict(data or {})
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw: dict = {}
    try:
        for key in ("train_manifest", "validation_manifest", "out_dir"):
            if data.get(key) is not None:
                kw[key] = base / str(data[key])
        if "feature_set" in data:
            kw["feature_set"] = feature_set(data["feature_set"])
        for key in ("k_top", "grid_k_top", "folds", "seed"):
            if key in data:
                kw[key] = int(data[key])
        if "k_list" in data:
            kw["k_list"] = tuple(int(k) for k in data["k_list"])
        for key, enum_cls in _ENUM_FIELDS.items():
            if key in data:
                kw[key] = enum_cls(str(data[key]).upper())
        if "models" in data:
            kw["models"] = tuple(ModelSpec.from_dict(m) for m in data["models"] or [])
        if "baseline" in data:
            b = data["baseline"]
            kw["baseline"] = None if b in (None, False) else baseline_svm() if b is True else ModelSpec.from_dict(b)
        if "speakers" in data:
            kw["speakers"] = tuple(str(s) for s in data["speakers"])
        if "grid_objective" in data:
            kw["grid_objective"] = str(data["grid_objective"]).upper()
        if data.get("grid") is not None:
            kw["grid"] = {
                str(family): tuple(ModelSpec.from_dict({"name": str(family), **m}) for m in specs)
                for family, specs in data["grid"].items()
            }
        if "allow_shared_participants" in data:
            kw["allow_shared_participants"] = bool(data["allow_shared_participants"])
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    return RunConfig(**kw)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed YAML: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data or {}, path.parent)


def models_fragment(specs) -> str:
    """YAML text with a ``models:`` list that :func:`load_config` accepts."""
    return yaml.safe_dump({"models": [s.to_dict() for s in specs]}, sort_keys=False)


def with_overrides(config: RunConfig, **changes) -> RunConfig:
    """Copy of ``config`` with the non-None ``changes`` applied."""
    return replace(config, **{k: v for k, v in changes.items() if v is not None})
