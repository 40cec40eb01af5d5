"""Experiment configuration: nested dataclasses read from a flat ``key = value`` file.

Keys address fields directly (``seed = 3``) or through a section prefix
(``classifier.epochs = 200``, ``synthetic.p_out = 0.05``).  Lines starting
with ``#`` are comments.  Values are parsed against the declared field type,
and list fields take comma-separated values.
"""
from __future__ import annotations

import types
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .classifier import ClassifierHyper
from .data import FEATURE_KINDS, SyntheticSpec
from .env import VARIANTS, AttackConfig
from .errors import ConfigurationError, InvalidInputError
from .policy import AttackerHyper

SECTIONS = ("synthetic", "classifier", "attacker", "attack")
SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    dataset: str = SYNTHETIC          # "synthetic" or a TU dataset directory
    features: str = "degree"
    split_a: int = 50
    split_b: int = 30
    split_c: int = 20
    variants: tuple[str, ...] = ("rewatt", "rewatt-a", "rewatt-n", "random", "random-s")
    budgets_p: tuple[float, ...] = (0.03,)
    budgets_k: tuple[int, ...] = ()
    # independent attacks per test graph; rates average over all of them
    eval_repeats: int = 1
    classifier_checkpoint: str = ""
    attacker_checkpoint: str = ""
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    classifier: ClassifierHyper = field(default_factory=ClassifierHyper)
    attacker: AttackerHyper = field(default_factory=AttackerHyper)
    attack: AttackConfig = field(default_factory=AttackConfig)

    def __post_init__(self):
        split = (self.split_a, self.split_b, self.split_c)
        if min(split) <= 0 or sum(split) != 100:
            raise InvalidInputError(f"split ratios must be positive and sum to 100, got {split}")
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad or not self.variants:
            raise InvalidInputError(f"unknown variants {bad}; expected a subset of {VARIANTS}")
        if not self.budgets_p and not self.budgets_k:
            raise InvalidInputError("at least one budget (budgets_p or budgets_k) is required")
        if any(not 0 < p < 1 for p in self.budgets_p):
            raise InvalidInputError("budget ratios must lie in (0, 1)")
        if any(k < 1 for k in self.budgets_k):
            raise InvalidInputError("fixed budgets must be at least 1")
        if self.eval_repeats < 1:
            raise InvalidInputError("eval_repeats must be at least 1")
        if self.features not in FEATURE_KINDS:
            raise InvalidInputError(f"unknown feature kind {self.features!r}")
        if self.attacker.episodes_per_graph < 1:
            raise InvalidInputError("attacker.episodes_per_graph must be at least 1")

    @property
    def is_synthetic(self) -> bool:
        return self.dataset == SYNTHETIC

    def budget_configs(self) -> list[tuple[str, AttackConfig]]:
        """``(label, AttackConfig)`` for every requested budget."""
        out = [(f"p={p:g}", replace(self.attack, budget_mode="ratio", p=p))
               for p in self.budgets_p]
        out += [(f"k={k}", replace(self.attack, budget_mode="fixed", fixed_k=k))
                for k in self.budgets_k]
        return out

    def to_flat(self) -> dict[str, str]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in SECTIONS:
                for sf in fields(v):
                    out[f"{f.name}.{sf.name}"] = _format(getattr(v, sf.name))
            else:
                out[f.name] = _format(v)
        return out

    def dumps(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in sorted(self.to_flat().items()))


def _format(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(_format(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_scalar(raw: str, typ, key: str):
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is str:
            return raw
    except ValueError:
        pass
    else:
        raise ConfigurationError(f"{key}: unsupported field type {typ!r}")
    raise ConfigurationError(f"{key}: cannot parse {raw!r} as {typ.__name__}")


def parse_value(raw: str, typ, key: str):
    raw = raw.strip()
    origin = typing.get_origin(typ)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(typ) if a is not type(None)]
        if raw.lower() in ("none", ""):
            return None
        return parse_value(raw, args[0], key)
    if origin is tuple:
        inner = typing.get_args(typ)[0]
        if not raw:
            return ()
        return tuple(_parse_scalar(p.strip(), inner, key) for p in raw.split(","))
    return _parse_scalar(raw, typ, key)


def _hints(cls) -> dict:
    return typing.get_type_hints(cls)


def apply_overrides(cfg: ExperimentConfig, pairs: dict[str, str]) -> ExperimentConfig:
    """Return ``cfg`` with the flat ``key -> raw string`` pairs applied and validated."""
    top_hints = _hints(ExperimentConfig)
    top: dict = {}
    nested: dict[str, dict] = {s: {} for s in SECTIONS}
    for key, raw in pairs.items():
        if "." in key:
            section, name = key.split(".", 1)
            if section not in SECTIONS:
                raise ConfigurationError(f"unknown config section {section!r} in {key!r}")
            cls = type(getattr(cfg, section))
            hints = _hints(cls)
            if name not in hints:
                raise ConfigurationError(f"unknown config key {key!r}")
            nested[section][name] = parse_value(raw, hints[name], key)
        else:
            if key not in top_hints or key in SECTIONS:
                raise ConfigurationError(f"unknown config key {key!r}")
            top[key] = parse_value(raw, top_hints[key], key)
    try:
        for section, vals in nested.items():
            if vals:
                top[section] = replace(getattr(cfg, section), **vals)
        return replace(cfg, **top)
    except InvalidInputError as exc:
        raise ConfigurationError(str(exc)) from exc


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in pairs:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def load_config(path=None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Defaults, then the file at ``path`` (if any), then ``overrides``."""
    cfg = ExperimentConfig()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigurationError(f"config file not found: {p}")
        cfg = apply_overrides(cfg, parse_config_text(p.read_text(), str(p)))
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg
