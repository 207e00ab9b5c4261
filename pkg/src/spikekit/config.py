"""YAML run-configuration loading with strict validation.

Configs are nested key/value sections. Unknown keys are rejected so a
typo fails loudly instead of silently falling back to a default.
"""

from __future__ import annotations

from dataclasses import dataclass

import yaml

from .allocation import TEXT, VISUAL, allocate_layers, allocate_layers_reverse, allocate_modality, allocate_uniform
from .codec import BINARY, UNARY
from .errors import ConfigError
from .quant import NONPOLAR, POLAR

ALLOCATION_MODES = ("uniform", "modality", "med", "med-reverse")


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping: {path}")
    return data


def check_keys(mapping: dict, allowed, context: str):
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")


def section(data: dict, key: str, context: str, required: bool = True) -> dict:
    if key not in data:
        if required:
            raise ConfigError(f"{context}: missing section '{key}'")
        return {}
    value = data[key]
    if not isinstance(value, dict):
        raise ConfigError(f"{context}.{key}: expected a mapping")
    return value


def get_int(mapping: dict, key: str, context: str, default=None, minimum=None):
    if key not in mapping:
        if default is None:
            raise ConfigError(f"{context}: missing '{key}'")
        return default
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{context}.{key}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{context}.{key}: must be >= {minimum}, got {value}")
    return value


def get_float(mapping: dict, key: str, context: str, default=None, positive=False):
    if key not in mapping:
        if default is None:
            raise ConfigError(f"{context}: missing '{key}'")
        return default
    value = mapping[key]
    if isinstance(value, str):
        # YAML 1.1 resolves exponents without a sign ("333.0e6") as strings
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"{context}.{key}: expected a number, got {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{context}.{key}: expected a number, got {value!r}")
    value = float(value)
    if positive and not value > 0:
        raise ConfigError(f"{context}.{key}: must be positive, got {value}")
    return value


def get_str(mapping: dict, key: str, context: str, choices=None, default=None):
    if key not in mapping:
        if default is None:
            raise ConfigError(f"{context}: missing '{key}'")
        return default
    value = mapping[key]
    if not isinstance(value, str):
        raise ConfigError(f"{context}.{key}: expected a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(f"{context}.{key}: expected one of {list(choices)}, got {value!r}")
    return value


@dataclass(frozen=True)
class ModelSettings:
    layers: int
    width: int
    seed: int


@dataclass(frozen=True)
class InputSettings:
    visual_tokens: int
    text_tokens: int
    seed: int
    layout: str


@dataclass(frozen=True)
class BudgetSettings:
    target: float
    t_hi: int
    t_lo: int


@dataclass(frozen=True)
class AllocationSettings:
    mode: str
    t: int | None = None
    t_visual: int | None = None
    t_text: int | None = None
    visual: BudgetSettings | None = None
    text: BudgetSettings | None = None

    @property
    def needs_profile(self) -> bool:
        return self.mode in ("med", "med-reverse")


def parse_model(data: dict, context: str) -> ModelSettings:
    sec = section(data, "model", context)
    check_keys(sec, ("layers", "width", "seed"), f"{context}.model")
    return ModelSettings(
        layers=get_int(sec, "layers", f"{context}.model", minimum=1),
        width=get_int(sec, "width", f"{context}.model", minimum=1),
        seed=get_int(sec, "seed", f"{context}.model", default=0),
    )


def parse_input(data: dict, context: str) -> InputSettings:
    sec = section(data, "input", context)
    check_keys(sec, ("visual_tokens", "text_tokens", "seed", "layout"), f"{context}.input")
    settings = InputSettings(
        visual_tokens=get_int(sec, "visual_tokens", f"{context}.input", minimum=0),
        text_tokens=get_int(sec, "text_tokens", f"{context}.input", minimum=0),
        seed=get_int(sec, "seed", f"{context}.input", default=0),
        layout=get_str(sec, "layout", f"{context}.input",
                       choices=("interleaved", "blocked"), default="interleaved"),
    )
    if settings.visual_tokens + settings.text_tokens == 0:
        raise ConfigError(f"{context}.input: at least one token is required")
    return settings


def parse_codec(data: dict, context: str):
    sec = section(data, "codec", context)
    check_keys(sec, ("kind", "mode"), f"{context}.codec")
    kind = get_str(sec, "kind", f"{context}.codec", choices=(UNARY, BINARY))
    default_mode = NONPOLAR if kind == UNARY else POLAR
    mode = get_str(sec, "mode", f"{context}.codec", choices=(POLAR, NONPOLAR),
                   default=default_mode)
    if kind == UNARY and mode != NONPOLAR:
        raise ConfigError(f"{context}.codec: the unary codec requires non-polar mode")
    return kind, mode


def _parse_budget(sec: dict, context: str) -> BudgetSettings:
    check_keys(sec, ("target", "t_hi", "t_lo"), context)
    return BudgetSettings(
        target=get_float(sec, "target", context, positive=True),
        t_hi=get_int(sec, "t_hi", context, minimum=1),
        t_lo=get_int(sec, "t_lo", context, minimum=1),
    )


def parse_allocation(data: dict, context: str) -> AllocationSettings:
    sec = section(data, "allocation", context)
    mode = get_str(sec, "mode", f"{context}.allocation", choices=ALLOCATION_MODES)
    ctx = f"{context}.allocation"
    if mode == "uniform":
        check_keys(sec, ("mode", "t"), ctx)
        return AllocationSettings(mode=mode, t=get_int(sec, "t", ctx, minimum=1))
    if mode == "modality":
        check_keys(sec, ("mode", "t_visual", "t_text"), ctx)
        return AllocationSettings(
            mode=mode,
            t_visual=get_int(sec, "t_visual", ctx, minimum=1),
            t_text=get_int(sec, "t_text", ctx, minimum=1),
        )
    check_keys(sec, ("mode", "visual", "text"), ctx)
    return AllocationSettings(
        mode=mode,
        visual=_parse_budget(section(sec, "visual", ctx), f"{ctx}.visual"),
        text=_parse_budget(section(sec, "text", ctx), f"{ctx}.text"),
    )


def build_allocation(settings: AllocationSettings, profile=None):
    """Materialize an allocation; med modes need a drift profile."""
    if settings.mode == "uniform":
        return allocate_uniform(settings.t)
    if settings.mode == "modality":
        return allocate_modality(settings.t_visual, settings.t_text)
    if profile is None:
        raise ConfigError(f"allocation mode '{settings.mode}' needs a drift profile")
    build = allocate_layers if settings.mode == "med" else allocate_layers_reverse
    visual = build(profile, VISUAL, settings.visual.target, settings.visual.t_hi,
                   settings.visual.t_lo)
    text = build(profile, TEXT, settings.text.target, settings.text.t_hi,
                 settings.text.t_lo)
    return visual.merged(text)
