"""Firing-rate and FLOPs accounting for spike-driven inference.

Spiking rows cost base x T_eff x R x c: the dense MAC baseline, the
token-weighted mean timestep, the average firing rate, and a bit factor
that prices one gated accumulate against one full-precision MAC. Default
bit factors: 1/64 for one-bit (unary or non-polar binary) spikes and
1/32 for polar binary spikes, which carry a sign per event. A W4A4 row
is priced as base/16 with no temporal factors; an FP16 row is the base
itself. Every report row satisfies spike_flops = base x T_eff x R x c;
non-spiking rows encode their factor as c with T_eff = R = 1.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

from .allocation import TEXT, VISUAL, TimestepAllocation
from .errors import ContractViolation
from .quant import NONPOLAR, POLAR

BIT_FACTOR_UNARY = 1.0 / 64.0
BIT_FACTOR_BINARY_POLAR = 1.0 / 32.0
BIT_FACTOR_BINARY_NONPOLAR = 1.0 / 64.0
FACTOR_W4A4 = 1.0 / 16.0

KIND_FP16 = "fp16"
KIND_W4A4 = "w4a4"
KIND_UNARY = "unary"
KIND_BINARY = "binary"
SCENARIO_KINDS = (KIND_FP16, KIND_W4A4, KIND_UNARY, KIND_BINARY)


@dataclass
class CostReport:
    method: str
    kind: str
    base_mac_flops: float
    effective_timesteps: float
    firing_rate: float
    bit_factor: float
    spike_flops: float
    timestep_label: str
    n_visual: int
    n_text: int


def spike_flops(base: float, t_eff: float, firing: float, bit_factor: float) -> float:
    """base x T_eff x R x c, validated and exact."""
    for name, value in (("base", base), ("t_eff", t_eff), ("bit_factor", bit_factor)):
        if not value > 0:
            raise ContractViolation(f"{name} must be positive, got {value}")
    if not 0 < firing <= 1:
        raise ContractViolation(f"firing rate must be in (0, 1], got {firing}")
    return base * t_eff * firing * bit_factor


def effective_timestep(alloc: TimestepAllocation, n_visual: int, n_text: int) -> float:
    """Token-weighted mean of the per-modality mean timesteps."""
    if n_visual < 0 or n_text < 0:
        raise ContractViolation("token counts must be non-negative")
    total = n_visual + n_text
    if total == 0:
        raise ContractViolation("token mix is empty")
    weighted = 0.0
    if n_visual:
        weighted += n_visual * alloc.mean_timestep(VISUAL)
    if n_text:
        weighted += n_text * alloc.mean_timestep(TEXT)
    return weighted / total


@dataclass(frozen=True)
class Scenario:
    """One report row: codec kind, temporal shape and firing rate."""

    method: str
    kind: str
    base: float
    timesteps: int | None = None
    allocation: TimestepAllocation | None = None
    firing: float | None = None
    mode: str = POLAR
    n_visual: int = 4096
    n_text: int = 50
    bit_factor: float | None = None


def _default_bit_factor(scenario: Scenario) -> float:
    if scenario.kind == KIND_FP16:
        return 1.0
    if scenario.kind == KIND_W4A4:
        return FACTOR_W4A4
    if scenario.kind == KIND_UNARY:
        return BIT_FACTOR_UNARY
    if scenario.kind == KIND_BINARY:
        return BIT_FACTOR_BINARY_POLAR if scenario.mode == POLAR else BIT_FACTOR_BINARY_NONPOLAR
    raise ContractViolation(f"unknown scenario kind: {scenario.kind!r}")


def report_row(scenario: Scenario) -> CostReport:
    bit_factor = scenario.bit_factor if scenario.bit_factor is not None else _default_bit_factor(scenario)
    if scenario.kind in (KIND_FP16, KIND_W4A4):
        t_eff, firing, label = 1.0, 1.0, "n/a"
    else:
        if scenario.firing is None:
            raise ContractViolation(f"{scenario.method}: spiking rows need a firing rate")
        firing = scenario.firing
        if scenario.allocation is not None:
            t_eff = effective_timestep(scenario.allocation, scenario.n_visual, scenario.n_text)
            t_v = scenario.allocation.mean_timestep(VISUAL)
            t_t = scenario.allocation.mean_timestep(TEXT)
            label = f"{t_v:g}/{t_t:g}"
        elif scenario.timesteps is not None:
            t_eff = float(scenario.timesteps)
            label = str(scenario.timesteps)
        else:
            raise ContractViolation(f"{scenario.method}: spiking rows need timesteps or an allocation")
    return CostReport(
        method=scenario.method,
        kind=scenario.kind,
        base_mac_flops=scenario.base,
        effective_timesteps=t_eff,
        firing_rate=firing,
        bit_factor=bit_factor,
        spike_flops=spike_flops(scenario.base, t_eff, firing, bit_factor),
        timestep_label=label,
        n_visual=scenario.n_visual,
        n_text=scenario.n_text,
    )


def efficiency_report(scenarios) -> list:
    return [report_row(s) for s in scenarios]


def default_scenarios(base: float = 8.78e12, n_visual: int = 4096, n_text: int = 50) -> list:
    """The stock comparison: dense baselines, unary rows at three depths,
    polar binary rows under two split allocations, and a W4A4 row."""
    from .allocation import allocate_modality

    mix = {"n_visual": n_visual, "n_text": n_text}
    return [
        Scenario(method="fp16", kind=KIND_FP16, base=base, **mix),
        Scenario(method="rtn-unary", kind=KIND_UNARY, base=base, timesteps=255,
                 firing=0.50, mode=NONPOLAR, **mix),
        Scenario(method="gptq-unary", kind=KIND_UNARY, base=base, timesteps=255,
                 firing=0.50, mode=NONPOLAR, **mix),
        Scenario(method="quarot-unary", kind=KIND_UNARY, base=base, timesteps=7,
                 firing=0.57, mode=NONPOLAR, **mix),
        Scenario(method="quarot-binary", kind=KIND_BINARY, base=base,
                 allocation=allocate_modality(2, 3), firing=0.30, mode=POLAR, **mix),
        Scenario(method="w4a4", kind=KIND_W4A4, base=base, **mix),
        Scenario(method="quarot-unary", kind=KIND_UNARY, base=base, timesteps=15,
                 firing=0.53, mode=NONPOLAR, **mix),
        Scenario(method="quarot-binary", kind=KIND_BINARY, base=base,
                 allocation=allocate_modality(3, 4), firing=0.31, mode=POLAR, **mix),
    ]


def write_report_csv(path, reports) -> None:
    """Column order: method, timestep, firing rate, FLOPs."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "timestep", "firing_rate", "flops"])
        for r in reports:
            firing = "n/a" if r.kind in (KIND_FP16, KIND_W4A4) else f"{r.firing_rate:.10g}"
            writer.writerow([r.method, r.timestep_label, firing, f"{r.spike_flops:.10g}"])


def report_to_dict(r: CostReport) -> dict:
    return {
        "method": r.method,
        "kind": r.kind,
        "timestep": r.timestep_label,
        "firing_rate": r.firing_rate,
        "bit_factor": r.bit_factor,
        "base_mac_flops": r.base_mac_flops,
        "effective_timesteps": r.effective_timesteps,
        "spike_flops": r.spike_flops,
        "tokens": {"visual": r.n_visual, "text": r.n_text},
    }


def write_report_json(path, reports) -> None:
    with open(path, "w") as fh:
        json.dump([report_to_dict(r) for r in reports], fh, indent=2, sort_keys=True)
        fh.write("\n")
