"""Cross-layer drift profiling and two-level timestep allocation.

Drift at a layer is 1 minus the mean cosine similarity between each
token's representation before and after the layer, averaged per modality
(range [0, 2]; 0 means the layer leaves the modality's tokens unchanged
in direction). Allocation happens at two levels: a base timestep per
modality, and an optional per-layer refinement that gives the highest-
drift layers of a modality a larger timestep while meeting an average
budget.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation

VISUAL = "visual"
TEXT = "text"
MODALITIES = (VISUAL, TEXT)


@dataclass
class DriftProfile:
    """Per (layer, modality) drift values.

    ``values[(layer, modality)]`` is a float in [0, 2], or None when the
    modality had no usable tokens at that layer ("no tokens" marker).
    ``samples`` counts the calibration samples that contributed.
    """

    values: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)

    def layers(self, modality: str):
        return sorted(layer for (layer, m) in self.values if m == modality)

    def layer_count(self, modality: str) -> int:
        return len(self.layers(modality))

    def value(self, layer: int, modality: str):
        return self.values[(layer, modality)]


def _token_cosines(before, after):
    """Per-token cosine between two (n, width) arrays; NaN marks zero norms."""
    norms_b = np.linalg.norm(before, axis=1)
    norms_a = np.linalg.norm(after, axis=1)
    valid = (norms_b > 0) & (norms_a > 0)
    cos = np.full(before.shape[0], np.nan)
    dots = np.einsum("ij,ij->i", before[valid], after[valid])
    cos[valid] = dots / (norms_b[valid] * norms_a[valid])
    return cos


def drift_profile(samples) -> DriftProfile:
    """Profile drift from calibration samples.

    ``samples`` is a sequence of runs; each run is a sequence of per-layer
    (before, after) TokenStream pairs (see pipeline.capture_activations).
    Zero-norm tokens are excluded from the per-layer mean. Per-sample
    similarities are averaged arithmetically before the 1 - Sim transform.
    """
    sims: dict = {}
    for run in samples:
        for layer, (before, after) in enumerate(run):
            if before.tokens.shape != after.tokens.shape:
                raise ContractViolation(f"layer {layer}: before/after shapes differ")
            if not np.array_equal(before.modality, after.modality):
                raise ContractViolation(f"layer {layer}: before/after modality tags differ")
            cos = _token_cosines(before.tokens, after.tokens)
            for m in MODALITIES:
                mask = (before.modality == m) & ~np.isnan(cos)
                key = (layer, m)
                sims.setdefault(key, [])
                if mask.any():
                    sims[key].append(float(cos[mask].mean()))
    profile = DriftProfile()
    for key, entries in sims.items():
        if entries:
            profile.values[key] = 1.0 - sum(entries) / len(entries)
            profile.samples[key] = len(entries)
        else:
            profile.values[key] = None
            profile.samples[key] = 0
    return profile


@dataclass(frozen=True)
class BudgetParams:
    """Mixed-budget parameters for one modality's per-layer refinement."""

    t_hi: int
    t_lo: int
    target: float
    k: int


@dataclass
class TimestepAllocation:
    """Assigned timesteps: per-modality base plus per-layer overrides."""

    base: dict = field(default_factory=dict)
    per_layer: dict = field(default_factory=dict)
    budget: dict = field(default_factory=dict)

    def timestep(self, layer: int, modality: str) -> int:
        if (layer, modality) in self.per_layer:
            return self.per_layer[(layer, modality)]
        if modality in self.base:
            return self.base[modality]
        raise ContractViolation(f"no timestep allocated for layer {layer}, modality {modality!r}")

    def mean_timestep(self, modality: str) -> float:
        entries = [t for (_, m), t in self.per_layer.items() if m == modality]
        if entries:
            return sum(entries) / len(entries)
        if modality in self.base:
            return float(self.base[modality])
        raise ContractViolation(f"no timesteps allocated for modality {modality!r}")

    def merged(self, other: "TimestepAllocation") -> "TimestepAllocation":
        """Combine two allocations (e.g. one per modality); other wins ties."""
        out = TimestepAllocation(dict(self.base), dict(self.per_layer), dict(self.budget))
        out.base.update(other.base)
        out.per_layer.update(other.per_layer)
        out.budget.update(other.budget)
        return out


def allocate_modality(t_visual: int, t_text: int) -> TimestepAllocation:
    """Base allocation: every visual layer t_visual, every text layer t_text."""
    if t_visual < 1 or t_text < 1:
        raise ContractViolation("timesteps must be >= 1")
    if t_text < t_visual:
        raise ContractViolation(
            f"text timesteps ({t_text}) must be >= visual timesteps ({t_visual})"
        )
    return TimestepAllocation(base={VISUAL: t_visual, TEXT: t_text})


def allocate_uniform(t: int) -> TimestepAllocation:
    return allocate_modality(t, t)


def _ranked_layers(profile: DriftProfile, modality: str, reverse: bool):
    entries = [(layer, profile.value(layer, modality)) for layer in profile.layers(modality)]
    # None (no tokens) always ranks last; ties break toward lower layer index
    if reverse:
        key = lambda e: (e[1] is None, e[1] if e[1] is not None else 0.0, e[0])
    else:
        key = lambda e: (e[1] is None, -e[1] if e[1] is not None else 0.0, e[0])
    return [layer for layer, _ in sorted(entries, key=key)]


def _allocate_layers(profile, modality, target, t_hi, t_lo, reverse):
    if t_lo >= t_hi:
        raise ContractViolation(f"t_lo ({t_lo}) must be below t_hi ({t_hi})")
    if not (t_lo <= target <= t_hi):
        raise ContractViolation(f"target {target} outside [{t_lo}, {t_hi}]")
    layer_count = profile.layer_count(modality)
    if layer_count == 0:
        raise ContractViolation(f"profile has no layers for modality {modality!r}")
    exact = (target - t_lo) / (t_hi - t_lo) * layer_count
    k = int(math.floor(exact + 0.5))
    k = min(max(k, 0), layer_count)
    ranked = _ranked_layers(profile, modality, reverse)
    alloc = TimestepAllocation()
    for i, layer in enumerate(ranked):
        alloc.per_layer[(layer, modality)] = t_hi if i < k else t_lo
    alloc.budget[modality] = BudgetParams(t_hi=t_hi, t_lo=t_lo, target=float(target), k=k)
    return alloc


def allocate_layers(profile: DriftProfile, modality: str, target: float,
                    t_hi: int, t_lo: int) -> TimestepAllocation:
    """Give the k highest-drift layers t_hi and the rest t_lo.

    k = round((target - t_lo) / (t_hi - t_lo) * layer_count), half up, so
    the achieved mean timestep stays within half a rounding step of the
    target budget.
    """
    return _allocate_layers(profile, modality, target, t_hi, t_lo, reverse=False)


def allocate_layers_reverse(profile: DriftProfile, modality: str, target: float,
                            t_hi: int, t_lo: int) -> TimestepAllocation:
    """Ablation variant: same k, but the lowest-drift layers get t_hi."""
    return _allocate_layers(profile, modality, target, t_hi, t_lo, reverse=True)


def write_profile_csv(path, profile: DriftProfile) -> None:
    """Rows: layer, modality, med, samples; empty med marks "no tokens"."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "modality", "med", "samples"])
        for (layer, modality) in sorted(profile.values):
            value = profile.values[(layer, modality)]
            writer.writerow([
                layer,
                modality,
                "" if value is None else f"{value:.10g}",
                profile.samples.get((layer, modality), 0),
            ])


def read_profile_csv(path) -> DriftProfile:
    profile = DriftProfile()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["layer", "modality", "med", "samples"]:
            raise ContractViolation(f"unexpected profile header: {header!r}")
        for row in reader:
            layer, modality, value, samples = row
            key = (int(layer), modality)
            profile.values[key] = None if value == "" else float(value)
            profile.samples[key] = int(samples)
    return profile
