"""Command-line front end.

Subcommands: verify, encode, matmul-check, med, allocate, cost, pesim,
pipeline. Outputs are plot-ready CSV or JSON written under --out; every
file is byte-reproducible for a fixed (config, seed). Exit codes:
0 success, 1 verification failure, 2 config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, _kernels
from .allocation import drift_profile, read_profile_csv, write_profile_csv
from .codec import (BINARY, UNARY, aggregate_firing_rate, compression_ratio,
                    encode, firing_rate, read_train, spike_count, write_train)
from .config import (build_allocation, check_keys, get_float, get_int, get_str,
                     load_config, parse_allocation, parse_codec, parse_input,
                     parse_model, section)
from .costmodel import (KIND_BINARY, KIND_FP16, KIND_UNARY, KIND_W4A4, Scenario,
                        default_scenarios, efficiency_report, write_report_csv,
                        write_report_json)
from .equivalence import run_all
from .errors import ConfigError, ContractViolation
from .pesim import ArrayConfig, PEConfig, array_matmul, peak_metrics
from .pipeline import (PATH_DENSE, PATH_FP, PATH_SPIKE, ToyModelConfig,
                       capture_activations, make_token_stream, run_model)
from .quant import NONPOLAR, POLAR, QuantSpec, quantize, scale_for
from .tensorio import read_tensor, read_tensor_csv

DEFAULT_SEED = 12345


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_path(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def cmd_verify(args) -> int:
    results = run_all(args.seed, tamper=args.inject_fault)
    failed = [r for r in results if not r.ok]
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        print(f"{r.name}: {status} ({r.cases} cases)")
    if failed:
        print(json.dumps(failed[0].failure, sort_keys=True))
        return 1
    return 0


def _load_input_tensor(cfg: dict, context: str, seed: int) -> np.ndarray:
    sec = section(cfg, "input", context)
    check_keys(sec, ("path", "random"), f"{context}.input")
    if "path" in sec and "random" in sec:
        raise ConfigError(f"{context}.input: give either 'path' or 'random', not both")
    if "path" in sec:
        path = get_str(sec, "path", f"{context}.input")
        try:
            if path.endswith(".csv"):
                return read_tensor_csv(path)
            return np.asarray(read_tensor(path), dtype=np.float64)
        except OSError as exc:
            raise ConfigError(f"{context}.input.path: {exc}")
    rand = section(sec, "random", f"{context}.input")
    check_keys(rand, ("elements", "seed"), f"{context}.input.random")
    n = get_int(rand, "elements", f"{context}.input.random", minimum=1)
    rng = np.random.default_rng(get_int(rand, "seed", f"{context}.input.random", default=seed))
    return rng.normal(0.0, 3.0, size=n)


def cmd_encode(args) -> int:
    if not args.config:
        raise ConfigError("encode needs --config")
    cfg = load_config(args.config)
    check_keys(cfg, ("quant", "codec", "input", "output"), "encode")
    qsec = section(cfg, "quant", "encode")
    check_keys(qsec, ("bit_width", "mode"), "encode.quant")
    codec_kind = get_str(cfg, "codec", "encode", choices=(UNARY, BINARY))
    default_mode = NONPOLAR if codec_kind == UNARY else POLAR
    spec = QuantSpec(
        get_int(qsec, "bit_width", "encode.quant", minimum=2),
        get_str(qsec, "mode", "encode.quant", choices=(POLAR, NONPOLAR), default=default_mode),
    )
    u = _load_input_tensor(cfg, "encode", args.seed)
    q = quantize(u, scale_for(u, spec), spec)
    train = encode(q, codec_kind)
    train_path = _out_path(args, get_str(cfg, "output", "encode", default="train.bin"))
    write_train(train_path, train)
    read_train(train_path)  # self-check: the file decodes
    stats = {
        "codec": codec_kind,
        "mode": spec.mode,
        "bit_width": spec.bit_width,
        "timesteps": train.timesteps,
        "elements": train.num_elements,
        "scale": q.scale,
        "firing_rate": firing_rate(train),
        "spikes": spike_count(train),
        "compression_ratio": compression_ratio(spec, codec_kind),
        "train_file": os.path.basename(train_path),
    }
    _write_json(_out_path(args, "encode_stats.json"), stats)
    print(f"encoded {train.num_elements} elements: T={train.timesteps} "
          f"firing_rate={stats['firing_rate']:.4f} -> {train_path}")
    return 0


def cmd_matmul_check(args) -> int:
    from .equivalence import binary_nonpolar_suite, binary_polar_suite, unary_suite

    bits = tuple(int(b) for b in args.bits.split(","))
    suites = {
        "unary": lambda: unary_suite(args.seed, bits, args.trials),
        "binary-polar": lambda: binary_polar_suite(args.seed, bits, args.trials),
        "binary-nonpolar": lambda: binary_nonpolar_suite(args.seed, bits, args.trials),
    }
    selected = suites if args.codec == "all" else {args.codec: suites[args.codec]}
    results = [fn() for fn in selected.values()]
    payload = [
        {"suite": r.name, "ok": r.ok, "cases": r.cases, "failure": r.failure}
        for r in results
    ]
    _write_json(_out_path(args, "matmul_check.json"), payload)
    for r in results:
        print(f"{r.name}: {'PASS' if r.ok else 'FAIL'} ({r.cases} cases)")
    return 0 if all(r.ok for r in results) else 1


def _toy_setup(cfg: dict, context: str, codec_kind=BINARY, mode=POLAR, allocation=None):
    model = parse_model(cfg, context)
    inp = parse_input(cfg, context)
    config = ToyModelConfig(
        layers=model.layers, width=model.width, seed=model.seed,
        codec_kind=codec_kind, mode=mode, allocation=allocation,
    )
    stream = make_token_stream(inp.visual_tokens, inp.text_tokens, model.width,
                               inp.seed, inp.layout)
    return config, stream, inp


def cmd_med(args) -> int:
    if not args.config:
        raise ConfigError("med needs --config")
    cfg = load_config(args.config)
    check_keys(cfg, ("model", "input", "samples"), "med")
    samples = get_int(cfg, "samples", "med", default=4, minimum=1)
    config, _, inp = _toy_setup(cfg, "med")
    runs = []
    for i in range(samples):
        stream = make_token_stream(inp.visual_tokens, inp.text_tokens,
                                   config.width, inp.seed + i, inp.layout)
        runs.append(capture_activations(config, stream))
    profile = drift_profile(runs)
    if args.format == "json":
        payload = [
            {"layer": layer, "modality": m,
             "med": profile.values[(layer, m)],
             "samples": profile.samples[(layer, m)]}
            for (layer, m) in sorted(profile.values)
        ]
        _write_json(_out_path(args, "profile.json"), payload)
        print(f"wrote {len(payload)} profile rows -> {_out_path(args, 'profile.json')}")
    else:
        path = _out_path(args, "profile.csv")
        write_profile_csv(path, profile)
        print(f"wrote {len(profile.values)} profile rows -> {path}")
    return 0


def cmd_allocate(args) -> int:
    if not args.config:
        raise ConfigError("allocate needs --config")
    cfg = load_config(args.config)
    check_keys(cfg, ("profile", "allocation"), "allocate")
    settings = parse_allocation(cfg, "allocate")
    profile = None
    if settings.needs_profile:
        path = get_str(cfg, "profile", "allocate")
        try:
            profile = read_profile_csv(path)
        except OSError as exc:
            raise ConfigError(f"allocate.profile: {exc}")
    alloc = build_allocation(settings, profile)
    rows = [(str(layer), m, alloc.per_layer[(layer, m)])
            for (layer, m) in sorted(alloc.per_layer)]
    rows += [("*", m, t) for m, t in sorted(alloc.base.items())]
    if args.format == "json":
        payload = {
            "assignments": [{"layer": layer, "modality": m, "timesteps": t}
                            for layer, m, t in rows],
            "budget": {m: {"t_hi": b.t_hi, "t_lo": b.t_lo, "target": b.target, "k": b.k}
                       for m, b in sorted(alloc.budget.items())},
        }
        _write_json(_out_path(args, "allocation.json"), payload)
        print(f"wrote allocation -> {_out_path(args, 'allocation.json')}")
    else:
        import csv as _csv
        path = _out_path(args, "allocation.csv")
        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["layer", "modality", "timesteps"])
            writer.writerows(rows)
        print(f"wrote allocation -> {path}")
    return 0


def _parse_cost_row(row: dict, index: int, base: float, n_visual: int, n_text: int) -> Scenario:
    ctx = f"cost.rows[{index}]"
    if not isinstance(row, dict):
        raise ConfigError(f"{ctx}: expected a mapping")
    check_keys(row, ("method", "kind", "mode", "timesteps", "t_visual", "t_text",
                     "firing_rate", "bit_factor"), ctx)
    kind = get_str(row, "kind", ctx, choices=(KIND_FP16, KIND_W4A4, KIND_UNARY, KIND_BINARY))
    method = get_str(row, "method", ctx, default=kind)
    mode = get_str(row, "mode", ctx, choices=(POLAR, NONPOLAR),
                   default=NONPOLAR if kind == KIND_UNARY else POLAR)
    bit_factor = row.get("bit_factor")
    if bit_factor is not None:
        bit_factor = get_float(row, "bit_factor", ctx, positive=True)
    allocation = None
    timesteps = None
    firing = None
    if kind in (KIND_UNARY, KIND_BINARY):
        firing = get_float(row, "firing_rate", ctx, positive=True)
        if "t_visual" in row or "t_text" in row:
            from .allocation import allocate_modality
            allocation = allocate_modality(
                get_int(row, "t_visual", ctx, minimum=1),
                get_int(row, "t_text", ctx, minimum=1),
            )
        else:
            timesteps = get_int(row, "timesteps", ctx, minimum=1)
    return Scenario(method=method, kind=kind, base=base, timesteps=timesteps,
                    allocation=allocation, firing=firing, mode=mode,
                    n_visual=n_visual, n_text=n_text, bit_factor=bit_factor)


def cmd_cost(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        check_keys(cfg, ("base_flops", "tokens", "rows"), "cost")
        base = get_float(cfg, "base_flops", "cost", positive=True)
        tokens = section(cfg, "tokens", "cost", required=False)
        check_keys(tokens, ("visual", "text"), "cost.tokens")
        n_visual = get_int(tokens, "visual", "cost.tokens", default=4096, minimum=0)
        n_text = get_int(tokens, "text", "cost.tokens", default=50, minimum=0)
        rows = cfg.get("rows")
        if not isinstance(rows, list) or not rows:
            raise ConfigError("cost.rows: expected a non-empty list")
        scenarios = [_parse_cost_row(row, i, base, n_visual, n_text)
                     for i, row in enumerate(rows)]
    else:
        scenarios = default_scenarios()
    reports = efficiency_report(scenarios)
    if args.format == "json":
        write_report_json(_out_path(args, "cost_report.json"), reports)
    else:
        write_report_csv(_out_path(args, "cost_report.csv"), reports)
    for r in reports:
        print(f"{r.method:16s} T={r.timestep_label:>6s} R={r.firing_rate:<6.3g} "
              f"flops={r.spike_flops:.4g}")
    return 0


def cmd_pesim(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        check_keys(cfg, ("array", "workload"), "pesim")
        asec = section(cfg, "array", "pesim")
        check_keys(asec, ("rows", "cols", "lanes", "levels", "weight_bits",
                          "frequency_hz", "power_w", "area_mm2"), "pesim.array")
        pe = PEConfig(
            levels=get_int(asec, "levels", "pesim.array", default=3, minimum=1),
            lanes=get_int(asec, "lanes", "pesim.array", default=32, minimum=1),
            weight_bits=get_int(asec, "weight_bits", "pesim.array", default=4, minimum=2),
        )
        power = asec.get("power_w")
        area = asec.get("area_mm2")
        array = ArrayConfig(
            rows=get_int(asec, "rows", "pesim.array", default=16, minimum=1),
            cols=get_int(asec, "cols", "pesim.array", default=16, minimum=1),
            pe=pe,
            frequency_hz=get_float(asec, "frequency_hz", "pesim.array",
                                   default=333e6, positive=True),
            power_w=get_float(asec, "power_w", "pesim.array", positive=True) if power is not None else None,
            area_mm2=get_float(asec, "area_mm2", "pesim.array", positive=True) if area is not None else None,
        )
        wsec = section(cfg, "workload", "pesim", required=False)
        if wsec:
            check_keys(wsec, ("m", "k", "n", "seed"), "pesim.workload")
            workload = (
                get_int(wsec, "m", "pesim.workload", minimum=1),
                get_int(wsec, "k", "pesim.workload", minimum=1),
                get_int(wsec, "n", "pesim.workload", minimum=1),
                get_int(wsec, "seed", "pesim.workload", default=args.seed),
            )
        else:
            workload = None
    else:
        array = ArrayConfig(power_w=0.484, area_mm2=76.27)
        workload = (64, 128, 32, args.seed)

    peak = peak_metrics(array)
    payload = {
        "array": {
            "rows": array.rows, "cols": array.cols, "lanes": array.pe.lanes,
            "levels": array.pe.levels, "weight_bits": array.pe.weight_bits,
            "frequency_hz": array.frequency_hz, "power_w": array.power_w,
            "area_mm2": array.area_mm2,
        },
        "peak": {"tops": peak.tops, "tops_per_watt": peak.tops_per_watt,
                 "tops_per_mm2": peak.tops_per_mm2},
    }
    exact = True
    if workload:
        m, k, n, seed = workload
        rng = np.random.default_rng(seed)
        acts = rng.integers(-array.pe.max_magnitude, array.pe.max_magnitude + 1, size=(m, k))
        weights = rng.integers(-array.pe.max_weight, array.pe.max_weight + 1, size=(k, n))
        result, report = array_matmul(acts, weights, array)
        exact = bool(np.array_equal(result, acts.astype(np.int64) @ weights.astype(np.int64)))
        payload["workload"] = {"m": m, "k": k, "n": n, "seed": seed,
                               "matches_reference": exact}
        payload["cycles"] = report.to_dict()
        print(f"{m}x{k} @ {k}x{n}: cycles={report.cycles} "
              f"utilization={report.utilization:.3f} exact={exact}")
    print(f"peak: {peak.tops:.4g} TOPS"
          + (f", {peak.tops_per_watt:.4g} TOPS/W" if peak.tops_per_watt else "")
          + (f", {peak.tops_per_mm2:.4g} TOPS/mm2" if peak.tops_per_mm2 else ""))
    _write_json(_out_path(args, "pesim_report.json"), payload)
    return 0 if exact else 1


def cmd_pipeline(args) -> int:
    if not args.config:
        raise ConfigError("pipeline needs --config")
    cfg = load_config(args.config)
    check_keys(cfg, ("model", "codec", "input", "allocation"), "pipeline")
    codec_kind, mode = parse_codec(cfg, "pipeline")
    settings = parse_allocation(cfg, "pipeline")
    config, stream, _ = _toy_setup(cfg, "pipeline", codec_kind, mode)
    profile = None
    if settings.needs_profile:
        profile = drift_profile([capture_activations(config, stream)])
    allocation = build_allocation(settings, profile)
    config = ToyModelConfig(
        layers=config.layers, width=config.width, seed=config.seed,
        codec_kind=codec_kind, mode=mode, allocation=allocation,
    )
    spike_out, stats = run_model(config, stream, PATH_SPIKE, keep_trains=True)
    dense_out, _ = run_model(config, stream, PATH_DENSE)
    fp_out, _ = run_model(config, stream, PATH_FP)
    paths_equal = spike_out.tokens.tobytes() == dense_out.tokens.tobytes()
    fp_norm = float(np.linalg.norm(fp_out.tokens))
    deviation = float(np.linalg.norm(spike_out.tokens - fp_out.tokens))
    rel_dev = deviation / fp_norm if fp_norm else 0.0

    import csv as _csv
    layers_path = _out_path(args, "pipeline_layers.csv")
    with open(layers_path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["layer", "modality", "tokens", "timesteps", "bit_width",
                         "firing_rate", "spikes", "accumulations"])
        for s in stats:
            writer.writerow([s.layer, s.modality, s.tokens, s.timesteps, s.bit_width,
                             f"{s.firing_rate:.10g}", s.spikes, s.accumulations])
    trains = [s.train for s in stats]
    summary = {
        "codec": codec_kind,
        "mode": mode,
        "allocation_mode": settings.mode,
        "spike_equals_dense": paths_equal,
        "relative_deviation_from_fp": rel_dev,
        "output_sha256": hashlib.sha256(spike_out.tokens.tobytes()).hexdigest(),
        "firing_rate_token_weighted": aggregate_firing_rate(trains, "token") if trains else None,
        "firing_rate_plane_weighted": aggregate_firing_rate(trains, "plane") if trains else None,
    }
    _write_json(_out_path(args, "pipeline_summary.json"), summary)
    print(f"spike == dense: {paths_equal}; relative deviation from fp: {rel_dev:.4g}")
    print(f"wrote {layers_path}")
    return 0 if paths_equal else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikekit",
        description="Spike codecs, exact equivalence checks, drift profiling, "
                    "timestep allocation, cost reports and a PE-array simulator.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__} ({_kernels.backend_name()} kernels)")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"base RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--out", default=".", help="output directory (default .)")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="report format where applicable (default csv)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common],
                       help="run the exact spike/dense equivalence suites")
    p.add_argument("--inject-fault", action="store_true",
                   help="flip one spike bit to demonstrate failure detection")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("encode", parents=[common],
                       help="quantize a tensor and write its spike train")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("matmul-check", parents=[common],
                       help="randomized spike-vs-dense matmul equivalence check")
    p.add_argument("--codec", choices=("unary", "binary-polar", "binary-nonpolar", "all"),
                   default="all")
    p.add_argument("--bits", default="2,3,4", help="comma-joined bit widths")
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_matmul_check)

    p = sub.add_parser("med", parents=[common],
                       help="profile per-layer, per-modality representation drift "
                            "(1 - mean cross-layer cosine similarity)")
    p.set_defaults(func=cmd_med)

    p = sub.add_parser("allocate", parents=[common],
                       help="turn a drift profile into a timestep allocation")
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("cost", parents=[common],
                       help="firing-rate/FLOPs accounting report")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("pesim", parents=[common],
                       help="cycle-level PE-array simulation and peak metrics")
    p.set_defaults(func=cmd_pesim)

    p = sub.add_parser("pipeline", parents=[common],
                       help="run the toy multimodal model on the spike and dense paths")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
