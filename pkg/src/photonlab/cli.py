"""Command-line front end: configured experiment runs with machine-readable output.

Subcommands: malus, entropy, bell, nosignal, protocol, mzi. Each accepts a JSON
config file, repeatable --set KEY=VALUE parameter overrides (flags win over the
file), and emits a result file (JSON, or CSV for tabular experiments) plus a
<out>.manifest.json run manifest. Angles cross this boundary in degrees and are
converted to radians internally. A manifest can be fed back as --config to
reproduce its run byte for byte; the manifest itself carries wall time, so only
result files are expected to be identical across runs.

Exit codes: 0 success, 2 config or validation error (nothing is written),
1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import jsonschema

from . import __version__
from .entangle import bob_marginal_counts, chsh, correlation, no_signaling_check
from .entropy import collapse_entropy_report
from .core import ALGEBRA_ATOL, StateVector
from .mzi import MziConfig, choice_timing_invariance, run_mzi
from .optics import cascade_analytic, cascade_mc, linear_light, natural_light
from .protocol import BasisOracle, EncodingRule, FixedBasisML, Repetition, run_protocol
from .rng import ALGORITHM_ID, stream_from_seed
from .stats import wilson_interval


class ConfigError(ValueError):
    """Bad configuration; maps to exit code 2 before any computation runs."""


EXPERIMENTS = ("malus", "entropy", "bell", "nosignal", "protocol", "mzi")

# keys a config file (or a fed-back manifest) may carry at the top level
_TOP_LEVEL_KEYS = {
    "experiment",
    "params",
    "seed",
    "workers",
    "format",
    "out",
    "tool_version",
    "rng_algorithm",
    "wall_time_s",
    "summary",
}

_NUMBER = {"type": "number"}
_SWEEP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "start_deg": _NUMBER,
        "stop_deg": _NUMBER,
        "step_deg": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["start_deg", "stop_deg", "step_deg"],
}

SCHEMAS = {
    "malus": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "axes_deg": {"type": "array", "items": _NUMBER, "minItems": 1},
            "mode": {"enum": ["analytic", "mc"]},
            "n_photons": {"type": "integer", "minimum": 1},
            "source": {"enum": ["natural", "linear"]},
            "source_angle_deg": _NUMBER,
            "sweep": {"oneOf": [{"type": "null"}, _SWEEP_SCHEMA]},
        },
    },
    "entropy": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "grid": {
                "type": "array",
                "items": {"type": "number", "minimum": 0, "maximum": 1},
                "minItems": 1,
            },
        },
    },
    "bell": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "sweep": _SWEEP_SCHEMA,
            "n_per_point": {"type": "integer", "minimum": 1},
            "chsh_angles_deg": {
                "type": "array",
                "items": _NUMBER,
                "minItems": 4,
                "maxItems": 4,
            },
            "n_per_setting": {"type": "integer", "minimum": 1},
        },
    },
    "nosignal": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "bases_a_deg": {"type": "array", "items": _NUMBER, "minItems": 1},
            "probe_basis_deg": _NUMBER,
            "n_per_basis": {"type": "integer", "minimum": 1},
        },
    },
    "protocol": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "n_bits": {"type": "integer", "minimum": 1},
            "strategy": {"type": "string"},
            "rule": {
                "type": "object",
                "additionalProperties": False,
                "properties": {"one_deg": _NUMBER, "zero_deg": _NUMBER},
            },
            "bit_source": {"enum": ["iid", "balanced"]},
            "n_shuffles": {"type": "integer", "minimum": 1000},
        },
    },
    "mzi": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "phases_deg": {"type": "array", "items": _NUMBER, "minItems": 1},
            "n_per_phase": {"type": "integer", "minimum": 1},
            "mode": {"enum": ["analytic", "mc"]},
            "timing": {
                "oneOf": [
                    {"type": "null"},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "phase_deg": _NUMBER,
                            "p_present": {"type": "number", "minimum": 0, "maximum": 1},
                            "n": {"type": "integer", "minimum": 1},
                        },
                        "required": ["phase_deg", "p_present", "n"],
                    },
                ]
            },
        },
    },
}

DEFAULTS = {
    "malus": {
        "axes_deg": [90.0, 45.0, 0.0],
        "mode": "analytic",
        "n_photons": 1_000_000,
        "source": "natural",
        "source_angle_deg": 0.0,
        "sweep": None,
    },
    "entropy": {"grid": [0.0, 0.25, 0.5, 0.75, 1.0]},
    "bell": {
        "sweep": {"start_deg": 0.0, "stop_deg": 90.0, "step_deg": 5.0},
        "n_per_point": 50_000,
        "chsh_angles_deg": [0.0, 45.0, 22.5, 67.5],
        "n_per_setting": 100_000,
    },
    "nosignal": {"bases_a_deg": [0.0, 45.0], "probe_basis_deg": 0.0, "n_per_basis": 100_000},
    "protocol": {
        "n_bits": 10_000,
        "strategy": "fixed-basis-ml:0",
        "rule": {"one_deg": 0.0, "zero_deg": 45.0},
        "bit_source": "iid",
        "n_shuffles": 1000,
    },
    "mzi": {
        "phases_deg": [22.5 * k for k in range(16)],
        "n_per_phase": 100_000,
        "mode": "mc",
        "timing": {"phase_deg": 60.0, "p_present": 0.5, "n": 200_000},
    },
}

_STRATEGY_FORMS = (
    "valid strategies: 'basis-oracle', 'fixed-basis-ml:<angle_deg>', "
    "'repetition:<k>:<inner strategy>'"
)


def parse_strategy(label: str):
    """Parse a receiver strategy label, e.g. 'repetition:11:fixed-basis-ml:22.5'."""
    label = label.strip()
    if label == "basis-oracle":
        return BasisOracle()
    if label.startswith("fixed-basis-ml:"):
        raw = label.split(":", 1)[1]
        try:
            deg = float(raw)
        except ValueError:
            raise ConfigError(f"bad angle {raw!r} in {label!r}; {_STRATEGY_FORMS}") from None
        if not math.isfinite(deg):
            raise ConfigError(f"angle in {label!r} must be finite; {_STRATEGY_FORMS}")
        return FixedBasisML(math.radians(deg))
    if label.startswith("repetition:"):
        parts = label.split(":", 2)
        if len(parts) != 3:
            raise ConfigError(f"malformed repetition strategy {label!r}; {_STRATEGY_FORMS}")
        try:
            k = int(parts[1])
        except ValueError:
            raise ConfigError(
                f"bad repetition factor {parts[1]!r} in {label!r}; {_STRATEGY_FORMS}"
            ) from None
        inner = parse_strategy(parts[2])
        try:
            return Repetition(k, inner)
        except ValueError as exc:
            raise ConfigError(f"{exc}; {_STRATEGY_FORMS}") from None
    raise ConfigError(f"unknown strategy {label!r}; {_STRATEGY_FORMS}")


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    unknown = sorted(set(obj) - _TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {', '.join(unknown)}")
    return obj


def _deep_merge(base, override):
    if isinstance(base, dict) and isinstance(override, dict):
        merged = dict(base)
        for key, value in override.items():
            merged[key] = _deep_merge(base.get(key), value) if key in base else value
        return merged
    return override


def _parse_set_overrides(items) -> dict:
    overrides: dict = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = overrides
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set key {key!r} descends into a non-object value")
        node[parts[-1]] = value
    return overrides


def _grid_from_sweep(sweep: dict) -> list[float]:
    start = float(sweep["start_deg"])
    stop = float(sweep["stop_deg"])
    step = float(sweep["step_deg"])
    if stop < start:
        raise ConfigError(f"sweep stop_deg {stop} must be >= start_deg {start}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(count)]


def _run_malus(params, seed, workers):
    if params["sweep"] is not None:
        rows = []
        for theta_deg in _grid_from_sweep(params["sweep"]):
            result = cascade_analytic(
                natural_light(),
                [math.pi / 2, math.radians(theta_deg), 0.0],
            )
            rows.append(
                {"theta_deg": float(theta_deg), "final_intensity": float(result.final_intensity())}
            )
        best = max(rows, key=lambda r: r["final_intensity"])
        payload = {"sweep_rows": rows}
        summary = {
            "max_final_intensity": best["final_intensity"],
            "argmax_deg": best["theta_deg"],
        }
        csv_rows = [(r["theta_deg"], r["final_intensity"]) for r in rows]
        return payload, ["theta_deg", "final_intensity"], csv_rows, summary

    axes = [math.radians(a) for a in params["axes_deg"]]
    if params["mode"] == "analytic":
        if params["source"] == "natural":
            beam = natural_light()
        else:
            beam = linear_light(math.radians(params["source_angle_deg"]))
        result = cascade_analytic(beam, axes)
        stages = [
            {"stage": i, "axis_deg": float(params["axes_deg"][i]), "fraction": float(f)}
            for i, f in enumerate(result.fractions())
        ]
        payload = {"stages": stages, "final_intensity": float(result.final_intensity())}
    else:
        result = cascade_mc(
            params["n_photons"],
            axes,
            source=params["source"],
            source_angle=math.radians(params["source_angle_deg"]),
            seed=seed,
            workers=workers,
        )
        fractions = result.fractions()
        stages = [
            {
                "stage": i,
                "axis_deg": float(params["axes_deg"][i]),
                "fraction": float(fractions[i]),
                "count": int(result.per_stage_counts[i]),
            }
            for i in range(len(axes))
        ]
        payload = {
            "n_photons": int(params["n_photons"]),
            "stages": stages,
            "final_intensity": float(result.final_intensity()),
        }
    summary = {"final_intensity": payload["final_intensity"]}
    csv_rows = [(s["stage"], s["axis_deg"], s["fraction"]) for s in stages]
    return payload, ["stage", "axis_deg", "fraction"], csv_rows, summary


def _run_entropy(params, seed, workers):
    rows = []
    for i, p0 in enumerate(params["grid"]):
        state = StateVector([math.sqrt(p0), math.sqrt(1.0 - p0)])
        report = collapse_entropy_report(state, 0.0, stream_from_seed(seed, i))
        rows.append(
            {
                "p0": float(p0),
                "before_bits": float(report.before_bits),
                "after_bits": float(report.after_bits),
                "delta_bits": float(report.delta_bits),
            }
        )
    payload = {"rows": rows}
    summary = {"max_after_bits": max(r["after_bits"] for r in rows)}
    csv_rows = [(r["p0"], r["before_bits"], r["after_bits"], r["delta_bits"]) for r in rows]
    return payload, ["p0", "before_bits", "after_bits", "delta_bits"], csv_rows, summary


def _run_bell(params, seed, workers):
    grid = _grid_from_sweep(params["sweep"])
    rows = []
    for i, delta_deg in enumerate(grid):
        stats = correlation(
            math.radians(delta_deg),
            0.0,
            params["n_per_point"],
            seed=seed,
            workers=workers,
            stream_base=i * workers,
        )
        rows.append(
            {
                "delta_deg": float(delta_deg),
                "e_value": float(stats.e_value),
                "std_err": float(stats.std_err),
            }
        )
    settings = tuple(math.radians(a) for a in params["chsh_angles_deg"])
    s_value = chsh(
        settings,
        params["n_per_setting"],
        seed=seed,
        workers=workers,
        stream_base=len(grid) * workers,
    )
    payload = {
        "sweep_rows": rows,
        "chsh": {
            "angles_deg": [float(a) for a in params["chsh_angles_deg"]],
            "n_per_setting": int(params["n_per_setting"]),
            "s_value": float(s_value),
        },
    }
    summary = {"chsh_s": float(s_value)}
    csv_rows = [(r["delta_deg"], r["e_value"], r["std_err"]) for r in rows]
    return payload, ["delta_deg", "e_value", "std_err"], csv_rows, summary


def _run_nosignal(params, seed, workers):
    bases_deg = params["bases_a_deg"]
    probe_deg = float(params["probe_basis_deg"])
    distance = no_signaling_check([math.radians(b) for b in bases_deg])
    rows = []
    for i, basis_deg in enumerate(bases_deg):
        total, count0 = bob_marginal_counts(
            math.radians(basis_deg),
            math.radians(probe_deg),
            params["n_per_basis"],
            seed=seed,
            workers=workers,
            stream_base=i * workers,
        )
        lo, hi = wilson_interval(count0, total)
        rows.append(
            {
                "basis_a_deg": float(basis_deg),
                "n": int(total),
                "bob_fraction_d0": count0 / total,
                "ci_lo": float(lo),
                "ci_hi": float(hi),
            }
        )
    payload = {
        "max_trace_distance": float(distance),
        "within_atol": bool(distance < ALGEBRA_ATOL),
        "probe_basis_deg": probe_deg,
        "rows": rows,
    }
    summary = {"max_trace_distance": float(distance)}
    csv_rows = [
        (r["basis_a_deg"], r["n"], r["bob_fraction_d0"], r["ci_lo"], r["ci_hi"]) for r in rows
    ]
    return payload, ["basis_a_deg", "n", "bob_fraction_d0", "ci_lo", "ci_hi"], csv_rows, summary


def _run_protocol(params, seed, workers):
    strategy = parse_strategy(params["strategy"])
    rule = EncodingRule(
        basis_for_one=math.radians(params["rule"]["one_deg"]),
        basis_for_zero=math.radians(params["rule"]["zero_deg"]),
    )
    report = run_protocol(
        params["n_bits"],
        rule=rule,
        strategy=strategy,
        seed=seed,
        workers=workers,
        bit_source=params["bit_source"],
        n_shuffles=params["n_shuffles"],
    )
    payload = {
        "n_bits": int(report.n_bits),
        "ber": float(report.ber),
        "mutual_info_bits": float(report.mutual_info_bits),
        "mi_confidence_interval": [float(v) for v in report.mi_confidence_interval],
        "decode_ties": int(report.decode_ties),
        "strategy": report.strategy.label,
        "rule": {
            "one_deg": math.degrees(report.rule.basis_for_one),
            "zero_deg": math.degrees(report.rule.basis_for_zero),
        },
        "bit_source": report.bit_source,
    }
    summary = {"ber": payload["ber"], "mutual_info_bits": payload["mutual_info_bits"]}
    return payload, None, None, summary


def _run_mzi(params, seed, workers):
    rows = []
    for i, phase_deg in enumerate(params["phases_deg"]):
        phase = math.radians(phase_deg)
        base = i * 4 * workers
        closed = run_mzi(
            MziConfig(phase, second_bs=True),
            params["n_per_phase"],
            seed=seed,
            workers=workers,
            mode=params["mode"],
            stream_base=base,
        )
        opened = run_mzi(
            MziConfig(phase, second_bs=False),
            params["n_per_phase"],
            seed=seed,
            workers=workers,
            mode=params["mode"],
            stream_base=base + 2 * workers,
        )
        rows.append(
            {
                "phase_deg": float(phase_deg),
                "closed_fraction_d0": closed.count_d0 / closed.n,
                "open_fraction_d0": opened.count_d0 / opened.n,
            }
        )
    timing_payload = None
    if params["timing"] is not None:
        timing = params["timing"]
        phase = math.radians(timing["phase_deg"])
        report = choice_timing_invariance(
            MziConfig(phase, second_bs=True, choice_policy="delayed-random",
                      p_present=timing["p_present"]),
            MziConfig(phase, second_bs=True),
            timing["n"],
            seed=seed,
            workers=workers,
            stream_base=len(params["phases_deg"]) * 4 * workers,
        )
        timing_payload = {
            "phase_deg": float(timing["phase_deg"]),
            "choice": report.choice,
            "n_conditional": int(report.n_conditional),
            "conditional_fraction_d0": float(report.conditional_fraction_d0),
            "fixed_n": int(report.fixed_n),
            "fixed_fraction_d0": float(report.fixed_fraction_d0),
            "z_value": float(report.z_value),
            "within_4_sigma": bool(report.within_4_sigma),
        }
    payload = {"fringe_rows": rows, "timing": timing_payload}
    summary = {
        "timing_within_4_sigma": None if timing_payload is None
        else timing_payload["within_4_sigma"],
    }
    csv_rows = [(r["phase_deg"], r["closed_fraction_d0"], r["open_fraction_d0"]) for r in rows]
    return payload, ["phase_deg", "closed_fraction_d0", "open_fraction_d0"], csv_rows, summary


_RUNNERS = {
    "malus": _run_malus,
    "entropy": _run_entropy,
    "bell": _run_bell,
    "nosignal": _run_nosignal,
    "protocol": _run_protocol,
    "mzi": _run_mzi,
}


def _csv_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".10g")


def _render_csv(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_csv_cell(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"


def _write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonlab",
        description="Seeded quantum-optics experiments with machine-readable reports.",
    )
    parser.add_argument("--version", action="version", version=f"photonlab {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    descriptions = {
        "malus": "polarizer cascades, analytic or per-photon Monte Carlo, plus angle sweeps",
        "entropy": "superposition entropy before and after collapse over a weight grid",
        "bell": "singlet correlation sweep and the CHSH statistic",
        "nosignal": "Bob-marginal trace distances and per-basis Bob statistics",
        "protocol": "the entanglement bit-transmission scheme under a receiver model",
        "mzi": "Mach-Zehnder fringes and delayed-choice timing invariance",
    }
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=descriptions[name])
        sp.add_argument("--config", help="JSON config file; a run manifest also works")
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
        sp.add_argument("--workers", type=int, default=None, help="parallel partitions (default 1)")
        sp.add_argument("--out", default=None, help="result file path")
        sp.add_argument("--format", choices=("json", "csv"), default=None)
        sp.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one parameter (dotted keys; value parsed as JSON)",
        )
    return parser


def _run(args) -> int:
    experiment = args.experiment
    config = _load_config(args.config) if args.config else {}
    if config.get("experiment") not in (None, experiment):
        raise ConfigError(
            f"config is for experiment {config['experiment']!r}, not {experiment!r}"
        )
    params = _deep_merge(DEFAULTS[experiment], config.get("params", {}))
    params = _deep_merge(params, _parse_set_overrides(args.set))
    jsonschema.validate(params, SCHEMAS[experiment])

    seed = args.seed if args.seed is not None else config.get("seed", 0)
    workers = args.workers if args.workers is not None else config.get("workers", 1)
    out_format = args.format if args.format is not None else config.get("format", "json")
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        raise ConfigError(f"workers must be a positive integer, got {workers!r}")
    if out_format not in ("json", "csv"):
        raise ConfigError(f"format must be 'json' or 'csv', got {out_format!r}")
    if out_format == "csv" and experiment == "protocol":
        raise ConfigError("the protocol report is not tabular; use --format json")

    out_path = args.out if args.out is not None else config.get("out")
    if out_path is None:
        out_dir = os.environ.get("PHOTONLAB_OUT_DIR", os.getcwd())
        out_path = os.path.join(out_dir, f"{experiment}.{out_format}")

    started = time.perf_counter()
    payload, csv_header, csv_rows, summary = _RUNNERS[experiment](params, seed, workers)
    elapsed = time.perf_counter() - started

    if out_format == "csv":
        result_text = _render_csv(csv_header, csv_rows)
    else:
        result = {
            "experiment": experiment,
            "seed": seed,
            "workers": workers,
            "rng_algorithm": ALGORITHM_ID,
            "params": params,
        }
        result.update(payload)
        result_text = json.dumps(result, indent=2) + "\n"
    manifest = {
        "tool_version": __version__,
        "experiment": experiment,
        "params": params,
        "seed": seed,
        "workers": workers,
        "format": out_format,
        "out": str(out_path),
        "rng_algorithm": ALGORITHM_ID,
        "wall_time_s": round(elapsed, 6),
        "summary": summary,
    }
    _write_text(out_path, result_text)
    manifest_path = f"{out_path}.manifest.json"
    _write_text(manifest_path, json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {out_path}")
    print(f"wrote {manifest_path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, jsonschema.ValidationError) as exc:
        message = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        print(f"config error: {message}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
