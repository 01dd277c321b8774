"""Batch command-line workbench: predict, hv-bound, gamma-fit, simulate, analyze, report.

Every command reads an optional JSON config file (sections ``source``,
``setup``, ``analysis`` and ``fit``; the defaults reproduce the nominal
setup), writes canonically formatted outputs (sorted JSON keys, floats at
six significant digits, so reruns are byte-identical) and finishes by
emitting ``run_manifest.json`` listing everything it produced.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict
from importlib import metadata
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .analysis import (
    analyze_counts,
    analyze_dataset,
    bootstrap_sdm,
    count_dataset,
    load_run_counts_csv,
    per_iteration_values,
)
from .circuit import SetupParams, Tolerances, qm_lgi, qm_nsit, qm_range, qm_wlgi
from .hvmodels import (
    blocker_setup_bound,
    critical_efficiency,
    lgi_detectors_bound_formula,
    maximize_lgi_detectors,
    maximize_wlgi_detectors,
    wlgi_detectors_bound_formula,
)
from .multiphoton import fit_gamma, fit_report, load_counts_csv, reference_counts
from .simulate import DEFAULT_ITERATIONS, SourceConfig, load_dataset, run_protocol

__all__ = [
    "ConfigError",
    "build_parser",
    "default_config",
    "load_config",
    "main",
]

_EXIT_OK = 0
_EXIT_INPUT = 2
_EXIT_NUMERIC = 3

# Macrorealist bound per inequality/equality expression.
_BOUNDS = {"lgi": 1.0, "wlgi": 0.0, "nsit12": 0.0, "nsit23": 0.0, "nsit13": 0.0}
_EXPRESSIONS = ("lgi", "wlgi", "nsit12", "nsit23", "nsit13")

_REFERENCE_RESULTS = Path(__file__).parent / "_data" / "reference_results.json"

_SDM_DRAW_SIZES = (10, 50, 150, 300)
_SDM_RESAMPLES = 10_000


class ConfigError(ValueError):
    """Invalid configuration or input; the message names the offending field."""


# ---------------------------------------------------------------------------
# Config handling


def default_config() -> Dict[str, dict]:
    """Default configuration, one dict per section, at the nominal setup.

    Returns
    -------
    dict
        Sections ``source`` (photon source, detection and timing model plus
        iteration counts and per-iteration visibility jitter), ``setup``
        (interferometer parameters and their tolerance sweep), ``analysis``
        (histogram and error-sampling controls) and ``fit`` (multiphoton
        fit controls).
    """
    source = asdict(SourceConfig())
    source["iterations"] = dict(DEFAULT_ITERATIONS)
    source["v_jitter"] = [0.7, 0.85]
    return {
        "source": source,
        "setup": {
            "alpha_sq": 0.5,
            "t_ratios": [0.80, 0.79, 0.82, 0.82],
            "visibility": 1.0,
            "v_range": [0.7, 0.85],
            "hwp_angle_deg": 1.0,
            "t_delta": 0.02,
            "grid_points": 21,
        },
        "analysis": {
            "bin_width": 100,
            "window": None,
            "n_samples": 1_000_000,
            "seed": 0,
        },
        "fit": {"seed": 0, "n_starts": 50},
    }


def load_config(path: Optional[str]) -> Dict[str, dict]:
    """Merge a JSON config file over :func:`default_config`.

    Unknown sections or fields raise :class:`ConfigError` naming the field
    path, so typos fail loudly instead of silently keeping a default.

    Parameters
    ----------
    path : str or None
        Config file path; ``None`` returns the defaults unchanged.
    """
    config = default_config()
    if path is None:
        return config
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    for section, fields in raw.items():
        if section not in config:
            raise ConfigError(f"config: unknown section {section!r}")
        if not isinstance(fields, dict):
            raise ConfigError(f"config: section {section!r} must be a JSON object")
        for key, value in fields.items():
            if key not in config[section]:
                raise ConfigError(f"config: unknown field {section}.{key}")
            config[section][key] = value
    return config


def _setup_from_config(config: Dict[str, dict]) -> SetupParams:
    setup = config["setup"]
    try:
        return SetupParams(
            alpha_sq=float(setup["alpha_sq"]),
            t_ratios=tuple(float(t) for t in setup["t_ratios"]),
            visibility=float(setup["visibility"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: setup: {exc}") from exc


def _tolerances_from_config(
    config: Dict[str, dict], v_range: Optional[Sequence[float]]
) -> Tolerances:
    setup = config["setup"]
    try:
        return Tolerances(
            hwp_angle_deg=float(setup["hwp_angle_deg"]),
            t_delta=float(setup["t_delta"]),
            v_range=None if v_range is None else (float(v_range[0]), float(v_range[1])),
            grid_points=int(setup["grid_points"]),
        )
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"config: setup: {exc}") from exc


def _source_from_config(config: Dict[str, dict], seed: Optional[int]):
    """SourceConfig, iteration counts and visibility jitter from the config."""
    section = dict(config["source"])
    iterations = section.pop("iterations")
    v_jitter = section.pop("v_jitter")
    if not isinstance(iterations, dict):
        raise ConfigError("config: source.iterations must be a JSON object")
    merged = dict(DEFAULT_ITERATIONS)
    for key, value in iterations.items():
        if key not in DEFAULT_ITERATIONS:
            raise ConfigError(f"config: source.iterations: unknown class {key!r}")
        count = int(value)
        if count < 1:
            raise ConfigError(f"config: source.iterations.{key} must be >= 1")
        merged[key] = count
    if v_jitter is not None:
        try:
            v_jitter = (float(v_jitter[0]), float(v_jitter[1]))
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"config: source.v_jitter: {exc}") from exc
    if seed is not None:
        section["seed"] = seed
    try:
        source = SourceConfig(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: source: {exc}") from exc
    return source, merged, v_jitter


def _threads(args: argparse.Namespace) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        raw = os.environ.get("MACROREAL_THREADS", "1")
        try:
            n = int(raw)
        except ValueError as exc:
            raise ConfigError(f"MACROREAL_THREADS: {raw!r} is not an integer") from exc
    if n < 1:
        raise ConfigError(f"threads: {n} must be >= 1")
    return n


def _seed_or(args: argparse.Namespace, fallback: int) -> int:
    if args.seed is None:
        return int(fallback)
    if args.seed < 0:
        raise ConfigError(f"seed: {args.seed} must be >= 0")
    return args.seed


# ---------------------------------------------------------------------------
# Canonical output formatting


def _canonical(value):
    """Recursively round floats to six significant digits for stable files."""
    if isinstance(value, dict):
        return {str(k): _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    if isinstance(value, (bool, np.bool_)) or value is None:
        return bool(value) if value is not None else None
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.6g}")
    return value


def _write_json(path: Path, payload) -> Path:
    path.write_text(
        json.dumps(_canonical(payload), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return path


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _read_json(path, label: str) -> dict:
    target = Path(path)
    if not target.is_file():
        raise ConfigError(f"{label}: {target} does not exist")
    try:
        payload = json.loads(target.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{label}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{label}: top level must be a JSON object")
    return payload


def _ensure_outdir(out: Optional[str]) -> Path:
    outdir = Path(out if out is not None else ".")
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def _versions() -> Dict[str, str]:
    versions = {"macroreal": __version__}
    for name in ("numpy", "scipy"):
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def _write_run_manifest(
    outdir: Path,
    command: str,
    config: Dict[str, dict],
    seed: Optional[int],
    outputs: Sequence[Path],
    started: float,
) -> Path:
    """Emit ``run_manifest.json`` last, listing every file the command wrote.

    The manifest records the wall-clock duration, so it is the one output
    excluded from the byte-identical rerun guarantee.
    """
    manifest = {
        "command": command,
        "config": config,
        "master_seed": seed,
        "versions": _versions(),
        "outputs": sorted(p.relative_to(outdir).as_posix() for p in outputs),
        "duration_seconds": time.time() - started,
    }
    return _write_json(outdir / "run_manifest.json", manifest)


# ---------------------------------------------------------------------------
# predict


def _prediction_payload(config: Dict[str, dict]) -> dict:
    """Point values plus tolerance-swept ranges for all five expressions."""
    setup = _setup_from_config(config)
    nsit = qm_nsit(setup)
    point = {
        "lgi": qm_lgi(setup),
        "wlgi": qm_wlgi(setup),
        "nsit12": nsit.nsit12,
        "nsit23": nsit.nsit23,
        "nsit13": nsit.nsit13,
    }
    v_range = config["setup"]["v_range"]
    fixed = qm_range(setup, _tolerances_from_config(config, None))
    if v_range is None:
        swept = fixed
    else:
        swept = qm_range(setup, _tolerances_from_config(config, v_range))

    def _ranges(spans: Dict[str, Tuple[float, float]]) -> Dict[str, List[float]]:
        # nsit12/nsit13 vanish identically in this model, hence point ranges.
        return {
            "lgi": list(spans["lgi"]),
            "wlgi": list(spans["wlgi"]),
            "nsit12": [point["nsit12"], point["nsit12"]],
            "nsit23": list(spans["nsit23"]),
            "nsit13": [point["nsit13"], point["nsit13"]],
        }

    return {
        "setup": {
            "alpha_sq": setup.alpha_sq,
            "t_ratios": list(setup.t_ratios),
            "visibility": setup.visibility,
        },
        "visibility_range": None if v_range is None else [float(v) for v in v_range],
        "point": point,
        "range": _ranges(swept),
        "range_fixed_visibility": _ranges(fixed),
    }


def cmd_predict(args: argparse.Namespace) -> int:
    """Write ``prediction.json`` with point values and swept ranges."""
    started = time.time()
    config = load_config(args.config)
    outdir = _ensure_outdir(args.out)
    payload = _prediction_payload(config)
    path = _write_json(outdir / "prediction.json", payload)
    point, spans = payload["point"], payload["range"]
    for name in ("lgi", "wlgi", "nsit23"):
        lo, hi = spans[name]
        print(f"{name} {point[name]:.4f}  range [{lo:.4f}, {hi:.4f}]")
    print(f"Wrote {path}")
    _write_run_manifest(outdir, "predict", config, None, [path], started)
    return _EXIT_OK


# ---------------------------------------------------------------------------
# hv-bound


def _witness_support(weights) -> List[List[float]]:
    idx = np.nonzero(weights.values)[0]
    return [[int(i), float(weights.values[i])] for i in idx]


def cmd_hv_bound(args: argparse.Namespace) -> int:
    """Certify detector-efficiency bounds over an efficiency grid."""
    started = time.time()
    config = load_config(args.config)
    outdir = _ensure_outdir(args.out)
    seed = _seed_or(args, 0)
    if args.eta:
        try:
            etas = [float(tok) for tok in args.eta.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"eta: {exc}") from exc
    else:
        etas = [round(float(x), 6) for x in np.linspace(0.05, 1.0, 20)]
    if not etas:
        raise ConfigError("eta: empty efficiency list")
    for eta in etas:
        if not 0.0 < eta <= 1.0:
            raise ConfigError(f"eta: {eta} outside (0, 1]")
    names = ("LGI", "WLGI") if args.inequality == "both" else (args.inequality,)
    maximizers = {"LGI": maximize_lgi_detectors, "WLGI": maximize_wlgi_detectors}

    rows = []
    certificates = []
    for eta in etas:
        rows.append(
            [
                eta,
                lgi_detectors_bound_formula(eta),
                wlgi_detectors_bound_formula(eta),
                blocker_setup_bound("LGI", eta).bound,
                blocker_setup_bound("WLGI", eta).bound,
            ]
        )
        entry: Dict[str, object] = {"eta": eta}
        for name in names:
            cert = maximizers[name](eta, n_starts=args.starts, seed=seed)
            entry[name.lower()] = {
                "bound": cert.bound,
                "formula_value": cert.formula_value,
                "witness_support": _witness_support(cert.witness),
                "probe_findings": len(cert.findings),
            }
        certificates.append(entry)

    critical = {
        "lgi": critical_efficiency("LGI"),
        "wlgi": critical_efficiency("WLGI"),
    }
    csv_path = _write_csv(
        outdir / "bound_vs_eta.csv",
        [
            "eta",
            "lgi_detectors_bound",
            "wlgi_detectors_bound",
            "lgi_blocker_bound",
            "wlgi_blocker_bound",
        ],
        rows,
    )
    json_path = _write_json(
        outdir / "hv_bounds.json",
        {"critical_efficiency": critical, "certificates": certificates},
    )
    print(f"critical efficiency  lgi {critical['lgi']:.4f}  wlgi {critical['wlgi']:.4f}")
    print(f"Wrote {csv_path}")
    print(f"Wrote {json_path}")
    _write_run_manifest(outdir, "hv-bound", config, seed, [csv_path, json_path], started)
    return _EXIT_OK


# ---------------------------------------------------------------------------
# gamma-fit


def cmd_gamma_fit(args: argparse.Namespace) -> int:
    """Fit the multiphoton emission parameter to a twelve-count table."""
    started = time.time()
    config = load_config(args.config)
    outdir = _ensure_outdir(args.out)
    threads = _threads(args)
    seed = _seed_or(args, config["fit"]["seed"])
    n_starts = int(config["fit"]["n_starts"])
    if args.counts is None:
        observed = reference_counts()
        counts_label = "bundled"
    else:
        try:
            observed = load_counts_csv(args.counts)
        except (KeyError, ValueError, OSError) as exc:
            raise ConfigError(f"counts: {exc}") from exc
        counts_label = str(args.counts)

    result = fit_gamma(observed, n_starts=n_starts, seed=seed, threads=threads)
    payload = fit_report(result)
    payload["counts"] = counts_label
    path = _write_json(outdir / "gamma_fit.json", payload)
    print(
        f"gamma {result.params.gamma:.6g}  chi2 {result.chi2:.6g}"
        f"  converged {result.converged}"
    )
    print(f"Wrote {path}")
    _write_run_manifest(outdir, "gamma-fit", config, seed, [path], started)
    if not result.converged:
        print("error: fit did not converge", file=sys.stderr)
        return _EXIT_NUMERIC
    return _EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args: argparse.Namespace) -> int:
    """Generate a full-protocol timestamped dataset on disk."""
    started = time.time()
    config = load_config(args.config)
    if args.out is None:
        raise ConfigError("simulate: --out is required")
    source, iterations, v_jitter = _source_from_config(config, args.seed)
    setup = _setup_from_config(config)
    dataset = run_protocol(source, setup, iterations=iterations, v_jitter=v_jitter)
    try:
        dataset.to_directory(args.out, force=args.force)
    except FileExistsError as exc:
        raise ConfigError(str(exc)) from exc
    outdir = Path(args.out)
    outputs = [p for p in sorted(outdir.rglob("*")) if p.is_file()]
    n_iters = sum(dataset.iteration_count(run) for run in dataset.run_ids)
    print(f"Wrote {len(dataset.run_ids)}-run dataset ({n_iters} iterations) to {outdir}")
    _write_run_manifest(outdir, "simulate", config, source.seed, outputs, started)
    return _EXIT_OK


# ---------------------------------------------------------------------------
# analyze


def _write_per_iteration(path: Path, traces: Dict[str, np.ndarray]) -> Path:
    keys = ["c23", "c13", "c12", "p3", "lgi", "wlgi"]
    length = max(len(traces[k]) for k in keys)
    rows = []
    for i in range(length):
        rows.append(
            [i] + [traces[k][i] if i < len(traces[k]) else None for k in keys]
        )
    return _write_csv(path, ["iteration"] + keys, rows)


def _sdm_rows(counts, seed: int) -> List[List[float]]:
    """Bootstrap SD/M of a non-interference coincidence mean vs draw size."""
    key = (3, 0)
    if key not in counts:
        return []
    samples = counts[key][:, 0]
    rows = []
    for draws in _SDM_DRAW_SIZES:
        if draws > len(samples):
            continue
        res = bootstrap_sdm(samples, draws, _SDM_RESAMPLES, seed=seed)
        rows.append([draws, _SDM_RESAMPLES, res.mean, res.sd, res.sd_over_mean])
    return rows


def cmd_analyze(args: argparse.Namespace) -> int:
    """Analyze a dataset directory or a per-run counts CSV."""
    started = time.time()
    config = load_config(args.config)
    outdir = _ensure_outdir(args.out)
    section = config["analysis"]
    seed = _seed_or(args, section["seed"])
    bin_width = int(section["bin_width"])
    window = section["window"]
    if window is not None:
        window = (int(window[0]), int(window[1]))
    target = Path(args.input)
    if not target.exists():
        raise ConfigError(f"input: {target} does not exist")

    outputs: List[Path] = []
    if target.is_dir():
        try:
            dataset = load_dataset(target)
            counts = count_dataset(dataset, bin_width=bin_width, window=window)
            report = analyze_dataset(
                dataset,
                bin_width=bin_width,
                window=window,
                n_samples=int(section["n_samples"]),
                seed=seed,
                counts=counts,
            )
        except (FileNotFoundError, KeyError, ValueError) as exc:
            raise ConfigError(f"input: {exc}") from exc
        outputs.append(_write_json(outdir / "results.json", report.to_dict()))
        outputs.append(
            _write_per_iteration(outdir / "per_iteration.csv", per_iteration_values(counts))
        )
        sdm = _sdm_rows(counts, seed)
        if sdm:
            outputs.append(
                _write_csv(
                    outdir / "sdm_vs_iterations.csv",
                    ["iterations", "resamples", "mean", "sd", "sd_over_mean"],
                    sdm,
                )
            )
    else:
        try:
            counts = load_run_counts_csv(target)
        except (KeyError, ValueError, OSError) as exc:
            raise ConfigError(f"input: {exc}") from exc
        report = analyze_counts(counts)
        outputs.append(_write_json(outdir / "results.json", report.to_dict()))

    lgi_mean, lgi_delta = report.lgi
    wlgi_mean, wlgi_delta = report.wlgi
    lgi_err = "" if lgi_delta is None else f" ± {lgi_delta:.4f}"
    wlgi_err = "" if wlgi_delta is None else f" ± {wlgi_delta:.4f}"
    print(f"lgi {lgi_mean:.4f}{lgi_err}  wlgi {wlgi_mean:.4f}{wlgi_err}")
    for path in outputs:
        print(f"Wrote {path}")
    _write_run_manifest(outdir, "analyze", config, seed, outputs, started)
    return _EXIT_OK


# ---------------------------------------------------------------------------
# report


def _comparison(prediction: dict, analysis: dict) -> Tuple[List[list], List[str]]:
    """Side-by-side rows and text lines for measured vs predicted values."""
    spans = prediction.get("range", {})
    rows = []
    lines = [
        f"{'expression':<10} {'measured':>11} {'delta':>8} {'bound':>6} "
        f"{'margin':>11} {'margin/delta':>13} {'qm range':>26}  verdict"
    ]
    for name in _EXPRESSIONS:
        entry = analysis.get(name)
        if entry is None or "mean" not in entry:
            raise ConfigError(f"analysis: missing expression {name!r}")
        mean = float(entry["mean"])
        delta = entry.get("delta")
        delta = None if delta is None else float(delta)
        bound = _BOUNDS[name]
        margin = mean - bound
        ratio = margin / delta if delta else None
        span = spans.get(name)
        if span is not None:
            lo, hi = float(span[0]), float(span[1])
            slack = delta if delta is not None else 0.0
            inside = bool(lo - slack <= mean <= hi + slack)
            span_text = f"[{_cell(lo)}, {_cell(hi)}]"
        else:
            lo = hi = inside = None
            span_text = ""
        if name.startswith("nsit"):
            if delta is None:
                verdict = "no error estimate"
            elif abs(mean) <= delta:
                verdict = "consistent with zero"
            else:
                verdict = "nonzero"
        else:
            verdict = "violates bound" if margin > (delta or 0.0) else "within bound"
        if inside is not None:
            verdict += "; inside qm range" if inside else "; outside qm range"
        rows.append([name, mean, delta, bound, margin, ratio, lo, hi, inside])
        lines.append(
            f"{name:<10} {_cell(mean):>11} {_cell(delta):>8} {_cell(bound):>6} "
            f"{_cell(margin):>11} {_cell(ratio):>13} {span_text:>26}  {verdict}"
        )
    correlations = analysis.get("correlations")
    if correlations:
        lines.append("")
        for key in sorted(correlations):
            corr = correlations[key]
            sigma = corr.get("sigma")
            err = "" if sigma is None else f" ± {_cell(sigma)}"
            lines.append(f"corr {key}  {_cell(corr.get('mean'))}{err}")
    return rows, lines


def cmd_report(args: argparse.Namespace) -> int:
    """Tabulate measured results against predictions and macrorealist bounds."""
    started = time.time()
    config = load_config(args.config)
    outdir = _ensure_outdir(args.out)
    if args.prediction is not None:
        prediction = _read_json(args.prediction, "prediction")
    else:
        prediction = _prediction_payload(config)
    if args.analysis is not None:
        analysis_payload = _read_json(args.analysis, "analysis")
    else:
        analysis_payload = _read_json(_REFERENCE_RESULTS, "analysis")

    rows, lines = _comparison(prediction, analysis_payload)
    csv_path = _write_csv(
        outdir / "report.csv",
        [
            "expression",
            "measured_mean",
            "measured_delta",
            "bound",
            "margin",
            "margin_over_delta",
            "qm_low",
            "qm_high",
            "inside_qm_range",
        ],
        rows,
    )
    txt_path = outdir / "report.txt"
    txt_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    print(f"Wrote {csv_path}")
    print(f"Wrote {txt_path}")
    _write_run_manifest(outdir, "report", config, None, [csv_path, txt_path], started)
    return _EXIT_OK


# ---------------------------------------------------------------------------
# Parser and entry point


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subcommand per workbench verb."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", metavar="PATH", help="JSON config file (defaults: nominal setup)"
    )
    common.add_argument(
        "--seed", type=int, metavar="U64", help="override the command's primary seed"
    )
    common.add_argument(
        "--out", metavar="DIR", help="output directory (default: current directory)"
    )
    common.add_argument(
        "--force", action="store_true", help="overwrite non-empty output directories"
    )
    common.add_argument(
        "--threads",
        type=int,
        metavar="N",
        help="worker threads (default: $MACROREAL_THREADS or 1)",
    )

    parser = argparse.ArgumentParser(
        prog="macroreal",
        description="Workbench for the interferometric macrorealism test.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser(
        "predict",
        parents=[common],
        help="quantum-model point values and tolerance-swept ranges",
    )
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser(
        "hv-bound",
        parents=[common],
        help="hidden-variable bound certificates vs detector efficiency",
    )
    p.add_argument(
        "--eta", metavar="LIST", help="comma-separated efficiencies (default: 20-point grid)"
    )
    p.add_argument("--inequality", choices=["LGI", "WLGI", "both"], default="both")
    p.add_argument(
        "--starts", type=int, default=8, help="random multistarts per certificate"
    )
    p.set_defaults(func=cmd_hv_bound)

    p = sub.add_parser(
        "gamma-fit",
        parents=[common],
        help="fit the multiphoton emission parameter to a count table",
    )
    p.add_argument(
        "--counts", metavar="PATH", help="counts CSV (default: bundled reference table)"
    )
    p.set_defaults(func=cmd_gamma_fit)

    p = sub.add_parser(
        "simulate",
        parents=[common],
        help="generate a timestamped dataset for the full protocol",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "analyze",
        parents=[common],
        help="run the analysis pipeline on a dataset directory or counts CSV",
    )
    p.add_argument("input", metavar="PATH", help="dataset directory or per-run counts CSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser(
        "report",
        parents=[common],
        help="side-by-side prediction vs measurement table",
    )
    p.add_argument(
        "--prediction",
        metavar="PATH",
        help="prediction JSON (default: computed from config)",
    )
    p.add_argument(
        "--analysis",
        metavar="PATH",
        help="analysis results JSON (default: bundled reference values)",
    )
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
