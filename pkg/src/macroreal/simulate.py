"""Monte Carlo timestamp-stream generator for the blocker protocol.

Produces integer-picosecond click streams for the heralding detector and
the two output detectors of the circuit, one sub-run at a time.  A pair
event heralds with probability ``eta_herald`` and sends one signal photon
(or, with probability ``gamma``, two independent ones) through the
interferometer: the outer arm is sampled classically (the two arms add
incoherently, see :mod:`macroreal.circuit`), blockers absorb, and the
surviving photon clicks a detector with the arm-conditional branch weight
times the detector efficiency.  Signal clicks are delayed by ``base_delay``
plus ``arm_delay_tau`` when the photon took the -1 outer arm, with Gaussian
timing jitter; every channel also carries an independent Poisson dark-count
stream.

``run_protocol`` schedules the full four-run measurement protocol (nine
sub-runs) with per-iteration seeds derived from one master seed, and
returns a lazily generated dataset that can also be materialized to a CSV
directory tree.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from .circuit import BlockerConfig, RUN_CONFIGS, SetupParams, arm_branch_weights

__all__ = [
    "CHANNELS",
    "DEFAULT_ITERATIONS",
    "ExperimentDataset",
    "INTERFERENCE_RUNS",
    "SourceConfig",
    "TimestampStream",
    "derive_iteration_state",
    "generate_sub_run",
    "load_dataset",
    "run_protocol",
]

#: Channel labels: herald, +1 detector, -1 detector.
CHANNELS = ("H", "P", "M")

#: Runs with live inner-loop interference (nothing blocked at t2).
INTERFERENCE_RUNS = frozenset({2, 4})

#: Default per-sub-run iteration counts by run class.
DEFAULT_ITERATIONS = {"interference": 300, "non_interference": 150}

_PS_PER_SECOND = 1_000_000_000_000


@dataclass(frozen=True)
class SourceConfig:
    """Source, detector and timing parameters of one simulated sub-run.

    Parameters
    ----------
    pair_rate : float
        Photon-pair events per second.
    duration : float
        Acquisition time of one iteration, in seconds.
    gamma : float
        Fraction of events carrying two signal photons, in [0, 1).
    eta_herald, eta1, eta2 : float
        Detection efficiencies of the herald and the +1/-1 output
        detectors, each in (0, 1].
    dark_rate_h, dark_rate_p, dark_rate_m : float
        Dark counts per second on each channel.
    jitter_sigma : float
        Gaussian timing jitter of signal clicks, in picoseconds.
    base_delay : float
        Herald-to-signal delay of the +1 outer arm, in picoseconds.
    arm_delay_tau : float
        Extra delay of the -1 outer arm, in picoseconds.
    seed : int
        Seed of the sub-run's private random stream.
    """

    pair_rate: float = 5.0e4
    duration: float = 1.0
    gamma: float = 0.0023
    eta_herald: float = 0.6
    eta1: float = 0.6
    eta2: float = 0.6
    dark_rate_h: float = 100.0
    dark_rate_p: float = 100.0
    dark_rate_m: float = 100.0
    jitter_sigma: float = 400.0
    base_delay: float = 1.0e5
    arm_delay_tau: float = 2.0e4
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("pair_rate", "dark_rate_h", "dark_rate_p", "dark_rate_m"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.duration <= 0.0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        for name in ("eta_herald", "eta1", "eta2"):
            eta = getattr(self, name)
            if not 0.0 < eta <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {eta}")
        for name in ("jitter_sigma", "base_delay", "arm_delay_tau"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed}")

    @property
    def duration_ps(self) -> int:
        """Iteration length in integer picoseconds."""
        return int(round(self.duration * _PS_PER_SECOND))


@dataclass(frozen=True)
class TimestampStream:
    """Sorted click record of one channel.

    Parameters
    ----------
    channel : str
        One of ``"H"``, ``"P"``, ``"M"``.
    times : numpy.ndarray
        Strictly increasing int64 timestamps in picoseconds.  Clicks
        falling in the same picosecond are merged (a detector cannot
        resolve them).
    """

    channel: str
    times: np.ndarray

    def __post_init__(self) -> None:
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        times = np.asarray(self.times, dtype=np.int64)
        if times.ndim != 1:
            raise ValueError("times must be one-dimensional")
        if times.size and times[0] < 0:
            raise ValueError("timestamps must be nonnegative")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return int(self.times.size)


def _finalize_times(raw: np.ndarray, dark: np.ndarray, duration_ps: int) -> np.ndarray:
    """Merge signal and dark clicks, drop out-of-range ones, make strict."""
    merged = np.concatenate([raw, dark])
    merged = merged[(merged >= 0) & (merged < duration_ps)]
    return np.unique(merged)


def generate_sub_run(
    src: SourceConfig, setup: SetupParams, blockers: BlockerConfig
) -> Tuple[TimestampStream, TimestampStream, TimestampStream]:
    """Simulate one sub-run and return its three click streams.

    Parameters
    ----------
    src : SourceConfig
        Source, detector and timing parameters (including the seed).
    setup : SetupParams
        Optical parameters of the circuit.
    blockers : BlockerConfig
        Blocker positions of this sub-run.

    Returns
    -------
    tuple of TimestampStream
        ``(herald, plus, minus)`` streams.

    Raises
    ------
    ValueError
        If the configured branch weights times efficiencies exceed unit
        probability for either outer arm (the lumped intensity model allows
        weight sums slightly above one in interference configurations).
    """
    # Arm-conditional click probabilities, fixed for the whole sub-run.
    arm_probs = {}
    for arm in (+1, -1):
        w = arm_branch_weights(setup, blockers, arm)
        p_plus = w.w_plus * src.eta1
        p_minus = w.w_minus * src.eta2
        if p_plus + p_minus > 1.0:
            raise ValueError(
                f"branch weights times efficiencies exceed 1 for arm {arm:+d} "
                f"({p_plus + p_minus:.4f}); reduce eta1/eta2"
            )
        arm_probs[arm] = (p_plus, p_minus)

    rng = np.random.default_rng(src.seed)
    duration_ps = src.duration_ps

    n_pairs = int(rng.poisson(src.pair_rate * src.duration))
    pair_times = rng.integers(0, duration_ps, size=n_pairs, dtype=np.int64)
    herald_hit = rng.random(n_pairs) < src.eta_herald
    doubled = rng.random(n_pairs) < src.gamma

    # One signal photon per event plus an independent second one for
    # two-photon events; each photon routes independently.
    photon_times = np.concatenate([pair_times, pair_times[doubled]])
    n_photons = photon_times.size
    on_plus_arm = rng.random(n_photons) < setup.alpha_sq
    u = rng.random(n_photons)
    jitter = (
        rng.normal(0.0, src.jitter_sigma, n_photons)
        if src.jitter_sigma > 0.0
        else np.zeros(n_photons)
    )

    p_plus = np.where(on_plus_arm, arm_probs[+1][0], arm_probs[-1][0])
    p_minus = np.where(on_plus_arm, arm_probs[+1][1], arm_probs[-1][1])
    to_plus = u < p_plus
    to_minus = ~to_plus & (u < p_plus + p_minus)

    delay = src.base_delay + np.where(on_plus_arm, 0.0, src.arm_delay_tau)
    click_times = photon_times + np.rint(delay + jitter).astype(np.int64)

    def dark(rate: float) -> np.ndarray:
        n = int(rng.poisson(rate * src.duration))
        return rng.integers(0, duration_ps, size=n, dtype=np.int64)

    herald = _finalize_times(pair_times[herald_hit], dark(src.dark_rate_h), duration_ps)
    plus = _finalize_times(click_times[to_plus], dark(src.dark_rate_p), duration_ps)
    minus = _finalize_times(click_times[to_minus], dark(src.dark_rate_m), duration_ps)
    return (
        TimestampStream("H", herald),
        TimestampStream("P", plus),
        TimestampStream("M", minus),
    )


def derive_iteration_state(
    master_seed: int, run: int, sub_run: int, iteration: int
) -> Tuple[int, int]:
    """Per-iteration seeds derived from the master seed.

    Uses a seed sequence spawned at key ``(run, sub_run, iteration)``; the
    first word seeds the sub-run generator, the second the iteration's
    setup jitter (visibility draw).

    Returns
    -------
    tuple of int
        ``(stream_seed, setup_seed)``.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(run, sub_run, iteration))
    state = ss.generate_state(2, np.uint64)
    return int(state[0]), int(state[1])


def _run_iterations(iterations: Dict[str, int]) -> Dict[int, int]:
    """Map run id to its iteration count."""
    unknown = set(iterations) - set(DEFAULT_ITERATIONS)
    if unknown:
        raise ValueError(f"unknown iteration classes: {sorted(unknown)}")
    merged = {**DEFAULT_ITERATIONS, **iterations}
    for name, count in merged.items():
        if int(count) != count or count < 1:
            raise ValueError(f"{name} iteration count must be a positive integer")
    return {
        run: merged["interference" if run in INTERFERENCE_RUNS else "non_interference"]
        for run in RUN_CONFIGS
    }


@dataclass(frozen=True)
class ExperimentDataset:
    """Lazily generated dataset of the full four-run protocol.

    Streams are regenerated on demand from seeds derived from
    ``master_seed``, so the dataset is cheap to hold and deterministic;
    ``to_directory`` materializes it as per-iteration CSV files plus a
    manifest.

    Parameters
    ----------
    source : SourceConfig
        Template configuration; each iteration replaces only the seed.
    setup : SetupParams
        Optical parameters; with ``v_jitter`` set, each iteration replaces
        the visibility by a uniform draw from ``[v_lo, v_hi]``.
    iterations : dict
        Per-run iteration counts, keyed by run id.
    v_jitter : tuple of float, optional
        Per-iteration visibility range.
    master_seed : int
        Root of the per-iteration seed derivation.
    """

    source: SourceConfig
    setup: SetupParams
    iterations: Dict[int, int]
    v_jitter: Optional[Tuple[float, float]] = None
    master_seed: int = 0

    def __post_init__(self) -> None:
        if set(self.iterations) != set(RUN_CONFIGS):
            raise ValueError("iterations must cover exactly the protocol runs")
        if self.v_jitter is not None:
            lo, hi = self.v_jitter
            if not -1.0 <= lo <= hi <= 1.0:
                raise ValueError(f"v_jitter range must satisfy -1 <= lo <= hi <= 1, got {self.v_jitter}")
            object.__setattr__(self, "v_jitter", (float(lo), float(hi)))

    @property
    def run_ids(self) -> Tuple[int, ...]:
        return tuple(sorted(RUN_CONFIGS))

    def sub_run_blockers(self, run: int) -> Tuple[BlockerConfig, ...]:
        """Blocker schedule of one run."""
        return RUN_CONFIGS[run]

    def iteration_count(self, run: int) -> int:
        """Number of iterations of each sub-run of one run."""
        return self.iterations[run]

    def iteration_setup(self, run: int, sub_run: int, iteration: int) -> SetupParams:
        """Setup parameters of one iteration (with the jittered visibility)."""
        if self.v_jitter is None:
            return self.setup
        _, setup_seed = derive_iteration_state(self.master_seed, run, sub_run, iteration)
        v = float(np.random.default_rng(setup_seed).uniform(*self.v_jitter))
        return dataclasses.replace(self.setup, visibility=v)

    def streams(
        self, run: int, sub_run: int, iteration: int
    ) -> Tuple[TimestampStream, TimestampStream, TimestampStream]:
        """Generate the three streams of one iteration."""
        stream_seed, _ = derive_iteration_state(self.master_seed, run, sub_run, iteration)
        src = dataclasses.replace(self.source, seed=stream_seed)
        setup = self.iteration_setup(run, sub_run, iteration)
        return generate_sub_run(src, setup, self.sub_run_blockers(run)[sub_run])

    def to_directory(self, outdir: str, force: bool = False) -> Path:
        """Write every iteration as CSV plus a dataset manifest.

        Parameters
        ----------
        outdir : str
            Target directory; created if absent.
        force : bool
            Overwrite into a non-empty directory.

        Returns
        -------
        pathlib.Path
            Path of the written manifest file.
        """
        root = Path(outdir)
        root.mkdir(parents=True, exist_ok=True)
        if any(root.iterdir()) and not force:
            raise FileExistsError(f"output directory {root} is not empty (use force)")

        files = []
        for run in self.run_ids:
            for sub_run in range(len(self.sub_run_blockers(run))):
                sub_dir = root / f"run{run}_sub{sub_run}"
                sub_dir.mkdir(exist_ok=True)
                for iteration in range(self.iteration_count(run)):
                    streams = self.streams(run, sub_run, iteration)
                    rel = f"run{run}_sub{sub_run}/iter{iteration:04d}.csv"
                    with open(root / rel, "w", newline="") as fh:
                        writer = csv.writer(fh)
                        writer.writerow(["channel", "time_ps"])
                        for stream in streams:
                            for t in stream.times.tolist():
                                writer.writerow([stream.channel, t])
                    stream_seed, _ = derive_iteration_state(
                        self.master_seed, run, sub_run, iteration
                    )
                    files.append(
                        {
                            "run": run,
                            "sub_run": sub_run,
                            "iteration": iteration,
                            "path": rel,
                            "seed": stream_seed,
                        }
                    )

        manifest = {
            "format": "macroreal-dataset-v1",
            "master_seed": self.master_seed,
            "source": dataclasses.asdict(self.source),
            "setup": {
                "alpha_sq": self.setup.alpha_sq,
                "t_ratios": list(self.setup.t_ratios),
                "visibility": self.setup.visibility,
            },
            "v_jitter": list(self.v_jitter) if self.v_jitter else None,
            "iterations": {str(run): count for run, count in sorted(self.iterations.items())},
            "sub_runs": {
                str(run): [
                    {"block_t1": b.block_t1, "block_t2": b.block_t2}
                    for b in self.sub_run_blockers(run)
                ]
                for run in self.run_ids
            },
            "files": files,
        }
        manifest_path = root / "manifest.json"
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return manifest_path


def run_protocol(
    src: SourceConfig,
    setup: SetupParams,
    iterations: Optional[Dict[str, int]] = None,
    v_jitter: Optional[Tuple[float, float]] = None,
) -> ExperimentDataset:
    """Assemble the full protocol dataset.

    Parameters
    ----------
    src : SourceConfig
        Source template; ``src.seed`` acts as the master seed.
    setup : SetupParams
        Optical parameters.
    iterations : dict, optional
        Overrides for ``{"interference": 300, "non_interference": 150}``.
        Runs 2 and 4 are interference runs, runs 1 and 3 are not.
    v_jitter : tuple of float, optional
        Per-iteration uniform visibility range ``(v_lo, v_hi)``.

    Returns
    -------
    ExperimentDataset
        Lazy dataset covering all nine sub-runs.
    """
    per_run = _run_iterations(iterations or {})
    return ExperimentDataset(
        source=src,
        setup=setup,
        iterations=per_run,
        v_jitter=v_jitter,
        master_seed=src.seed,
    )


class _DirectoryDataset:
    """Dataset view over a materialized CSV directory tree."""

    def __init__(self, root: Path, manifest: dict):
        self._root = root
        self._manifest = manifest
        self.master_seed = manifest["master_seed"]
        self.iterations = {int(k): v for k, v in manifest["iterations"].items()}
        self._blockers = {
            int(run): tuple(
                BlockerConfig(entry["block_t1"], entry["block_t2"]) for entry in subs
            )
            for run, subs in manifest["sub_runs"].items()
        }

    @property
    def run_ids(self) -> Tuple[int, ...]:
        return tuple(sorted(self._blockers))

    @property
    def source(self) -> SourceConfig:
        return SourceConfig(**self._manifest["source"])

    def sub_run_blockers(self, run: int) -> Tuple[BlockerConfig, ...]:
        return self._blockers[run]

    def iteration_count(self, run: int) -> int:
        return self.iterations[run]

    def streams(
        self, run: int, sub_run: int, iteration: int
    ) -> Tuple[TimestampStream, TimestampStream, TimestampStream]:
        path = self._root / f"run{run}_sub{sub_run}" / f"iter{iteration:04d}.csv"
        by_channel: Dict[str, list] = {ch: [] for ch in CHANNELS}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or set(reader.fieldnames) != {"channel", "time_ps"}:
                raise ValueError(f"{path}: expected columns channel,time_ps")
            for row in reader:
                by_channel[row["channel"]].append(int(row["time_ps"]))
        return tuple(
            TimestampStream(ch, np.sort(np.asarray(by_channel[ch], dtype=np.int64)))
            for ch in CHANNELS
        )


def load_dataset(path: str) -> _DirectoryDataset:
    """Open a materialized dataset directory.

    Parameters
    ----------
    path : str
        Directory containing ``manifest.json`` and the iteration CSVs.

    Returns
    -------
    _DirectoryDataset
        Read-only dataset with the same access methods as
        :class:`ExperimentDataset`.
    """
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise FileNotFoundError(f"no manifest.json under {root}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != "macroreal-dataset-v1":
        raise ValueError(f"{manifest_path}: unrecognized dataset format")
    return _DirectoryDataset(root, manifest)
