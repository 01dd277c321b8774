"""Timestamp post-processing: histograms, windows, probabilities, errors.

Turns per-iteration timestamp streams into the quantities the workbench
reports: delay histograms between the herald and each signal detector,
FWHM coincidence windows with flatline background subtraction, corrected
coincidence counts, joint outcome probability tables, the LGI/WLGI/NSIT
values, worst-case error bounds assembled from cross-combination
distributions, and bootstrap resampling diagnostics.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .circuit import (
    RUN_CONFIGS,
    BlockerConfig,
    JointProbTable,
    UndefinedProbabilityError,
    correlation,
)
from .simulate import TimestampStream

__all__ = [
    "DEFAULT_BIN_WIDTH",
    "DEFAULT_WINDOW_RANGE",
    "BootstrapResult",
    "CoincidenceHistogram",
    "NoPeakError",
    "ResultReport",
    "WindowSelection",
    "analyze_counts",
    "analyze_dataset",
    "bootstrap_sdm",
    "corrected_coincidences",
    "count_dataset",
    "count_sub_run",
    "error_distributions",
    "evaluate_inequalities",
    "histogram",
    "joint_probs_from_counts",
    "joint_probs_from_runs",
    "load_run_counts_csv",
    "per_iteration_values",
    "representative_counts_path",
    "select_window",
]

DEFAULT_BIN_WIDTH = 100
DEFAULT_WINDOW_RANGE = (-50_000, 50_000)

# A peak must rise this many Poisson sigmas above the flatline to count.
PEAK_THRESHOLD_SIGMAS = 5.0
# Flatline bins are taken beyond this many window widths from the peak.
_FLATLINE_EXCLUSION_FACTOR = 3

_BLOCKED_TO_OUTCOME = {"minus": +1, "plus": -1}
# Detector column order used throughout: (+1 detector, -1 detector).
_DETECTOR_COLUMNS = ("P", "M")
_TABLE_RUN = {
    ("t2", "t3"): 1,
    ("t1", "t3"): 2,
    ("t1", "t2", "t3"): 3,
    ("t1", "t2"): 3,
    ("t3",): 4,
}
_SAMPLE_CHUNK = 200_000
_BOOTSTRAP_CHUNK = 20_000


class NoPeakError(ValueError):
    """Histogram has no detectable coincidence peak (blocked or noise-only)."""


@dataclass(frozen=True)
class CoincidenceHistogram:
    """Counts of detector time differences over uniform delay bins.

    Attributes
    ----------
    bin_width : int
        Bin width in picoseconds.
    origin : int
        Left edge of the first bin in picoseconds.
    counts : numpy.ndarray
        Nonnegative integer counts, one per bin, at least three bins.
    """

    bin_width: int
    origin: int
    counts: np.ndarray

    def __post_init__(self) -> None:
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.ndim != 1 or counts.size < 3:
            raise ValueError("counts must be a 1-D array with at least 3 bins")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def n_bins(self) -> int:
        return int(self.counts.size)

    def bin_start(self, index: int) -> int:
        """Left edge of bin ``index`` in picoseconds."""
        return self.origin + index * self.bin_width


@dataclass(frozen=True)
class WindowSelection:
    """Coincidence window on the delay axis with its background estimate.

    Attributes
    ----------
    start, end : int
        Window interval [start, end) in picoseconds, aligned to bins.
    flatline_mean : float
        Estimated background counts per bin outside the peak.
    policy : str
        Window sizing rule; only ``"FWHM"`` is implemented.
    bin_width : int
        Bin width in picoseconds the window was derived from.
    """

    start: int
    end: int
    flatline_mean: float
    policy: str = "FWHM"
    bin_width: int = DEFAULT_BIN_WIDTH

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError("window start must precede end")
        if self.flatline_mean < 0.0:
            raise ValueError("flatline_mean must be nonnegative")
        if self.policy != "FWHM":
            raise ValueError("only the FWHM window policy is supported")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        if (self.end - self.start) % self.bin_width != 0:
            raise ValueError("window must span a whole number of bins")

    @property
    def n_bins(self) -> int:
        return (self.end - self.start) // self.bin_width


@dataclass(frozen=True)
class BootstrapResult:
    """Spread of resampled iteration means.

    Attributes
    ----------
    I : int
        Samples drawn (with replacement) per resampled mean.
    K : int
        Number of resampled means.
    mean : float
        Mean of the K resampled means.
    sd : float
        Standard deviation across the K resampled means.
    sd_over_mean : float or None
        sd / mean, or None when the mean is exactly zero.
    """

    I: int
    K: int
    mean: float
    sd: float
    sd_over_mean: Optional[float]

    def __post_init__(self) -> None:
        if self.K < 1 or self.I < 1:
            raise ValueError("I and K must be at least 1")
        if self.sd < 0.0:
            raise ValueError("sd must be nonnegative")

    @property
    def ratio_defined(self) -> bool:
        return self.sd_over_mean is not None


@dataclass(frozen=True)
class ResultReport:
    """Inequality values with worst-case errors and their ingredients.

    Attributes
    ----------
    lgi, wlgi, nsit12, nsit23, nsit13 : tuple
        (mean, delta) pairs; delta is None when the input carries no
        iteration spread (e.g. a single table of mean counts).
    correlations : dict
        ``"t1t2"``/``"t2t3"``/``"t1t3"`` -> (value, sigma or None).
    wlgi_terms : dict
        The three P(-, +) probabilities entering the WLGI expression.
    provenance : dict
        Input description (iteration counts, seeds, window settings).
    """

    lgi: Tuple[float, Optional[float]]
    wlgi: Tuple[float, Optional[float]]
    nsit12: Tuple[float, Optional[float]]
    nsit23: Tuple[float, Optional[float]]
    nsit13: Tuple[float, Optional[float]]
    correlations: Dict[str, Tuple[float, Optional[float]]]
    wlgi_terms: Dict[str, float]
    provenance: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        """JSON-ready dictionary with mean/delta keys."""

        def pair(values: Tuple[float, Optional[float]], err: str) -> Dict[str, object]:
            mean, delta = values
            return {"mean": float(mean), err: None if delta is None else float(delta)}

        return {
            "lgi": pair(self.lgi, "delta"),
            "wlgi": pair(self.wlgi, "delta"),
            "nsit12": pair(self.nsit12, "delta"),
            "nsit23": pair(self.nsit23, "delta"),
            "nsit13": pair(self.nsit13, "delta"),
            "correlations": {
                key: pair(value, "sigma") for key, value in self.correlations.items()
            },
            "wlgi_terms": {key: float(v) for key, v in self.wlgi_terms.items()},
            "provenance": dict(self.provenance),
        }


Stream = Union[TimestampStream, Sequence[int], np.ndarray]


def _times(stream: Stream) -> np.ndarray:
    if isinstance(stream, TimestampStream):
        return stream.times
    times = np.asarray(stream, dtype=np.int64)
    if times.ndim != 1:
        raise ValueError("timestamp input must be one-dimensional")
    if times.size > 1 and np.any(np.diff(times) < 0):
        raise ValueError("timestamps must be sorted ascending")
    return times


def histogram(
    a: Stream,
    b: Stream,
    bin_width: int = DEFAULT_BIN_WIDTH,
    window: Tuple[int, int] = DEFAULT_WINDOW_RANGE,
) -> CoincidenceHistogram:
    """Histogram of pairwise time differences t_b - t_a within a range.

    Counts every pair whose difference falls in ``[window[0], window[1])``
    into uniform bins.  The pairing cost is linear in the number of events
    plus the number of in-range pairs (sorted-merge lookups, no quadratic
    scan).

    Parameters
    ----------
    a, b : TimestampStream or sorted integer array
        Reference (e.g. herald) and test streams.
    bin_width : int
        Bin width in picoseconds.
    window : tuple of int
        Half-open difference range; must span a whole number of bins and
        at least three of them.

    Returns
    -------
    CoincidenceHistogram
    """
    lo, hi = int(window[0]), int(window[1])
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if hi <= lo or (hi - lo) % bin_width != 0:
        raise ValueError("range must span a positive whole number of bins")
    n_bins = (hi - lo) // bin_width
    if n_bins < 3:
        raise ValueError("range must cover at least 3 bins")

    ta, tb = _times(a), _times(b)
    counts = np.zeros(n_bins, dtype=np.int64)
    if ta.size == 0 or tb.size == 0:
        return CoincidenceHistogram(bin_width, lo, counts)

    left = np.searchsorted(tb, ta + lo, side="left")
    right = np.searchsorted(tb, ta + hi, side="left")
    per = right - left
    total = int(per.sum())
    if total == 0:
        return CoincidenceHistogram(bin_width, lo, counts)

    offsets = np.concatenate(([0], np.cumsum(per)[:-1]))
    flat = np.arange(total, dtype=np.int64) - np.repeat(offsets, per) + np.repeat(left, per)
    diffs = tb[flat] - np.repeat(ta, per)
    counts = np.bincount((diffs - lo) // bin_width, minlength=n_bins)
    return CoincidenceHistogram(bin_width, lo, counts.astype(np.int64))


def _expand_window(counts: np.ndarray, peak_idx: int, level: float) -> Tuple[int, int]:
    i_lo = peak_idx
    while i_lo > 0 and counts[i_lo - 1] >= level:
        i_lo -= 1
    i_hi = peak_idx
    while i_hi + 1 < counts.size and counts[i_hi + 1] >= level:
        i_hi += 1
    return i_lo, i_hi


def _detectable(peak: float, flatline: float) -> bool:
    return peak >= flatline + PEAK_THRESHOLD_SIGMAS * math.sqrt(flatline + 1.0)


def select_window(h: CoincidenceHistogram) -> WindowSelection:
    """Select the FWHM coincidence window around the histogram peak.

    Finds the maximum bin, takes the contiguous interval where counts stay
    at or above the flatline-corrected half maximum, then refines the
    flatline estimate from bins beyond three window widths of the interval
    (excluding peak-like outliers among them, so a second delay peak does
    not count as background) and re-expands once at the refined
    half-maximum level.

    Parameters
    ----------
    h : CoincidenceHistogram

    Returns
    -------
    WindowSelection

    Raises
    ------
    NoPeakError
        If the maximum bin does not exceed the flatline by at least
        5 * sqrt(flatline + 1) counts (blocked or noise-only input).
    """
    counts = h.counts.astype(float)
    flatline = float(np.median(counts))
    peak_idx = int(np.argmax(counts))
    peak = float(counts[peak_idx])
    if not _detectable(peak, flatline):
        raise NoPeakError("no coincidence peak above the flatline")

    i_lo, i_hi = _expand_window(counts, peak_idx, flatline + 0.5 * (peak - flatline))
    width = i_hi - i_lo + 1
    margin = _FLATLINE_EXCLUSION_FACTOR * width
    mask = np.ones(counts.size, dtype=bool)
    mask[max(0, i_lo - margin) : min(counts.size, i_hi + margin + 1)] = False
    if mask.any():
        rest = counts[mask]
        med = float(np.median(rest))
        # A second delay peak elsewhere must not inflate the background.
        keep = rest < med + PEAK_THRESHOLD_SIGMAS * math.sqrt(med + 1.0)
        flatline = float(rest[keep].mean()) if keep.any() else float(rest.mean())
    if not _detectable(peak, flatline):
        raise NoPeakError("no coincidence peak above the flatline")
    i_lo, i_hi = _expand_window(counts, peak_idx, flatline + 0.5 * (peak - flatline))

    return WindowSelection(
        start=h.bin_start(i_lo),
        end=h.bin_start(i_hi + 1),
        flatline_mean=max(flatline, 0.0),
        policy="FWHM",
        bin_width=h.bin_width,
    )


def _raw_pairs(ta: np.ndarray, tb: np.ndarray, start: int, end: int) -> int:
    left = np.searchsorted(tb, ta + start, side="left")
    right = np.searchsorted(tb, ta + end, side="left")
    return int(np.sum(right - left))


def corrected_coincidences(a: Stream, b: Stream, w: WindowSelection) -> float:
    """Background-corrected pair count inside a coincidence window.

    Subtracts ``flatline_mean`` times the window width in bins from the
    raw number of pairs with difference in [start, end); negative results
    clamp to zero with a warning.

    Parameters
    ----------
    a, b : TimestampStream or sorted integer array
    w : WindowSelection

    Returns
    -------
    float
    """
    ta, tb = _times(a), _times(b)
    raw = _raw_pairs(ta, tb, w.start, w.end)
    value = raw - w.flatline_mean * w.n_bins
    if value < 0.0:
        warnings.warn(
            f"corrected coincidences clamped to zero "
            f"(raw {raw}, background {w.flatline_mean * w.n_bins:.1f})",
            RuntimeWarning,
            stacklevel=2,
        )
        return 0.0
    return float(value)


def count_sub_run(
    herald: Stream,
    detector: Stream,
    bin_width: int = DEFAULT_BIN_WIDTH,
    window: Tuple[int, int] = DEFAULT_WINDOW_RANGE,
    max_peaks: int = 4,
) -> float:
    """Total corrected coincidences between a herald and one detector.

    Interference sub-runs mix the two outer-arm path delays, so the delay
    histogram can show up to two separated peaks; this finds up to
    ``max_peaks`` windows by repeatedly selecting a peak and masking it to
    the flatline, then sums the corrected counts of all windows.

    Parameters
    ----------
    herald, detector : TimestampStream or sorted integer array
    bin_width : int
    window : tuple of int
        Search range for the delay histogram.
    max_peaks : int
        Upper bound on distinct coincidence peaks to collect.

    Returns
    -------
    float

    Raises
    ------
    NoPeakError
        If no detectable peak exists at all.
    """
    h = histogram(herald, detector, bin_width, window)
    work = h.counts.astype(np.int64).copy()
    med = float(np.median(work))
    fill = int(round(med))
    windows: List[WindowSelection] = []
    for _ in range(max_peaks):
        try:
            sel = select_window(CoincidenceHistogram(h.bin_width, h.origin, work))
        except NoPeakError:
            break
        if any(sel.start < prev.end and sel.end > prev.start for prev in windows):
            break
        windows.append(sel)
        i_lo = (sel.start - h.origin) // h.bin_width
        i_hi = (sel.end - h.origin) // h.bin_width
        work[i_lo:i_hi] = fill
    if not windows:
        raise NoPeakError("no coincidence peak above the flatline")
    ta, tb = _times(herald), _times(detector)
    return float(sum(corrected_coincidences(ta, tb, sel) for sel in windows))


def _dataset_window(dataset) -> Tuple[int, int]:
    """Delay search range centered on the dataset's nominal path delay.

    Falls back to the zero-centered default when the dataset does not
    carry a source configuration (e.g. external time-tagger exports).
    """
    source = getattr(dataset, "source", None)
    if source is None:
        return DEFAULT_WINDOW_RANGE
    half = (DEFAULT_WINDOW_RANGE[1] - DEFAULT_WINDOW_RANGE[0]) // 2
    center = int(round(source.base_delay))
    return (center - half, center + half)


def count_dataset(
    dataset,
    bin_width: int = DEFAULT_BIN_WIDTH,
    window: Optional[Tuple[int, int]] = None,
) -> Dict[Tuple[int, int], np.ndarray]:
    """Corrected coincidence counts for every sub-run iteration.

    Parameters
    ----------
    dataset : ExperimentDataset or directory dataset
        Must expose ``run_ids``, ``sub_run_blockers``, ``iteration_count``
        and ``streams``.
    bin_width, window :
        Histogram settings passed to :func:`count_sub_run`; by default the
        search window is centered on the dataset's base path delay.

    Returns
    -------
    dict
        Maps (run, sub_run) to an (iterations, 2) array of corrected
        counts on the (+1, -1) detectors; sub-runs whose histogram shows
        no peak (fully blocked) contribute zeros.
    """
    if window is None:
        window = _dataset_window(dataset)
    out: Dict[Tuple[int, int], np.ndarray] = {}
    for run in dataset.run_ids:
        n_subs = len(dataset.sub_run_blockers(run))
        n_iter = dataset.iteration_count(run)
        for sub in range(n_subs):
            arr = np.zeros((n_iter, 2))
            for it in range(n_iter):
                h_s, p_s, m_s = dataset.streams(run, sub, it)
                for col, det in enumerate((p_s, m_s)):
                    try:
                        arr[it, col] = count_sub_run(h_s, det, bin_width, window)
                    except NoPeakError:
                        arr[it, col] = 0.0
            out[(run, sub)] = arr
    return out


def _run_prefixes(run: int) -> List[Tuple[int, ...]]:
    prefixes = []
    for cfg in RUN_CONFIGS[run]:
        prefix = []
        if cfg.block_t1 != "none":
            prefix.append(_BLOCKED_TO_OUTCOME[cfg.block_t1])
        if cfg.block_t2 != "none":
            prefix.append(_BLOCKED_TO_OUTCOME[cfg.block_t2])
        prefixes.append(tuple(prefix))
    return prefixes


def _mean_cells(counts: Mapping[Tuple[int, int], np.ndarray], run: int) -> List[np.ndarray]:
    cells = []
    for sub in range(len(RUN_CONFIGS[run])):
        if (run, sub) not in counts:
            raise ValueError(f"missing counts for run {run} sub-run {sub}")
        arr = np.asarray(counts[(run, sub)], dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("count arrays must have shape (iterations, 2)")
        cells.append(arr.mean(axis=0))
    return cells


def joint_probs_from_counts(
    counts: Mapping[Tuple[int, int], np.ndarray],
) -> Dict[Tuple[str, ...], JointProbTable]:
    """Joint probability tables from per-sub-run corrected counts.

    Each run's mean cell counts are normalized by the run total; the
    two-time (t1, t2) table is obtained by marginalizing the final time of
    the three-time table.

    Parameters
    ----------
    counts : mapping
        (run, sub_run) -> (iterations, 2) corrected counts, detector
        columns ordered (+1, -1).

    Returns
    -------
    dict
        Keys ("t2","t3"), ("t1","t3"), ("t1","t2","t3"), ("t1","t2") and
        ("t3",) mapped to JointProbTable values (whichever runs are
        present).

    Raises
    ------
    UndefinedProbabilityError
        If a run's total mean count is zero.
    """
    orders = {1: "two-time", 2: "two-time", 3: "three-time", 4: "one-time"}
    keys = {1: ("t2", "t3"), 2: ("t1", "t3"), 3: ("t1", "t2", "t3"), 4: ("t3",)}
    tables: Dict[Tuple[str, ...], JointProbTable] = {}
    for run in (1, 2, 3, 4):
        if not any((run, sub) in counts for sub in range(len(RUN_CONFIGS[run]))):
            continue
        cells = _mean_cells(counts, run)
        prefixes = _run_prefixes(run)
        raw: Dict[Tuple[int, ...], float] = {}
        provenance = []
        for cfg, prefix, cell in zip(RUN_CONFIGS[run], prefixes, cells):
            raw[prefix + (+1,)] = float(cell[0])
            raw[prefix + (-1,)] = float(cell[1])
            provenance.append((cfg, (float(cell[0]), float(cell[1]))))
        total = math.fsum(raw.values())
        if total <= 0.0:
            raise UndefinedProbabilityError(
                f"run {run} total corrected count vanishes; table undefined"
            )
        entries = {key: value / total for key, value in raw.items()}
        tables[keys[run]] = JointProbTable(orders[run], entries, provenance)
    if ("t1", "t2", "t3") in tables:
        tables[("t1", "t2")] = tables[("t1", "t2", "t3")].marginalize_last()
    return tables


def joint_probs_from_runs(
    source,
    bin_width: int = DEFAULT_BIN_WIDTH,
    window: Optional[Tuple[int, int]] = None,
) -> Dict[Tuple[str, ...], JointProbTable]:
    """Joint probability tables from a dataset or precomputed counts.

    Parameters
    ----------
    source : dataset or mapping
        A dataset (counted via :func:`count_dataset`) or a (run, sub_run)
        -> counts mapping as produced by it.
    bin_width, window :
        Histogram settings when counting a dataset.

    Returns
    -------
    dict
        See :func:`joint_probs_from_counts`.
    """
    if isinstance(source, Mapping):
        return joint_probs_from_counts(source)
    return joint_probs_from_counts(count_dataset(source, bin_width, window))


def evaluate_inequalities(
    tables: Mapping[Tuple[str, ...], JointProbTable],
) -> ResultReport:
    """Point values of the LGI, WLGI and NSIT expressions from tables.

    Parameters
    ----------
    tables : mapping
        Requires the ("t2","t3"), ("t1","t3"), ("t1","t2") and ("t3",)
        tables (the last two usually derived from runs 3 and 4).

    Returns
    -------
    ResultReport
        Deltas are None; use :func:`analyze_dataset` for error bounds.

    Raises
    ------
    ValueError
        If a required table is missing (names the absent run).
    """

    def need(key: Tuple[str, ...]) -> JointProbTable:
        if key not in tables:
            label = ",".join(key)
            raise ValueError(f"missing table P({label}) from run {_TABLE_RUN[key]}")
        return tables[key]

    t23, t13, t12 = need(("t2", "t3")), need(("t1", "t3")), need(("t1", "t2"))
    p3 = need(("t3",)).entries
    p23, p13, p12 = t23.entries, t13.entries, t12.entries

    c12, c23, c13 = correlation(t12), correlation(t23), correlation(t13)
    lgi = c12 + c23 - c13
    wlgi_terms = {
        "t1t3": p13[(-1, +1)],
        "t1t2": p12[(-1, +1)],
        "t2t3": p23[(-1, +1)],
    }
    wlgi = wlgi_terms["t1t3"] - wlgi_terms["t1t2"] - wlgi_terms["t2t3"]
    nsit12 = abs(p23[(+1, +1)] + p23[(+1, -1)] - p12[(+1, +1)] - p12[(-1, +1)])
    nsit23 = abs(p3[(+1,)] - p23[(+1, +1)] - p23[(-1, +1)])
    nsit13 = abs(p3[(+1,)] - p13[(+1, +1)] - p13[(-1, +1)])

    return ResultReport(
        lgi=(lgi, None),
        wlgi=(wlgi, None),
        nsit12=(nsit12, None),
        nsit23=(nsit23, None),
        nsit13=(nsit13, None),
        correlations={"t1t2": (c12, None), "t2t3": (c23, None), "t1t3": (c13, None)},
        wlgi_terms=wlgi_terms,
        provenance={"source": "tables"},
    )


def _two_run_values(
    a: np.ndarray, b: np.ndarray, idx_a: np.ndarray, idx_b: np.ndarray
) -> Dict[str, np.ndarray]:
    """Per-combination statistics for a two-sub-run measurement.

    ``a`` rows are the (+ prefix) iteration cells, ``b`` rows the
    (- prefix) ones; index arrays select the pairings (broadcastable).
    """
    cpp, cpm = a[idx_a, 0], a[idx_a, 1]
    cmp_, cmm = b[idx_b, 0], b[idx_b, 1]
    total = cpp + cpm + cmp_ + cmm
    p_pp, p_pm = cpp / total, cpm / total
    p_mp, p_mm = cmp_ / total, cmm / total
    return {
        "corr": p_pp - p_pm - p_mp + p_mm,
        "minus_plus": p_mp,
        "first_plus": p_pp + p_pm,
        "last_plus": p_pp + p_mp,
    }


def _four_way_values(
    cells: Sequence[np.ndarray], indices: Sequence[np.ndarray]
) -> Dict[str, np.ndarray]:
    """Marginal two-time statistics for a four-sub-run combination batch."""
    per_prefix = [
        (cells[k][indices[k], 0], cells[k][indices[k], 1]) for k in range(4)
    ]
    total = sum(plus + minus for plus, minus in per_prefix)
    # Schedule order of the prefixes: (+,+), (+,-), (-,+), (-,-).
    s_pp, s_pm, s_mp, s_mm = (
        (plus + minus) / total for plus, minus in per_prefix
    )
    return {
        "corr": s_pp - s_pm - s_mp + s_mm,
        "minus_plus": s_mp,
        "first_plus": s_pp + s_mp,
    }


def _stds(batches: List[Dict[str, np.ndarray]]) -> Dict[str, float]:
    keys = batches[0].keys()
    return {
        key: float(np.std(np.concatenate([b[key].ravel() for b in batches]), ddof=1))
        for key in keys
    }


def error_distributions(
    source,
    n_samples: int = 1_000_000,
    seed: int = 0,
    exhaustive_limit: int = 20,
    pair_samples: Optional[int] = None,
) -> Dict[str, float]:
    """Standard deviations of cross-combination inequality ingredients.

    Every iteration of one sub-run may be combined with every iteration of
    the others, giving a distribution per derived quantity: the full
    cross-pairing is enumerated for the two-sub-run runs, while the
    four-way combination space of the double-blocked run is subsampled
    with ``n_samples`` uniform draws (enumerated exhaustively when every
    sub-run has at most ``exhaustive_limit`` iterations).

    Parameters
    ----------
    source : dataset or mapping
        Dataset or (run, sub_run) -> (iterations, 2) corrected counts.
    n_samples : int
        Random four-way combination draws.
    seed : int
        Seed for the combination sampler.
    exhaustive_limit : int
        Largest per-sub-run iteration count enumerated exhaustively.
    pair_samples : int, optional
        When set, also subsample the two-run cross-pairings with this many
        draws instead of enumerating them (sampler validation aid).

    Returns
    -------
    dict
        Correlation sigmas ``sigma12``/``sigma23``/``sigma13`` and their
        sum ``delta``; WLGI-term sigmas and ``wlgi_delta``; ``p3_sigma``;
        and the summed NSIT bounds ``nsit12_delta``/``nsit23_delta``/
        ``nsit13_delta``.

    Raises
    ------
    ValueError
        If any sub-run has fewer than 2 iterations.
    """
    if isinstance(source, Mapping):
        counts = source
    else:
        counts = count_dataset(source)
    arrays: Dict[Tuple[int, int], np.ndarray] = {}
    for run in (1, 2, 3, 4):
        for sub in range(len(RUN_CONFIGS[run])):
            arr = np.asarray(counts[(run, sub)], dtype=float)
            if arr.shape[0] < 2:
                raise ValueError(
                    f"run {run} sub-run {sub} has fewer than 2 iterations"
                )
            arrays[(run, sub)] = arr
    rng = np.random.default_rng(seed)

    def cross(run: int) -> Dict[str, float]:
        a, b = arrays[(run, 0)], arrays[(run, 1)]
        if pair_samples is None:
            idx_a, idx_b = np.meshgrid(
                np.arange(a.shape[0]), np.arange(b.shape[0]), indexing="ij"
            )
        else:
            idx_a = rng.integers(0, a.shape[0], size=pair_samples)
            idx_b = rng.integers(0, b.shape[0], size=pair_samples)
        return _stds([_two_run_values(a, b, idx_a, idx_b)])

    run1, run2 = cross(1), cross(2)

    cells3 = [arrays[(3, sub)] for sub in range(4)]
    sizes = [c.shape[0] for c in cells3]
    if max(sizes) <= exhaustive_limit:
        grids = np.meshgrid(*[np.arange(n) for n in sizes], indexing="ij")
        batches = [_four_way_values(cells3, [g.ravel() for g in grids])]
    else:
        batches = []
        drawn = 0
        while drawn < n_samples:
            block = min(_SAMPLE_CHUNK, n_samples - drawn)
            indices = [rng.integers(0, n, size=block) for n in sizes]
            batches.append(_four_way_values(cells3, indices))
            drawn += block
    run3 = _stds(batches)

    totals4 = arrays[(4, 0)].sum(axis=1)
    if np.any(totals4 <= 0.0):
        raise UndefinedProbabilityError("run 4 iteration with zero total count")
    p3 = arrays[(4, 0)][:, 0] / totals4
    p3_sigma = float(np.std(p3, ddof=1))

    delta = run3["corr"] + run1["corr"] + run2["corr"]
    wlgi_delta = run2["minus_plus"] + run3["minus_plus"] + run1["minus_plus"]
    return {
        "sigma12": run3["corr"],
        "sigma23": run1["corr"],
        "sigma13": run2["corr"],
        "delta": delta,
        "wlgi_sigma12": run3["minus_plus"],
        "wlgi_sigma23": run1["minus_plus"],
        "wlgi_sigma13": run2["minus_plus"],
        "wlgi_delta": wlgi_delta,
        "p3_sigma": p3_sigma,
        "nsit12_delta": run1["first_plus"] + run3["first_plus"],
        "nsit23_delta": p3_sigma + run1["last_plus"],
        "nsit13_delta": p3_sigma + run2["last_plus"],
    }


def bootstrap_sdm(
    samples: Sequence[float], I: int, K: int, seed: int = 0
) -> BootstrapResult:
    """Bootstrap spread of the mean of I samples drawn with replacement.

    Parameters
    ----------
    samples : sequence of float
        Observed per-iteration values.
    I : int
        Draws per resampled mean; at most ``len(samples)``.
    K : int
        Number of resampled means.
    seed : int
        Seed for the resampler.

    Returns
    -------
    BootstrapResult
        ``sd_over_mean`` is None when the mean of means is exactly zero.
    """
    arr = np.asarray(samples, dtype=float).ravel()
    if I < 1 or arr.size < I:
        raise ValueError("need 1 <= I <= len(samples)")
    if K < 1:
        raise ValueError("K must be at least 1")
    rng = np.random.default_rng(seed)
    means = np.empty(K)
    done = 0
    while done < K:
        block = min(_BOOTSTRAP_CHUNK, K - done)
        idx = rng.integers(0, arr.size, size=(block, I))
        means[done : done + block] = arr[idx].mean(axis=1)
        done += block
    mean = float(means.mean())
    sd = float(means.std(ddof=1)) if K > 1 else 0.0
    ratio = sd / mean if mean != 0.0 else None
    return BootstrapResult(I=I, K=K, mean=mean, sd=sd, sd_over_mean=ratio)


def per_iteration_values(
    counts: Mapping[Tuple[int, int], np.ndarray],
) -> Dict[str, np.ndarray]:
    """Index-matched per-iteration inequality ingredients for plotting.

    Pairs iteration i of each sub-run within a run (no cross-combination)
    to give one correlation value per iteration, and combines the runs
    index-wise up to the shortest run for per-iteration LGI/WLGI traces.

    Parameters
    ----------
    counts : mapping
        (run, sub_run) -> (iterations, 2) corrected counts.

    Returns
    -------
    dict
        Arrays ``c23``, ``c13``, ``c12``, ``p3``, ``lgi`` and ``wlgi``
        (the last two truncated to the shortest contributing run).
    """
    out: Dict[str, np.ndarray] = {}
    terms: Dict[str, np.ndarray] = {}
    for run, corr_key in ((1, "c23"), (2, "c13")):
        a = np.asarray(counts[(run, 0)], dtype=float)
        b = np.asarray(counts[(run, 1)], dtype=float)
        n = min(a.shape[0], b.shape[0])
        idx = np.arange(n)
        values = _two_run_values(a, b, idx, idx)
        out[corr_key] = values["corr"]
        terms[corr_key] = values["minus_plus"]
    cells3 = [np.asarray(counts[(3, sub)], dtype=float) for sub in range(4)]
    n3 = min(c.shape[0] for c in cells3)
    idx3 = [np.arange(n3)] * 4
    values3 = _four_way_values(cells3, idx3)
    out["c12"] = values3["corr"]
    terms["c12"] = values3["minus_plus"]
    arr4 = np.asarray(counts[(4, 0)], dtype=float)
    out["p3"] = arr4[:, 0] / arr4.sum(axis=1)
    n = min(out["c12"].size, out["c23"].size, out["c13"].size)
    out["lgi"] = out["c12"][:n] + out["c23"][:n] - out["c13"][:n]
    out["wlgi"] = terms["c13"][:n] - terms["c12"][:n] - terms["c23"][:n]
    return out


def analyze_dataset(
    dataset,
    bin_width: int = DEFAULT_BIN_WIDTH,
    window: Optional[Tuple[int, int]] = None,
    n_samples: int = 1_000_000,
    seed: int = 0,
    counts: Optional[Mapping[Tuple[int, int], np.ndarray]] = None,
) -> ResultReport:
    """Full pipeline: count, tabulate, evaluate and bound a dataset.

    Parameters
    ----------
    dataset : ExperimentDataset or directory dataset
    bin_width, window :
        Histogram settings; the search window defaults to one centered on
        the dataset's base path delay.
    n_samples, seed :
        Four-way combination sampling controls for the error bounds.
    counts : mapping, optional
        Precomputed :func:`count_dataset` output for this dataset (with
        the same histogram settings), to avoid counting twice.

    Returns
    -------
    ResultReport
        Point values with worst-case deltas (sum of the contributing
        cross-combination sigmas) and correlation sigmas.
    """
    if window is None:
        window = _dataset_window(dataset)
    if counts is None:
        counts = count_dataset(dataset, bin_width, window)
    tables = joint_probs_from_counts(counts)
    point = evaluate_inequalities(tables)
    sig = error_distributions(counts, n_samples=n_samples, seed=seed)
    iterations = {
        str(run): int(dataset.iteration_count(run)) for run in dataset.run_ids
    }
    return ResultReport(
        lgi=(point.lgi[0], sig["delta"]),
        wlgi=(point.wlgi[0], sig["wlgi_delta"]),
        nsit12=(point.nsit12[0], sig["nsit12_delta"]),
        nsit23=(point.nsit23[0], sig["nsit23_delta"]),
        nsit13=(point.nsit13[0], sig["nsit13_delta"]),
        correlations={
            "t1t2": (point.correlations["t1t2"][0], sig["sigma12"]),
            "t2t3": (point.correlations["t2t3"][0], sig["sigma23"]),
            "t1t3": (point.correlations["t1t3"][0], sig["sigma13"]),
        },
        wlgi_terms=point.wlgi_terms,
        provenance={
            "source": "dataset",
            "bin_width": int(bin_width),
            "window": [int(window[0]), int(window[1])],
            "n_samples": int(n_samples),
            "seed": int(seed),
            "iterations": iterations,
        },
    )


def analyze_counts(counts: Mapping[Tuple[int, int], np.ndarray]) -> ResultReport:
    """Point-value report from corrected counts alone (no error bounds).

    Parameters
    ----------
    counts : mapping
        (run, sub_run) -> (iterations, 2) corrected counts; single-row
        inputs (already-averaged cells) are accepted.

    Returns
    -------
    ResultReport
        Deltas are None.
    """
    report = evaluate_inequalities(joint_probs_from_counts(counts))
    iterations = {}
    for (run, _sub), arr in counts.items():
        iterations[str(run)] = int(np.asarray(arr).shape[0])
    provenance = {"source": "counts", "iterations": iterations}
    return ResultReport(
        lgi=report.lgi,
        wlgi=report.wlgi,
        nsit12=report.nsit12,
        nsit23=report.nsit23,
        nsit13=report.nsit13,
        correlations=report.correlations,
        wlgi_terms=report.wlgi_terms,
        provenance=provenance,
    )


_RUN_SUB_BY_BLOCKERS = {
    (cfg.block_t1, cfg.block_t2): (run, sub)
    for run, cfgs in RUN_CONFIGS.items()
    for sub, cfg in enumerate(cfgs)
}


def load_run_counts_csv(path) -> Dict[Tuple[int, int], np.ndarray]:
    """Load per-sub-run mean coincidence cells from a CSV file.

    Expected columns: ``block_t1``, ``block_t2`` (``none``/``plus``/
    ``minus``), ``detector`` (``P`` for the +1 detector, ``M`` for -1) and
    ``count``.  Every one of the nine sub-runs needs both detector rows.

    Parameters
    ----------
    path : str or Path

    Returns
    -------
    dict
        (run, sub_run) -> (1, 2) count array, columns ordered (+1, -1).
    """
    cells: Dict[Tuple[int, int], Dict[str, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"block_t1", "block_t2", "detector", "count"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(
                f"counts CSV must have columns {sorted(required)}"
            )
        for row in reader:
            blockers = (row["block_t1"].strip(), row["block_t2"].strip())
            if blockers not in _RUN_SUB_BY_BLOCKERS:
                raise ValueError(f"unknown blocker configuration {blockers}")
            detector = row["detector"].strip()
            if detector not in _DETECTOR_COLUMNS:
                raise ValueError(f"unknown detector label {detector!r}")
            cells.setdefault(_RUN_SUB_BY_BLOCKERS[blockers], {})[detector] = float(
                row["count"]
            )
    counts: Dict[Tuple[int, int], np.ndarray] = {}
    for key in sorted(_RUN_SUB_BY_BLOCKERS.values()):
        if key not in cells or set(cells[key]) != set(_DETECTOR_COLUMNS):
            raise ValueError(f"missing detector rows for run {key[0]} sub-run {key[1]}")
        counts[key] = np.array([[cells[key]["P"], cells[key]["M"]]])
    return counts


def representative_counts_path() -> Path:
    """Path of the bundled representative mean-count fixture."""
    return Path(resources.files("macroreal._data") / "representative_counts.csv")
