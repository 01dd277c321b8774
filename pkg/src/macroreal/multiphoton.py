"""Two-photon emission model, modified bounds and count-census fit.

A heralded source occasionally emits two photons in one window.  A realist
description of such a pair can reach the algebraic maxima of the inequality
combinations (3 for the correlator form, 1/2 for the probability form), so
a fraction ``gamma`` of two-photon events relaxes the macrorealist bounds
to ``1 + 2*gamma`` and ``gamma/2``.  This module derives those maxima by
running the blocker protocol on the deterministic two-photon assignment,
provides the twelve closed-form singles/coincidence predictions for the
four double-blocker configurations, and fits the two-photon fraction to a
measured count table by chi-squared minimization.

The count table determines the parameters only up to an exact scaling
family (see :func:`scale_equivalent`): detection probabilities trade off
against the count scale and the two-photon fraction without changing any
of the twelve predictions.  Fits therefore report the
:func:`canonical_gauge` representative of the optimal family.
"""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Dict, NamedTuple, Sequence, Tuple

import numpy as np
from scipy import optimize

from .circuit import RUN_CONFIGS, JointProbTable, correlation

__all__ = [
    "CountVector12",
    "FIT_BOUNDS",
    "GammaFitParams",
    "GammaFitResult",
    "ModifiedBounds",
    "SET_LABELS",
    "canonical_gauge",
    "chi_squared",
    "detection_prob_total",
    "fit_gamma",
    "fit_report",
    "load_counts_csv",
    "modified_bounds",
    "predicted_counts",
    "reference_counts",
    "save_counts_csv",
    "scale_equivalent",
    "two_photon_joint_probs",
    "two_photon_lgi",
    "two_photon_wlgi",
]

#: Double-blocker configurations, labeled by the surviving (t1, t2) arms.
SET_LABELS = ("++", "+-", "-+", "--")

#: Box bounds of the count fit, generously bracketing realistic hardware.
FIT_BOUNDS = {
    "alpha_sq": (0.3, 0.7),
    "t1": (0.5, 0.95),
    "t2": (0.5, 0.95),
    "t3": (0.5, 0.95),
    "t4": (0.5, 0.95),
    "eta1": (0.3, 0.9),
    "eta2": (0.3, 0.9),
    "n_events": (1e4, 1e7),
    "gamma": (0.0, 0.05),
}

_ARM_SIGN = {"plus": +1, "minus": -1}

#: Deterministic two-photon assignment: for each t1-blocker position, the
#: (q1, q2, q3) path triples of the photons still inside the apparatus.
#: Without a blocker both photons propagate on opposite constant paths;
#: with a blocker the photon on the blocked path is absorbed and the
#: survivor flips its final-time value.
_TWO_PHOTON_PATHS = {
    "none": ((+1, +1, +1), (-1, -1, -1)),
    "minus": ((+1, +1, -1),),
    "plus": ((-1, -1, +1),),
}

#: Path positions recorded by each run (0 = t1, 1 = t2, 2 = t3).
_RUN_TIMES = {1: (1, 2), 2: (0, 2), 3: (0, 1, 2)}

_ORDER_NAMES = {1: "one-time", 2: "two-time", 3: "three-time"}


@dataclass(frozen=True)
class GammaFitParams:
    """Parameters of the two-photon count model.

    Parameters
    ----------
    alpha_sq : float
        Power fraction of the +1 arm at the first splitter, in [0, 1].
    t1, t2, t3, t4 : float
        Port-dependent transmittances of the central splitter, in [0, 1].
    eta1, eta2 : float
        Efficiencies of the two output detectors, in (0, 1].
    n_events : float
        Total photon events per configuration (count scale), > 0.
    gamma : float
        Two-photon fraction of the events, in [0, 1).
    """

    alpha_sq: float
    t1: float
    t2: float
    t3: float
    t4: float
    eta1: float
    eta2: float
    n_events: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha_sq", "t1", "t2", "t3", "t4"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        for name in ("eta1", "eta2"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {value}")
        if not self.n_events > 0.0:
            raise ValueError(f"n_events must be positive, got {self.n_events}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")

    @property
    def beta_sq(self) -> float:
        return 1.0 - self.alpha_sq

    @property
    def n_single(self) -> float:
        """Number of single-photon events, (1 - gamma) * n_events."""
        return (1.0 - self.gamma) * self.n_events

    @property
    def n_double(self) -> float:
        """Number of two-photon events, gamma * n_events."""
        return self.gamma * self.n_events


@dataclass(frozen=True, eq=False)
class CountVector12:
    """Singles and coincidences of the four double-blocker configurations.

    Parameters
    ----------
    values : ndarray, shape (4, 3)
        Rows follow ``SET_LABELS``; columns are C1, C2 and the coincidence
        C12.  All entries must be nonnegative.  Model-generated vectors
        additionally satisfy C12 <= min(C1, C2).
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (4, 3):
            raise ValueError(f"expected shape (4, 3), got {values.shape}")
        if np.any(values < 0.0) or not np.all(np.isfinite(values)):
            raise ValueError("counts must be finite and nonnegative")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_flat(cls, flat: Sequence[float]) -> "CountVector12":
        """Build from the twelve counts in row order (C1, C2, C12 per set)."""
        return cls(np.asarray(flat, dtype=float).reshape(4, 3))

    @property
    def flat(self) -> np.ndarray:
        """The twelve counts in row order (C1, C2, C12 per set)."""
        return self.values.reshape(-1)

    def _row(self, set_label: str) -> np.ndarray:
        if set_label not in SET_LABELS:
            raise ValueError(f"set_label must be one of {SET_LABELS}, got {set_label!r}")
        return self.values[SET_LABELS.index(set_label)]

    def c1(self, set_label: str) -> float:
        return float(self._row(set_label)[0])

    def c2(self, set_label: str) -> float:
        return float(self._row(set_label)[1])

    def c12(self, set_label: str) -> float:
        return float(self._row(set_label)[2])

    def as_dict(self) -> Dict[str, Dict[str, float]]:
        """Nested {set_label: {"C1": .., "C2": .., "C12": ..}} mapping."""
        return {
            label: {"C1": row[0], "C2": row[1], "C12": row[2]}
            for label, row in zip(SET_LABELS, self.values.tolist())
        }


class ModifiedBounds(NamedTuple):
    """Macrorealist bounds relaxed by a two-photon fraction."""

    lgi_bound: float
    wlgi_bound: float


class GammaFitResult(NamedTuple):
    """Best fit of the count model to an observed table."""

    params: GammaFitParams
    chi2: float
    converged: bool


def two_photon_joint_probs() -> Dict[Tuple[str, str], JointProbTable]:
    """Pair-probability tables of the deterministic two-photon assignment.

    Runs the same sub-run bookkeeping as the single-photon model: every
    blocker schedule of runs 1-3 is applied to the assignment, surviving
    photons are counted per recorded outcome, each run is normalized by
    its total and the (t1, t2) table is the arrival-time marginal of the
    double-blocker run.

    Returns
    -------
    dict
        Maps the pairs ("t1","t2"), ("t2","t3"), ("t1","t3") to two-time
        tables with entries {(+1,+1): .., (+1,-1): .., ...}.
    """
    run_tables = {}
    for run in (1, 2, 3):
        times = _RUN_TIMES[run]
        counts: Dict[Tuple[int, ...], float] = {}
        for cfg in RUN_CONFIGS[run]:
            for path in _TWO_PHOTON_PATHS[cfg.block_t1]:
                if cfg.block_t2 != "none" and path[1] == _ARM_SIGN[cfg.block_t2]:
                    continue
                outcome = tuple(path[i] for i in times)
                counts[outcome] = counts.get(outcome, 0.0) + 1.0
        total = sum(counts.values())
        entries = {
            key: counts.get(key, 0.0) / total
            for key in itertools.product((+1, -1), repeat=len(times))
        }
        run_tables[run] = JointProbTable(_ORDER_NAMES[len(times)], entries, [])
    return {
        ("t2", "t3"): run_tables[1],
        ("t1", "t3"): run_tables[2],
        ("t1", "t2"): run_tables[3].marginalize_last(),
    }


def two_photon_lgi() -> float:
    """Correlator combination of the two-photon model (algebraic maximum 3)."""
    tables = two_photon_joint_probs()
    return (
        correlation(tables[("t1", "t2")])
        + correlation(tables[("t2", "t3")])
        - correlation(tables[("t1", "t3")])
    )


def two_photon_wlgi() -> float:
    """Probability combination of the two-photon model (algebraic maximum 1/2)."""
    tables = two_photon_joint_probs()
    return (
        tables[("t1", "t3")].entries[(-1, +1)]
        - tables[("t1", "t2")].entries[(-1, +1)]
        - tables[("t2", "t3")].entries[(-1, +1)]
    )


def modified_bounds(gamma: float) -> ModifiedBounds:
    """Macrorealist bounds for a source with two-photon fraction gamma.

    Mixing the single-photon bound (1 and 0) with the two-photon algebraic
    maximum (3 and 1/2) in proportion gamma gives 1 + 2*gamma for the
    correlator form and gamma/2 for the probability form.

    Parameters
    ----------
    gamma : float
        Two-photon fraction, in [0, 1).
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    return ModifiedBounds(1.0 + 2.0 * gamma, gamma / 2.0)


def _predicted_flat(alpha_sq, t1, t2, t3, t4, eta1, eta2, n_events, gamma):
    """The twelve predicted counts, in CountVector12 row order."""
    beta_sq = 1.0 - alpha_sq
    r1, r2, r3, r4 = 1.0 - t1, 1.0 - t2, 1.0 - t3, 1.0 - t4
    a2, a4 = alpha_sq, alpha_sq**2
    b2, b4 = beta_sq, beta_sq**2
    n1 = (1.0 - gamma) * n_events
    n2 = gamma * n_events

    c1_pp = (
        n1 * a2 * t1 * r2 * eta1
        + n2 * a4 * t1**2 * (r2**2 * eta1 * (2.0 - eta1) + 2.0 * t2 * r2 * eta1)
        + n2 * (a4 * 2.0 * t1 * r1 + 2.0 * a2 * b2 * t1) * r2 * eta1
    )
    c2_pp = (
        n1 * a2 * t1 * t2 * eta2
        + n2 * a4 * t1**2 * (t2**2 * eta2 * (2.0 - eta2) + 2.0 * t2 * r2 * eta2)
        + n2 * (a4 * 2.0 * t1 * r1 + 2.0 * a2 * b2 * t1) * t2 * eta2
    )
    c12_pp = 2.0 * n2 * a4 * t1**2 * t2 * r2 * eta1 * eta2

    c1_pm = (
        n1 * a2 * r1 * t3 * eta1
        + n2 * a4 * r1**2 * (t3**2 * eta1 * (2.0 - eta1) + 2.0 * t3 * r3 * eta1)
        + n2 * (a4 * 2.0 * t1 * r1 + 2.0 * a2 * b2 * r1) * t3 * eta1
    )
    c2_pm = (
        n1 * a2 * r1 * r3 * eta2
        + n2 * a4 * r1**2 * (r3**2 * eta2 * (2.0 - eta2) + 2.0 * t3 * r3 * eta2)
        + n2 * (a4 * 2.0 * t1 * r1 + 2.0 * a2 * b2 * r1) * r3 * eta2
    )
    c12_pm = 2.0 * n2 * a4 * r1**2 * t3 * r3 * eta1 * eta2

    c1_mp = (
        n1 * b2 * r4 * r2 * eta1
        + n2 * b4 * r4**2 * (r2**2 * eta1 * (2.0 - eta1) + 2.0 * t2 * r2 * eta1)
        + n2 * (b4 * 2.0 * t4 * r4 + 2.0 * a2 * b2 * r4) * r2 * eta1
    )
    c2_mp = (
        n1 * b2 * r4 * t2 * eta2
        + n2 * b4 * r4**2 * (t2**2 * eta2 * (2.0 - eta2) + 2.0 * t2 * r2 * eta2)
        + n2 * (b4 * 2.0 * t4 * r4 + 2.0 * a2 * b2 * r4) * t2 * eta2
    )
    c12_mp = 2.0 * n2 * b4 * r4**2 * t2 * r2 * eta1 * eta2

    c1_mm = (
        n1 * b2 * t4 * t3 * eta1
        + n2 * b4 * t4**2 * (t3**2 * eta1 * (2.0 - eta1) + 2.0 * t3 * r3 * eta1)
        + n2 * (b4 * 2.0 * t4 * r4 + 2.0 * a2 * b2 * t4) * t3 * eta1
    )
    c2_mm = (
        n1 * b2 * t4 * r3 * eta2
        + n2 * b4 * t4**2 * (r3**2 * eta2 * (2.0 - eta2) + 2.0 * t3 * r3 * eta2)
        + n2 * (b4 * 2.0 * t4 * r4 + 2.0 * a2 * b2 * t4) * r3 * eta2
    )
    c12_mm = 2.0 * n2 * b4 * t4**2 * t3 * r3 * eta1 * eta2

    return np.array(
        [
            c1_pp, c2_pp, c12_pp,
            c1_pm, c2_pm, c12_pm,
            c1_mp, c2_mp, c12_mp,
            c1_mm, c2_mm, c12_mm,
        ]
    )


def predicted_counts(params: GammaFitParams) -> CountVector12:
    """Predicted singles and coincidences for all four configurations.

    Each configuration keeps one arm per interferometer open; a photon
    reaches the output region through that surviving branch and splits
    onto the two detectors.  Single-photon events contribute linearly;
    two-photon events add the same-branch binomial terms (a detector
    clicks at most once per event) and the coincidence channel.

    Parameters
    ----------
    params : GammaFitParams
        Model parameters, including the count scale and gamma.
    """
    flat = _predicted_flat(
        params.alpha_sq,
        params.t1,
        params.t2,
        params.t3,
        params.t4,
        params.eta1,
        params.eta2,
        params.n_events,
        params.gamma,
    )
    return CountVector12.from_flat(flat)


def detection_prob_total(params: GammaFitParams) -> float:
    """Summed single-photon detection probability of the four configurations.

    For each configuration a single photon reaches detector 1 with
    probability q1 and detector 2 with probability q2; this returns the
    sum of all eight.  The count model depends on the parameters only
    through those q values and the combinations N*(1+gamma) and N*gamma,
    and it is exactly invariant under scaling all q by a common factor
    kappa while dividing N*(1+gamma) by kappa and N*gamma by kappa^2.
    This sum scales linearly with kappa, so it serves as the coordinate
    along that flat direction.
    """
    a2, b2 = params.alpha_sq, params.beta_sq
    t1, t2, t3, t4 = params.t1, params.t2, params.t3, params.t4
    r1, r2, r3, r4 = 1.0 - t1, 1.0 - t2, 1.0 - t3, 1.0 - t4
    inner_plus = r2 * params.eta1 + t2 * params.eta2
    inner_minus = t3 * params.eta1 + r3 * params.eta2
    return (
        a2 * t1 * inner_plus
        + a2 * r1 * inner_minus
        + b2 * r4 * inner_plus
        + b2 * t4 * inner_minus
    )


def scale_equivalent(params: GammaFitParams, kappa: float) -> GammaFitParams:
    """Count-equivalent parameter point with detection scaled by kappa.

    Multiplies both efficiencies by kappa and remaps the count scale and
    two-photon fraction along the exact flat direction of the model
    (N*(1+gamma) -> /kappa, N*gamma -> /kappa^2), so the predicted table
    is unchanged to rounding.  Requires kappa*eta <= 1 for both detectors.
    """
    if kappa <= 0.0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    m = params.n_events * (1.0 + params.gamma)
    pair = params.n_events * params.gamma
    return GammaFitParams(
        params.alpha_sq,
        params.t1,
        params.t2,
        params.t3,
        params.t4,
        kappa * params.eta1,
        kappa * params.eta2,
        m / kappa - pair / kappa**2,
        pair / (kappa * m - pair),
    )


_ETA_CENTER = 0.5 * (FIT_BOUNDS["eta1"][0] + FIT_BOUNDS["eta1"][1])


def canonical_gauge(params: GammaFitParams) -> GammaFitParams:
    """The representative of a parameter point's count-equivalent family.

    The twelve counts pin the parameters only up to the exact scaling
    family of :func:`scale_equivalent`; in particular gamma alone is not
    identifiable.  This picks the family member whose summed detection
    probability equals the center of the efficiency search box (0.6), a
    convention independent of how the optimizer happened to parameterize
    the detection probabilities.  The scaling is clipped where it would
    push an efficiency above one.
    """
    kappa = _ETA_CENTER / detection_prob_total(params)
    limit = (1.0 - 1e-12) / max(params.eta1, params.eta2)
    return scale_equivalent(params, min(kappa, limit))


def chi_squared(observed: CountVector12, predicted: CountVector12) -> float:
    """Pearson chi-squared sum((obs - pred)^2 / pred) over the twelve cells.

    Raises
    ------
    ValueError
        If any predicted cell is zero (the statistic is undefined there).
    """
    obs = observed.flat
    pred = predicted.flat
    if np.any(pred <= 0.0):
        raise ValueError("chi-squared undefined: predicted cell is zero")
    return float(np.sum((obs - pred) ** 2 / pred))


_PARAM_NAMES = ("alpha_sq", "t1", "t2", "t3", "t4", "eta1", "eta2", "n_events", "gamma")

#: Optimizer-space bounds; the count scale is searched in log10.
_X_BOUNDS = [
    FIT_BOUNDS[name] if name != "n_events" else tuple(math.log10(b) for b in FIT_BOUNDS[name])
    for name in _PARAM_NAMES
]
_X_LO = np.array([b[0] for b in _X_BOUNDS])
_X_HI = np.array([b[1] for b in _X_BOUNDS])


def _unpack(x: np.ndarray) -> Tuple[float, ...]:
    values = list(map(float, x))
    values[7] = 10.0 ** values[7]
    return tuple(values)


def _guarded_chi2(obs: np.ndarray, pred: np.ndarray) -> float:
    # At the gamma=0 boundary the coincidence predictions vanish; such
    # cells are exact (contribute 0) when the observation is also zero
    # and exclude the parameter point (inf) otherwise.
    good = pred > 0.0
    if np.any(~good & (obs > 0.0)):
        return math.inf
    diff = obs[good] - pred[good]
    return float(np.sum(diff * diff / pred[good]))


def _pearson_residuals(x: np.ndarray, obs: np.ndarray) -> np.ndarray:
    pred = _predicted_flat(*_unpack(x))
    return (pred - obs) / np.sqrt(np.maximum(pred, 1e-12))


def _restart(x0: np.ndarray, obs: np.ndarray):
    def objective(x):
        return _guarded_chi2(obs, _predicted_flat(*_unpack(x)))

    res = optimize.minimize(
        objective,
        x0,
        method="Nelder-Mead",
        bounds=list(zip(_X_LO, _X_HI)),
        options={"maxfev": 3000, "xatol": 1e-6, "fatol": 1e-9, "adaptive": True},
    )
    return float(res.fun), res.x


def fit_gamma(
    observed: CountVector12, n_starts: int = 50, seed: int = 0, threads: int = 1
) -> GammaFitResult:
    """Fit the nine count-model parameters to an observed table.

    Derivative-free simplex minimization of the chi-squared statistic from
    ``n_starts`` random starting points inside ``FIT_BOUNDS`` (plus the box
    center), followed by a trust-region polish of the best candidates on
    the Pearson residuals.  The count scale is searched on a log axis.

    The chi-squared landscape is exactly flat along the scaling family of
    :func:`scale_equivalent`, so the optimum is a curve rather than a
    point; the returned parameters are its :func:`canonical_gauge`
    representative.  Quantities that differ between family members (gamma,
    the count scale, the efficiencies) are therefore reported under that
    convention.

    Parameters
    ----------
    observed : CountVector12
        Measured singles and coincidences.
    n_starts : int
        Number of random restarts.
    seed : int
        Seed of the restart stream.
    threads : int
        Restarts run on this many worker threads; the merged result is
        identical for any thread count.

    Returns
    -------
    GammaFitResult
        Best parameters, their chi-squared value and a convergence flag
        (False when the polish stopped on its evaluation budget).
    """
    obs = observed.flat
    rng = np.random.default_rng(seed)
    starts = [0.5 * (_X_LO + _X_HI)]
    for _ in range(n_starts):
        starts.append(rng.uniform(_X_LO, _X_HI))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            coarse = list(pool.map(lambda x0: _restart(x0, obs), starts))
    else:
        coarse = [_restart(x0, obs) for x0 in starts]

    coarse.sort(key=lambda item: item[0])
    best_val, best_x, converged = math.inf, coarse[0][1], False
    for _, x0 in coarse[:3]:
        res = optimize.least_squares(
            _pearson_residuals,
            x0,
            bounds=(_X_LO, _X_HI),
            method="trf",
            x_scale="jac",
            xtol=1e-12,
            ftol=1e-12,
            gtol=1e-12,
            max_nfev=2000,
            args=(obs,),
        )
        val = _guarded_chi2(obs, _predicted_flat(*_unpack(res.x)))
        if val < best_val:
            best_val, best_x, converged = val, res.x, res.status > 0
    params = canonical_gauge(GammaFitParams(*_unpack(best_x)))
    chi2 = _guarded_chi2(obs, predicted_counts(params).flat)
    return GammaFitResult(params, chi2, converged and math.isfinite(chi2))


def fit_report(result: GammaFitResult) -> Dict[str, object]:
    """JSON-ready summary of a fit: parameters, chi2 and modified bounds."""
    bounds = modified_bounds(result.params.gamma)
    return {
        "params": {name: getattr(result.params, name) for name in _PARAM_NAMES},
        "chi2": result.chi2,
        "converged": result.converged,
        "lgi_bound": bounds.lgi_bound,
        "wlgi_bound": bounds.wlgi_bound,
    }


def load_counts_csv(path) -> CountVector12:
    """Read a count table from CSV with columns set_label, C1, C2, C12."""
    rows = {}
    with open(path, newline="") as fh:
        for record in csv.DictReader(fh):
            rows[record["set_label"]] = [
                float(record["C1"]),
                float(record["C2"]),
                float(record["C12"]),
            ]
    missing = [label for label in SET_LABELS if label not in rows]
    if missing:
        raise ValueError(f"count table is missing set labels {missing}")
    return CountVector12(np.array([rows[label] for label in SET_LABELS]))


def save_counts_csv(path, counts: CountVector12) -> None:
    """Write a count table to CSV with columns set_label, C1, C2, C12."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["set_label", "C1", "C2", "C12"])
        for label, row in zip(SET_LABELS, counts.values.tolist()):
            writer.writerow([label, repr(row[0]), repr(row[1]), repr(row[2])])


def reference_counts() -> CountVector12:
    """The bundled measured count table of the four configurations."""
    path = resources.files("macroreal") / "_data" / "gamma_counts.csv"
    with resources.as_file(path) as fspath:
        return load_counts_csv(fspath)
