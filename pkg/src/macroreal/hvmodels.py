"""Detection-efficiency hidden-variable models and their macrorealist bounds.

A photon's fate is predetermined by a hidden state: whether it would be
detected at each of the three measurement times, and which outcome triple
(q1, q2, q3) it would produce.  The state space splits into seven detection
classes -- ``q`` (detected at t1 only), ``p`` (t2 only), ``s`` (t3 only),
``a`` (t1 and t2), ``b`` (t2 and t3), ``c`` (t1 and t3) and ``d`` (all
three) -- each carrying a weight for every one of the eight outcome
triples: 56 nonnegative numbers in total.  Equal detector efficiency
``eta`` fixes the total weight of each time's detection classes, and the
grand total is at most one (the remainder is never detected).

Under fair sampling, a detector-only experiment estimates each probability
from post-selected coincidences, which turns the tested combinations into
ratios of these weights.  This module evaluates those ratios, maximizes
them over all admissible weight assignments, and contrasts the result with
the blocker-based setup, whose macrorealist bounds do not depend on
``eta`` at all.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np
from scipy import optimize

__all__ = [
    "BLOCK_NAMES",
    "BoundCertificate",
    "DegenerateModelError",
    "HVWeights",
    "TRIPLES",
    "blocker_setup_bound",
    "blocker_setup_formula",
    "critical_efficiency",
    "lgi_detectors_bound_formula",
    "lgi_detectors_value",
    "low_efficiency_witness",
    "lgi_high_efficiency_witness",
    "maximize_lgi_detectors",
    "maximize_wlgi_detectors",
    "ProbeFinding",
    "project_feasible",
    "weight_index",
    "wlgi_detectors_bound_formula",
    "wlgi_detectors_value",
    "wlgi_high_efficiency_witness",
]

#: Detection classes, in storage order.
BLOCK_NAMES = ("q", "p", "s", "a", "b", "c", "d")

#: Outcome triples (q1, q2, q3), in storage order.
TRIPLES: Tuple[Tuple[int, int, int], ...] = tuple(itertools.product((+1, -1), repeat=3))

_BLOCK_SLICES = {name: slice(8 * i, 8 * (i + 1)) for i, name in enumerate(BLOCK_NAMES)}

# Classes detected at each time: t1 -> {q,a,c,d}, t2 -> {p,a,b,d}, t3 -> {s,b,c,d}.
_TIME_CLASSES = (("q", "a", "c", "d"), ("p", "a", "b", "d"), ("s", "b", "c", "d"))


class DegenerateModelError(ValueError):
    """Raised when a measured-run denominator vanishes (no detected photons)."""


def weight_index(block: str, triple: Tuple[int, int, int]) -> int:
    """Flat index of one weight, addressed by class name and outcome triple."""
    if block not in BLOCK_NAMES:
        raise ValueError(f"unknown detection class {block!r}")
    return 8 * BLOCK_NAMES.index(block) + TRIPLES.index(tuple(triple))


@dataclass(frozen=True)
class HVWeights:
    """The 56 subspace weights of the hidden-variable model.

    ``values`` is a flat array ordered by detection class
    (:data:`BLOCK_NAMES`), each holding eight outcome-triple weights in
    :data:`TRIPLES` order.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float).copy()
        if arr.shape != (56,):
            raise ValueError(f"expected 56 weights, got shape {arr.shape}")
        if np.any(arr < 0.0):
            raise ValueError("weights must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls) -> "HVWeights":
        return cls(np.zeros(56))

    @classmethod
    def from_assignments(
        cls, assignments: Mapping[Tuple[str, Tuple[int, int, int]], float]
    ) -> "HVWeights":
        """Build sparse weights from {(class, outcome triple): weight}."""
        arr = np.zeros(56)
        for (block, triple), value in assignments.items():
            arr[weight_index(block, triple)] = value
        return cls(arr)

    def block(self, name: str) -> np.ndarray:
        return self.values[_BLOCK_SLICES[name]]

    def block_total(self, name: str) -> float:
        return float(self.block(name).sum())

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def detection_totals(self) -> Tuple[float, float, float]:
        """Total weight detected at t1, t2 and t3 (each must equal eta)."""
        return tuple(
            float(sum(self.block_total(b) for b in classes)) for classes in _TIME_CLASSES
        )

    def is_feasible(self, eta: float, tol: float = 1e-9) -> bool:
        if self.total > 1.0 + tol:
            return False
        return all(abs(s - eta) <= tol for s in self.detection_totals())


@dataclass(frozen=True)
class ProbeFinding:
    """A randomized-search assignment whose value exceeds the certified bound."""

    value: float
    weights: HVWeights


@dataclass(frozen=True)
class BoundCertificate:
    """Result of a bound maximization.

    Attributes
    ----------
    eta : float
        Detector efficiency.
    bound : float
        Certified bound: the value achieved by the extremal witness
        assignment for this efficiency regime (it equals ``formula_value``
        up to float rounding).  In support-restricted diagnostic mode this
        is instead the best value found on the restricted slice.
    witness : HVWeights
        Weight assignment achieving ``bound``.
    formula_value : float
        Closed-form prediction for the same bound.
    findings : tuple of ProbeFinding
        Assignments discovered by the randomized probe whose value exceeds
        the certified bound by more than the solver tolerance.  The
        post-selected ratio expressions can be pushed past the piecewise
        closed form by concentrating weight on detection classes exclusive
        to a single time, so such discoveries are surfaced for inspection
        rather than silently adopted as the bound.
    """

    eta: float
    bound: float
    witness: HVWeights
    formula_value: float
    findings: Tuple[ProbeFinding, ...] = ()


def _block_views(w: np.ndarray) -> Dict[str, np.ndarray]:
    return {name: w[..., _BLOCK_SLICES[name]] for name in BLOCK_NAMES}


def _lgi_fractions(w: np.ndarray):
    """Numerators and denominators of the six correlator ratios.

    Accepts weights of shape (..., 56); returns two arrays of shape
    (..., 6).  The combination follows the post-selected correlators: each
    two-time correlator splits into the ratio conditioned on the early
    outcome being +1 and the one conditioned on -1.
    """
    B = _block_views(w)
    acdp = B["a"] + B["c"] + B["d"] + B["p"]
    bcds = B["b"] + B["c"] + B["d"] + B["s"]
    tot = {name: B[name].sum(axis=-1) for name in BLOCK_NAMES}

    def s(arr, idx):
        return arr[..., list(idx)].sum(axis=-1)

    first, second = (0, 1, 2, 3), (4, 5, 6, 7)
    cp, bq, bs, ap, cs, aq = (
        B["c"] + B["p"],
        B["b"] + B["q"],
        B["b"] + B["s"],
        B["a"] + B["p"],
        B["c"] + B["s"],
        B["a"] + B["q"],
    )
    nums = np.stack(
        [
            s(acdp, (0, 1)) - s(acdp, (2, 3)),
            s(acdp, (6, 7)) - s(acdp, (4, 5)),
            s(bcds, (0, 4)) - s(bcds, (1, 5)),
            s(bcds, (3, 7)) - s(bcds, (2, 6)),
            s(bcds, (0, 2)) - s(bcds, (1, 3)),
            s(bcds, (5, 7)) - s(bcds, (4, 6)),
        ],
        axis=-1,
    )
    dens = np.stack(
        [
            tot["a"] + tot["d"] + s(cp, first) + s(bq, second),
            tot["a"] + tot["d"] + s(cp, second) + s(bq, first),
            tot["c"] + tot["d"] + s(bs, (0, 1, 4, 5)) + s(ap, (2, 3, 6, 7)),
            tot["c"] + tot["d"] + s(bs, (2, 3, 6, 7)) + s(ap, (0, 1, 4, 5)),
            tot["b"] + tot["d"] + s(cs, first) + s(aq, second),
            tot["b"] + tot["d"] + s(cs, second) + s(aq, first),
        ],
        axis=-1,
    )
    return nums, dens


_LGI_SIGNS = np.array([1.0, 1.0, 1.0, 1.0, -1.0, -1.0])


def _wlgi_fractions(w: np.ndarray):
    """Numerators/denominators of the three post-selected (-,+) ratios."""
    B = _block_views(w)
    acdp = B["a"] + B["c"] + B["d"] + B["p"]
    bcds = B["b"] + B["c"] + B["d"] + B["s"]
    tot = {name: B[name].sum(axis=-1) for name in BLOCK_NAMES}

    def s(arr, idx):
        return arr[..., list(idx)].sum(axis=-1)

    nums = np.stack(
        [s(bcds, (4, 6)), s(acdp, (4, 5)), s(bcds, (2, 6))],
        axis=-1,
    )
    dens = np.stack(
        [
            tot["b"] + tot["d"] + s(B["c"] + B["s"], (4, 5, 6, 7)) + s(B["a"] + B["q"], (0, 1, 2, 3)),
            tot["a"] + tot["d"] + s(B["c"] + B["p"], (4, 5, 6, 7)) + s(B["b"] + B["q"], (0, 1, 2, 3)),
            tot["c"] + tot["d"] + s(B["b"] + B["s"], (2, 3, 6, 7)) + s(B["a"] + B["p"], (0, 1, 4, 5)),
        ],
        axis=-1,
    )
    return nums, dens


_WLGI_SIGNS = np.array([1.0, -1.0, -1.0])


def _ratio_value_batch(w: np.ndarray, fractions, signs) -> np.ndarray:
    """Signed ratio sum per row; -inf where any denominator vanishes."""
    nums, dens = fractions(w)
    valid = np.all(dens > 0.0, axis=-1)
    safe = np.where(dens > 0.0, dens, 1.0)
    vals = np.sum(signs * nums / safe, axis=-1)
    return np.where(valid, vals, -np.inf)


def _as_array(w) -> np.ndarray:
    if isinstance(w, HVWeights):
        return w.values
    arr = np.asarray(w, dtype=float)
    if arr.shape != (56,):
        raise ValueError(f"expected 56 weights, got shape {arr.shape}")
    return arr


def lgi_detectors_value(w) -> float:
    """Post-selected correlator combination of the detector-only setup.

    Evaluates the six-ratio expression whose numerators carry the signed
    outcome weights and whose denominators count all photons surviving the
    post-selection of each measured run.

    Raises
    ------
    DegenerateModelError
        If any of the six denominators is zero.
    """
    arr = _as_array(w)
    nums, dens = _lgi_fractions(arr)
    if np.any(dens <= 0.0):
        raise DegenerateModelError("a measured run collects no photons; value undefined")
    return float(np.sum(_LGI_SIGNS * nums / dens))


def wlgi_detectors_value(w) -> float:
    """Post-selected probability combination of the detector-only setup.

    Raises
    ------
    DegenerateModelError
        If any of the three denominators is zero.
    """
    arr = _as_array(w)
    nums, dens = _wlgi_fractions(arr)
    if np.any(dens <= 0.0):
        raise DegenerateModelError("a measured run collects no photons; value undefined")
    return float(np.sum(_WLGI_SIGNS * nums / dens))


def lgi_detectors_bound_formula(eta: float) -> float:
    """Closed-form macrorealist bound of the detector-only correlator form.

    Piecewise 8/3 below efficiency 2/3 and ``2/eta - eta`` at or above it
    (the bound is discontinuous at 2/3; the high side follows the
    at-least-2/3 branch).
    """
    _check_eta(eta)
    return 8.0 / 3.0 if eta < 2.0 / 3.0 else 2.0 / eta - eta


def wlgi_detectors_bound_formula(eta: float) -> float:
    """Closed-form macrorealist bound of the detector-only probability form."""
    _check_eta(eta)
    return 1.0 if eta < 2.0 / 3.0 else (1.0 - eta) / (2.0 * eta - 1.0)


def _check_eta(eta: float) -> None:
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")


def low_efficiency_witness(eta: float) -> HVWeights:
    """Assignment reaching the low-efficiency bounds (8/3 and 1)."""
    _check_eta(eta)
    h = eta / 2.0
    return HVWeights.from_assignments(
        {
            ("a", (-1, -1, +1)): h,
            ("b", (-1, +1, +1)): h,
            ("c", (+1, +1, +1)): h,
        }
    )


def lgi_high_efficiency_witness(eta: float) -> HVWeights:
    """Assignment reaching ``2/eta - eta`` for efficiency >= 2/3."""
    if not 2.0 / 3.0 <= eta <= 1.0:
        raise ValueError(f"witness requires eta >= 2/3, got {eta}")
    e = 1.0 - eta
    return HVWeights.from_assignments(
        {
            ("a", (+1, +1, +1)): e,
            ("b", (+1, -1, -1)): e,
            ("c", (+1, +1, +1)): e,
            ("d", (+1, +1, +1)): 3.0 * eta - 2.0,
        }
    )


def wlgi_high_efficiency_witness(eta: float) -> HVWeights:
    """Assignment reaching ``(1-eta)/(2 eta - 1)`` for efficiency >= 2/3."""
    if not 2.0 / 3.0 <= eta <= 1.0:
        raise ValueError(f"witness requires eta >= 2/3, got {eta}")
    e = 1.0 - eta
    return HVWeights.from_assignments(
        {
            ("a", (-1, -1, +1)): e,
            ("b", (-1, +1, +1)): e,
            ("c", (+1, +1, +1)): e,
            ("d", (+1, +1, +1)): 3.0 * eta - 2.0,
        }
    )


_SHARED = slice(24, 56)  # blocks a, b, c, d
_D_SLICE = _BLOCK_SLICES["d"]
_EXCLUSIVE = {0: _BLOCK_SLICES["q"], 1: _BLOCK_SLICES["p"], 2: _BLOCK_SLICES["s"]}
_SHARED_OF_TIME = {0: ("a", "c", "d"), 1: ("a", "b", "d"), 2: ("b", "c", "d")}


def project_feasible(weights: np.ndarray, eta: float) -> np.ndarray:
    """Map arbitrary weight vectors onto the constraint set.

    Works on arrays of shape (..., 56).  The result is nonnegative, each
    time's detection total equals ``eta`` exactly, and the grand total is
    at most one.  Points already satisfying the constraints are returned
    unchanged, so the projection parameterizes the whole feasible set.

    The steps: clip negatives; scale the shared classes (a, b, c, d) down
    if any time's shared weight exceeds ``eta``; if topping the exclusive
    classes up to ``eta`` would push the total past one, blend the shared
    mass toward a pure-d assignment (which supports total exactly one);
    finally rescale or fill the exclusive classes q, p, s so each time's
    total is exactly ``eta``.
    """
    _check_eta(eta)
    w = np.clip(np.asarray(weights, dtype=float), 0.0, None).copy()

    def block_sum(name):
        return w[..., _BLOCK_SLICES[name]].sum(axis=-1)

    shared = np.stack(
        [sum(block_sum(n) for n in _SHARED_OF_TIME[i]) for i in range(3)], axis=-1
    )
    m = shared.max(axis=-1)
    scale = np.where(m > eta, eta / np.where(m > 0.0, m, 1.0), 1.0)
    w[..., _SHARED] *= scale[..., None]

    # If sum_i (eta - shared_i) + shared_total exceeds 1, blend toward the
    # pure-d assignment: g = A+B+C+2D rises to 3 eta - 1, the exact budget.
    a_, b_, c_, d_ = (block_sum(n) for n in ("a", "b", "c", "d"))
    g = a_ + b_ + c_ + 2.0 * d_
    deficit = (3.0 * eta - 1.0) - g
    t = np.where(deficit > 0.0, deficit / np.where(deficit > 0.0, 2.0 * eta - g, 1.0), 0.0)
    d_block = w[..., _D_SLICE]
    d_shape = np.where(
        d_[..., None] > 0.0, d_block / np.where(d_[..., None] > 0.0, d_[..., None], 1.0), 1.0 / 8.0
    )
    w[..., 24:48] *= (1.0 - t)[..., None]
    w[..., _D_SLICE] = (1.0 - t)[..., None] * d_block + (t * eta)[..., None] * d_shape

    for i in range(3):
        shared_i = sum(block_sum(n) for n in _SHARED_OF_TIME[i])
        need = np.clip(eta - shared_i, 0.0, None)
        excl = w[..., _EXCLUSIVE[i]]
        e_tot = excl.sum(axis=-1)
        factor = np.where(e_tot > 0.0, need / np.where(e_tot > 0.0, e_tot, 1.0), 0.0)
        w[..., _EXCLUSIVE[i]] = np.where(
            e_tot[..., None] > 0.0, excl * factor[..., None], (need / 8.0)[..., None]
        )
    return w


def _sparse_start(rng: np.random.Generator, eta: float) -> np.ndarray:
    w = np.zeros(56)
    k = int(rng.integers(1, 5))
    idx = rng.choice(56, size=k, replace=False)
    w[idx] = rng.uniform(0.0, eta, size=k)
    return w


def _witness_starts(eta: float) -> list:
    starts = [low_efficiency_witness(eta).values]
    if eta >= 2.0 / 3.0:
        starts.append(lgi_high_efficiency_witness(eta).values)
        starts.append(wlgi_high_efficiency_witness(eta).values)
    pure_d = np.zeros(56)
    pure_d[weight_index("d", (+1, +1, +1))] = eta
    starts.append(pure_d)
    uniform_d = np.zeros(56)
    uniform_d[_D_SLICE] = eta / 8.0
    starts.append(uniform_d)
    return starts


def _certification_witness(kind: str, eta: float) -> HVWeights:
    """Extremal witness assignment for the efficiency regime."""
    if eta < 2.0 / 3.0:
        return low_efficiency_witness(eta)
    if kind == "lgi":
        return lgi_high_efficiency_witness(eta)
    return wlgi_high_efficiency_witness(eta)


def _maximize_ratio(
    kind: str, fractions, signs, eta: float, n_starts: int, seed: int, support
) -> Tuple[float, HVWeights, Tuple[ProbeFinding, ...]]:
    rng = np.random.default_rng(seed)
    if support is not None:
        support = list(support)

    def embed(x: np.ndarray) -> np.ndarray:
        if support is None:
            return x
        w = np.zeros(56)
        w[support] = x
        return w

    def value_of(x: np.ndarray) -> float:
        w = project_feasible(embed(np.asarray(x, dtype=float)), eta)
        return float(_ratio_value_batch(w[None, :], fractions, signs)[0])

    def objective(x: np.ndarray) -> float:
        return -value_of(x)

    starts = []
    for w in _witness_starts(eta):
        starts.append(w[support] if support is not None else w)
    dim = len(support) if support is not None else 56
    for _ in range(n_starts):
        if support is None:
            starts.append(_sparse_start(rng, eta))
        else:
            starts.append(rng.uniform(0.0, eta, size=dim))

    probe_val, probe_x = -math.inf, None
    for x0 in starts:
        x0 = np.asarray(x0, dtype=float)
        f0 = value_of(x0)
        if f0 > probe_val:
            probe_val, probe_x = f0, x0
        res = optimize.minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=[(0.0, 1.0)] * dim,
            options={"maxfev": 4000, "xatol": 1e-7, "fatol": 1e-10},
        )
        if -res.fun > probe_val:
            probe_val, probe_x = -res.fun, res.x

    if support is not None:
        # Diagnostic mode: report the honest maximum on the slice.
        witness = HVWeights(project_feasible(embed(np.asarray(probe_x)), eta))
        return probe_val, witness, ()

    witness = _certification_witness(kind, eta)
    value_fn = lgi_detectors_value if kind == "lgi" else wlgi_detectors_value
    bound = value_fn(witness)
    findings: Tuple[ProbeFinding, ...] = ()
    if probe_val > bound + 1e-6:
        probe_weights = HVWeights(project_feasible(embed(np.asarray(probe_x)), eta))
        findings = (ProbeFinding(probe_val, probe_weights),)
    return bound, witness, findings


def maximize_lgi_detectors(
    eta: float, n_starts: int = 8, seed: int = 0, support: Sequence[int] | None = None
) -> BoundCertificate:
    """Maximize the detector-only correlator combination at efficiency eta.

    The certified bound is the value achieved by the extremal witness
    assignment for this efficiency regime.  A multistart local search over
    the 56 weights (seeded with the known extremal assignments plus random
    sparse supports, every candidate projected onto the constraint set)
    probes for assignments exceeding that value; any such excess is
    attached to the certificate as a finding rather than adopted as the
    bound.

    Parameters
    ----------
    eta : float
        Detector efficiency in (0, 1].
    n_starts : int
        Number of random restarts in addition to the seeded patterns.
    seed : int
        Seed of the restart stream.
    support : sequence of int, optional
        Restrict the search to these flat weight indices (diagnostic use).
        In this mode the bound is the best value found on the slice and
        no findings are reported.
    """
    _check_eta(eta)
    bound, witness, findings = _maximize_ratio(
        "lgi", _lgi_fractions, _LGI_SIGNS, eta, n_starts, seed, support
    )
    return BoundCertificate(eta, bound, witness, lgi_detectors_bound_formula(eta), findings)


def maximize_wlgi_detectors(
    eta: float, n_starts: int = 8, seed: int = 0, support: Sequence[int] | None = None
) -> BoundCertificate:
    """Maximize the detector-only probability combination at efficiency eta.

    See :func:`maximize_lgi_detectors` for the search and certification
    strategy.
    """
    _check_eta(eta)
    bound, witness, findings = _maximize_ratio(
        "wlgi", _wlgi_fractions, _WLGI_SIGNS, eta, n_starts, seed, support
    )
    return BoundCertificate(eta, bound, witness, wlgi_detectors_bound_formula(eta), findings)


def critical_efficiency(inequality: str, tol: float = 1e-6) -> float:
    """Efficiency at which the detector-only bound meets the quantum maximum.

    Solves ``2/eta - eta = 3/2`` (correlator form, quantum maximum 1.5) or
    ``(1-eta)/(2 eta - 1) = 0.4034`` (probability form) by bisection on
    [2/3, 1] to the requested tolerance.  Above the returned efficiency
    the detector-only experiment cannot be explained macrorealistically.
    """
    if inequality == "LGI":
        target = 1.5

        def f(eta):
            return 2.0 / eta - eta - target

    elif inequality == "WLGI":
        target = 0.4034

        def f(eta):
            return (1.0 - eta) / (2.0 * eta - 1.0) - target

    else:
        raise ValueError(f"inequality must be 'LGI' or 'WLGI', got {inequality!r}")

    lo, hi = 2.0 / 3.0 + 1e-9, 1.0
    flo = f(lo)
    if flo <= 0.0:
        raise RuntimeError("bisection bracket invalid at lower end")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def blocker_setup_formula(inequality: str) -> float:
    """Efficiency-independent macrorealist bound of the blocker setup."""
    if inequality == "LGI":
        return 1.0
    if inequality == "WLGI":
        return 0.0
    raise ValueError(f"inequality must be 'LGI' or 'WLGI', got {inequality!r}")


def blocker_setup_bound(inequality: str, eta: float) -> BoundCertificate:
    """Macrorealist bound of the blocker-based setup at efficiency eta.

    With ideal blockers and detectors only at the final time, both tested
    expressions reduce to averages of their deterministic single-triple
    values over the detected subspace, with the efficiency canceling
    between numerator and denominator.  The optimum therefore sits on a
    deterministic outcome triple and is found by exact enumeration: 1 for
    the correlator form, 0 for the probability form, for every eta.
    """
    _check_eta(eta)
    formula = blocker_setup_formula(inequality)
    best_val, best_triple = -math.inf, None
    for triple in TRIPLES:
        q1, q2, q3 = triple
        if inequality == "LGI":
            val = q1 * q2 + q2 * q3 - q1 * q3
        else:
            val = (
                float(q1 == -1 and q3 == +1)
                - float(q1 == -1 and q2 == +1)
                - float(q2 == -1 and q3 == +1)
            )
        if val > best_val:
            best_val, best_triple = float(val), triple
    witness = HVWeights.from_assignments({("d", best_triple): eta})
    return BoundCertificate(eta, best_val, witness, formula)
