"""Quantum model of the two-interferometer single-photon circuit.

A heralded photon enters an asymmetric Mach-Zehnder whose two output arms
(labeled +1 and -1) are temporally distinguishable, so they add incoherently
with weights ``alpha_sq`` and ``1 - alpha_sq``.  Each arm feeds a displaced
Sagnac loop through its own coupler (arm +1 through port 1, arm -1 through
port 4); inside the loop the two counter-propagating inner arms (+1 and -1)
recombine coherently with visibility ``v``, and the detector couplers route
inner arm +1 to port 2 and inner arm -1 to port 3.  Every reflection carries
a 90-degree phase.  The "+1" detector collects the transmission of port 2
and the reflection of port 3; the "-1" detector collects the complements.

Movable blockers select which arm (if any) is absorbed before the first
coupler (``block_t1``) and inside the loop (``block_t2``); a blocked arm
records the negated dichotomic outcome for that time (blocking the -1 arm
and seeing the photon later certifies outcome +1, and vice versa).  Four
blocker schedules ("runs") measure the joint outcome tables at the time
pairs (t2,t3), (t1,t3), the triple (t1,t2,t3), and the single time t3.

All probabilities returned by the table builders are normalized per run
(raw detected-plus-lost weight divided by the run total), which keeps the
two- and three-time tables mutually consistent by construction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy import optimize

__all__ = [
    "ARM_LABELS",
    "BlockerConfig",
    "DetectionProbs",
    "IDEAL_PARAMS",
    "JointProbTable",
    "NOMINAL_PARAMS",
    "NSITValues",
    "RUN_CONFIGS",
    "RawWeights",
    "SetupParams",
    "Tolerances",
    "UndefinedProbabilityError",
    "arm_branch_weights",
    "correlation",
    "detection_probs",
    "generic_lgi",
    "generic_wlgi",
    "ideal_maxima",
    "joint_probs_one_time",
    "joint_probs_three_time",
    "joint_probs_two_time",
    "lgi_closed_form",
    "nsit23_closed_form",
    "qm_lgi",
    "qm_nsit",
    "qm_range",
    "qm_wlgi",
    "raw_weights",
    "run_total_closed_form",
    "wlgi_closed_form",
]

ARM_LABELS = ("none", "plus", "minus")

# Blocking one arm certifies the opposite outcome for that time.
_BLOCKED_TO_OUTCOME = {"minus": +1, "plus": -1}


class UndefinedProbabilityError(ValueError):
    """Raised when a run's total weight vanishes and no table can be formed."""


@dataclass(frozen=True)
class SetupParams:
    """Optical parameters of the circuit.

    Parameters
    ----------
    alpha_sq : float
        Weight of the +1 outer arm, in [0, 1].  The -1 arm carries
        ``1 - alpha_sq``.
    t_ratios : tuple of float
        Intensity transmissions (T1, T2, T3, T4) of the four loop ports,
        each in [0, 1].  Reflections are ``1 - T``.
    visibility : float
        Interference visibility of the inner loop, in [-1, 1].  The cross
        term between the two inner arms is scaled by this factor; 0 removes
        interference entirely.
    """

    alpha_sq: float = 0.5
    t_ratios: Tuple[float, float, float, float] = (0.80, 0.79, 0.82, 0.82)
    visibility: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha_sq <= 1.0:
            raise ValueError(f"alpha_sq must lie in [0, 1], got {self.alpha_sq}")
        ts = tuple(float(t) for t in self.t_ratios)
        if len(ts) != 4:
            raise ValueError("t_ratios must hold exactly four transmissions")
        for t in ts:
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"transmissions must lie in [0, 1], got {t}")
        if not -1.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must lie in [-1, 1], got {self.visibility}")
        object.__setattr__(self, "t_ratios", ts)

    @property
    def beta_sq(self) -> float:
        """Weight of the -1 outer arm."""
        return 1.0 - self.alpha_sq

    @property
    def r_ratios(self) -> Tuple[float, float, float, float]:
        """Intensity reflections (R1, R2, R3, R4) of the four ports."""
        return tuple(1.0 - t for t in self.t_ratios)


#: Lossless symmetric reference configuration.
IDEAL_PARAMS = SetupParams(alpha_sq=0.5, t_ratios=(0.75, 0.75, 0.75, 0.75), visibility=1.0)

#: Port ratios of the modeled bench instrument.
NOMINAL_PARAMS = SetupParams()


@dataclass(frozen=True)
class BlockerConfig:
    """Blocker positions for one sub-run.

    Each field names the arm absorbed at that stage: ``"none"``, ``"plus"``
    or ``"minus"``.  ``block_t1`` acts on the outer arms before the loop,
    ``block_t2`` on the inner arms.
    """

    block_t1: str = "none"
    block_t2: str = "none"

    def __post_init__(self) -> None:
        for name in (self.block_t1, self.block_t2):
            if name not in ARM_LABELS:
                raise ValueError(f"blocker position must be one of {ARM_LABELS}, got {name!r}")


#: Blocker schedule of each run of the measurement protocol.
RUN_CONFIGS: Dict[int, Tuple[BlockerConfig, ...]] = {
    1: (BlockerConfig("none", "minus"), BlockerConfig("none", "plus")),
    2: (BlockerConfig("minus", "none"), BlockerConfig("plus", "none")),
    3: (
        BlockerConfig("minus", "minus"),
        BlockerConfig("minus", "plus"),
        BlockerConfig("plus", "minus"),
        BlockerConfig("plus", "plus"),
    ),
    4: (BlockerConfig("none", "none"),),
}


class RawWeights(NamedTuple):
    """Unnormalized per-photon weights of one sub-run."""

    w_plus: float
    w_minus: float
    w_lost: float

    @property
    def total(self) -> float:
        return self.w_plus + self.w_minus + self.w_lost


class DetectionProbs(NamedTuple):
    """Normalized detection probabilities of one sub-run (sum to one)."""

    p_plus: float
    p_minus: float
    p_lost: float


class NSITValues(NamedTuple):
    """No-signaling-in-time interference measures for the three time pairs."""

    nsit12: float
    nsit23: float
    nsit13: float


def arm_branch_weights(params: SetupParams, blockers: BlockerConfig, arm: int) -> RawWeights:
    """Weights for a photon known to occupy one outer arm.

    Parameters
    ----------
    params : SetupParams
        Circuit parameters.
    blockers : BlockerConfig
        Blocker positions.
    arm : int
        Outer arm, +1 or -1.

    Returns
    -------
    RawWeights
        Weights conditioned on the photon starting in `arm` (before the
        outer-arm weight is applied).  A blocked photon contributes to
        ``w_lost``.
    """
    if arm not in (+1, -1):
        raise ValueError(f"arm must be +1 or -1, got {arm}")
    t1, t2, t3, t4 = params.t_ratios
    r1, r2, r3, r4 = params.r_ratios
    v = params.visibility

    arm_name = "plus" if arm == +1 else "minus"
    if blockers.block_t1 == arm_name:
        return RawWeights(0.0, 0.0, 1.0)

    # Amplitudes injected onto the inner arms; reflections carry phase i.
    if arm == +1:
        inner = {+1: complex(math.sqrt(t1)), -1: 1j * math.sqrt(r1)}
    else:
        inner = {+1: 1j * math.sqrt(r4), -1: complex(math.sqrt(t4))}

    lost = 0.0
    if blockers.block_t2 != "none":
        blocked = +1 if blockers.block_t2 == "plus" else -1
        lost = abs(inner[blocked]) ** 2
        inner[blocked] = 0j

    # Inner arm +1 exits through port 2, inner arm -1 through port 3; the
    # +1 detector collects T2 and R3, the -1 detector R2 and T3.
    to_plus = (inner[+1] * math.sqrt(t2), inner[-1] * 1j * math.sqrt(r3))
    to_minus = (inner[+1] * 1j * math.sqrt(r2), inner[-1] * math.sqrt(t3))
    w_plus = _coherent_sum(to_plus, v)
    w_minus = _coherent_sum(to_minus, v)
    return RawWeights(w_plus, w_minus, lost)


def _coherent_sum(amps: Tuple[complex, complex], v: float) -> float:
    """Intensity of two interfering amplitudes with cross term scaled by v."""
    x, y = amps
    return abs(x) ** 2 + abs(y) ** 2 + 2.0 * v * (x * y.conjugate()).real


def raw_weights(params: SetupParams, blockers: BlockerConfig) -> RawWeights:
    """Unnormalized detector/lost weights of one sub-run.

    The two outer arms add incoherently with weights ``alpha_sq`` and
    ``beta_sq``.  For configurations without inner-loop interference the
    three weights sum to one exactly; with interference the sum can deviate
    from one because the four port ratios are independent.
    """
    plus_arm = arm_branch_weights(params, blockers, +1)
    minus_arm = arm_branch_weights(params, blockers, -1)
    a2, b2 = params.alpha_sq, params.beta_sq
    return RawWeights(
        a2 * plus_arm.w_plus + b2 * minus_arm.w_plus,
        a2 * plus_arm.w_minus + b2 * minus_arm.w_minus,
        a2 * plus_arm.w_lost + b2 * minus_arm.w_lost,
    )


def detection_probs(params: SetupParams, blockers: BlockerConfig) -> DetectionProbs:
    """Normalized detection probabilities of one sub-run.

    Returns
    -------
    DetectionProbs
        ``(p_plus, p_minus, p_lost)`` summing to one.

    Raises
    ------
    UndefinedProbabilityError
        If the total weight vanishes (fully destructive configuration).
    """
    w = raw_weights(params, blockers)
    total = w.total
    if total <= 0.0:
        raise UndefinedProbabilityError(
            f"total weight {total} for blockers {blockers}; probabilities are undefined"
        )
    return DetectionProbs(w.w_plus / total, w.w_minus / total, w.w_lost / total)


@dataclass
class JointProbTable:
    """Joint outcome probability table assembled from one run.

    Attributes
    ----------
    order : str
        ``"one-time"``, ``"two-time"`` or ``"three-time"``.
    entries : dict
        Maps outcome tuples (elements +1/-1) to probabilities.  Keys are
        ordered canonically (+1 before -1, leftmost time slowest).
    provenance : list
        ``(BlockerConfig, RawWeights)`` pairs for each sub-run that
        contributed, in schedule order.
    """

    order: str
    entries: Dict[Tuple[int, ...], float]
    provenance: List[Tuple[BlockerConfig, RawWeights]] = field(default_factory=list)

    def total(self) -> float:
        return sum(self.entries.values())

    def marginalize_last(self) -> "JointProbTable":
        """Sum out the final time (arrival-time bookkeeping).

        Entry sums reuse the stored floats, so the marginal table's total
        equals this table's total exactly.
        """
        if self.order != "three-time":
            raise ValueError("can only marginalize the three-time table")
        entries: Dict[Tuple[int, ...], float] = {}
        for key in itertools.product((+1, -1), repeat=2):
            entries[key] = self.entries[key + (+1,)] + self.entries[key + (-1,)]
        return JointProbTable("two-time", entries, list(self.provenance))


def _normalized_table(
    order: str,
    keyed: List[Tuple[Tuple[int, ...], float]],
    provenance: List[Tuple[BlockerConfig, RawWeights]],
) -> JointProbTable:
    total = math.fsum(w for _, w in keyed)
    if total <= 0.0:
        raise UndefinedProbabilityError("run total weight vanishes; table undefined")
    n_times = len(keyed[0][0])
    lookup = dict(keyed)
    entries = {
        key: lookup[key] / total for key in itertools.product((+1, -1), repeat=n_times)
    }
    return JointProbTable(order, entries, provenance)


def joint_probs_three_time(params: SetupParams) -> JointProbTable:
    """Three-time table P(q1, q2, q3) from the doubly-blocked run."""
    keyed: List[Tuple[Tuple[int, ...], float]] = []
    provenance = []
    for cfg in RUN_CONFIGS[3]:
        w = raw_weights(params, cfg)
        q1 = _BLOCKED_TO_OUTCOME[cfg.block_t1]
        q2 = _BLOCKED_TO_OUTCOME[cfg.block_t2]
        keyed.append(((q1, q2, +1), w.w_plus))
        keyed.append(((q1, q2, -1), w.w_minus))
        provenance.append((cfg, w))
    return _normalized_table("three-time", keyed, provenance)


def joint_probs_two_time(params: SetupParams, pair: Sequence[str]) -> JointProbTable:
    """Two-time table for one of the pairs (t1,t2), (t2,t3) or (t1,t3).

    The (t1,t2) table is the arrival-time marginal of the three-time run;
    the other two come from their single-blocker runs.
    """
    pair = tuple(pair)
    if pair == ("t1", "t2"):
        return joint_probs_three_time(params).marginalize_last()
    if pair == ("t2", "t3"):
        run = 1
    elif pair == ("t1", "t3"):
        run = 2
    else:
        raise ValueError(f"unknown time pair {pair}")
    keyed: List[Tuple[Tuple[int, ...], float]] = []
    provenance = []
    for cfg in RUN_CONFIGS[run]:
        w = raw_weights(params, cfg)
        blocked = cfg.block_t1 if run == 2 else cfg.block_t2
        q_early = _BLOCKED_TO_OUTCOME[blocked]
        keyed.append(((q_early, +1), w.w_plus))
        keyed.append(((q_early, -1), w.w_minus))
        provenance.append((cfg, w))
    return _normalized_table("two-time", keyed, provenance)


def joint_probs_one_time(params: SetupParams) -> JointProbTable:
    """Single-time table P(q3) from the blocker-free run."""
    (cfg,) = RUN_CONFIGS[4]
    w = raw_weights(params, cfg)
    keyed = [((+1,), w.w_plus), ((-1,), w.w_minus)]
    return _normalized_table("one-time", keyed, [(cfg, w)])


def correlation(table: JointProbTable) -> float:
    """Dichotomic correlator <q_i q_j> of a two-time table."""
    if table.order != "two-time":
        raise ValueError("correlation requires a two-time table")
    e = table.entries
    return e[(+1, +1)] - e[(+1, -1)] - e[(-1, +1)] + e[(-1, -1)]


def qm_lgi(params: SetupParams) -> float:
    """Leggett-Garg combination <q1 q2> + <q2 q3> - <q1 q3>.

    Macrorealism bounds this by 1; the quantum model exceeds it for
    suitable parameters (maximum 1.5 in the ideal symmetric circuit).
    """
    c12 = correlation(joint_probs_two_time(params, ("t1", "t2")))
    c23 = correlation(joint_probs_two_time(params, ("t2", "t3")))
    c13 = correlation(joint_probs_two_time(params, ("t1", "t3")))
    return c12 + c23 - c13


def qm_wlgi(params: SetupParams) -> float:
    """Probability-form combination P13(-,+) - P12(-,+) - P23(-,+).

    Macrorealism bounds this by 0; the quantum model reaches 0.125 in the
    ideal symmetric circuit.
    """
    p12 = joint_probs_two_time(params, ("t1", "t2")).entries[(-1, +1)]
    p23 = joint_probs_two_time(params, ("t2", "t3")).entries[(-1, +1)]
    p13 = joint_probs_two_time(params, ("t1", "t3")).entries[(-1, +1)]
    return p13 - p12 - p23


def qm_nsit(params: SetupParams) -> NSITValues:
    """No-signaling-in-time measures built from the measured tables.

    ``nsit12`` compares the t2 marginal with and without the t1 blocker
    pass, ``nsit23`` and ``nsit13`` compare the free-evolution t3 marginal
    against the blocked runs.  In this model ``nsit12`` and ``nsit13``
    vanish identically; ``nsit23`` is generically nonzero.
    """
    p23 = joint_probs_two_time(params, ("t2", "t3")).entries
    p13 = joint_probs_two_time(params, ("t1", "t3")).entries
    p12 = joint_probs_two_time(params, ("t1", "t2")).entries
    p3 = joint_probs_one_time(params).entries
    nsit12 = abs((p23[(+1, +1)] + p23[(+1, -1)]) - (p12[(+1, +1)] + p12[(-1, +1)]))
    nsit23 = abs(p3[(+1,)] - p23[(+1, +1)] - p23[(-1, +1)])
    nsit13 = abs(p3[(+1,)] - p13[(+1, +1)] - p13[(-1, +1)])
    return NSITValues(nsit12, nsit23, nsit13)


def run_total_closed_form(params: SetupParams) -> float:
    """Raw weight total of the interference runs (2 and 4).

    Equals 1 + 2 v (sqrt(R2 T3) - sqrt(T2 R3)) (a2 sqrt(T1 R1) - b2 sqrt(T4 R4)).
    """
    t1, t2, t3, t4 = params.t_ratios
    r1, r2, r3, r4 = params.r_ratios
    a2, b2 = params.alpha_sq, params.beta_sq
    v = params.visibility
    return 1.0 + 2.0 * v * (math.sqrt(r2 * t3) - math.sqrt(t2 * r3)) * (
        a2 * math.sqrt(t1 * r1) - b2 * math.sqrt(t4 * r4)
    )


def lgi_closed_form(params: SetupParams) -> float:
    """Leggett-Garg combination in the unit-run-total approximation."""
    t1, t2, t3, t4 = params.t_ratios
    r1, r2, r3, r4 = params.r_ratios
    a2, b2 = params.alpha_sq, params.beta_sq
    v = params.visibility
    return a2 * (
        r1 * (t3 - 3.0 * r3)
        + t1
        + 2.0 * v * math.sqrt(t1 * t2 * r1 * r3)
        + 2.0 * v * math.sqrt(t1 * t3 * r1 * r2)
    ) + b2 * (
        r4 * (t2 - 3.0 * r2)
        + t4
        + 2.0 * v * math.sqrt(t2 * t4 * r3 * r4)
        + 2.0 * v * math.sqrt(t3 * t4 * r2 * r4)
    )


def wlgi_closed_form(params: SetupParams) -> float:
    """Probability-form combination in the unit-run-total approximation."""
    t1, t2, t3, t4 = params.t_ratios
    r1, r2, r3, r4 = params.r_ratios
    a2, b2 = params.alpha_sq, params.beta_sq
    v = params.visibility
    return 2.0 * b2 * v * math.sqrt(t2 * t4 * r3 * r4) - a2 * r1 * r3 - b2 * r2 * r4


def nsit23_closed_form(params: SetupParams) -> float:
    """nsit23 in the unit-run-total approximation."""
    t1, t2, t3, t4 = params.t_ratios
    r1, r2, r3, r4 = params.r_ratios
    a2, b2 = params.alpha_sq, params.beta_sq
    v = params.visibility
    return abs(
        2.0 * a2 * v * math.sqrt(t1 * t2 * r1 * r3)
        - 2.0 * b2 * v * math.sqrt(t2 * t4 * r3 * r4)
    )


@dataclass(frozen=True)
class Tolerances:
    """Parameter uncertainty box swept by :func:`qm_range`.

    Parameters
    ----------
    hwp_angle_deg : float
        Uncertainty, in degrees, of the polarization rotation set by the
        half-wave plate.  The arm weight responds as
        ``alpha_sq = sin^2(rot0 + delta)`` around the nominal rotation
        ``rot0 = arcsin(sqrt(alpha_sq))``, so ±1° maps the balanced point
        to ``alpha_sq`` in [0.4826, 0.5174].
    t_delta : float
        Symmetric uncertainty applied to each transmission (clipped to
        [0, 1]).
    v_range : tuple of float, optional
        Visibility interval; ``None`` keeps the nominal visibility fixed.
    grid_points : int
        Grid resolution per swept axis (endpoints included).
    """

    hwp_angle_deg: float = 1.0
    t_delta: float = 0.02
    v_range: Tuple[float, float] | None = None
    grid_points: int = 21

    def __post_init__(self) -> None:
        if self.hwp_angle_deg < 0.0 or self.t_delta < 0.0:
            raise ValueError("tolerance widths must be nonnegative")
        if self.grid_points < 1:
            raise ValueError("grid_points must be at least 1")
        if self.v_range is not None:
            lo, hi = self.v_range
            if not -1.0 <= lo <= hi <= 1.0:
                raise ValueError(f"v_range must be ordered within [-1, 1], got {self.v_range}")


def _sweep_values(a2, v, t1, t2, t3, t4):
    """Vectorized (lgi, wlgi, nsit23) over broadcastable parameter arrays."""
    b2 = 1.0 - a2
    r1, r2, r3, r4 = 1.0 - t1, 1.0 - t2, 1.0 - t3, 1.0 - t4
    wp_p = t1 * t2 + r1 * r3 - 2.0 * v * np.sqrt(t1 * t2 * r1 * r3)
    wm_p = t1 * r2 + r1 * t3 + 2.0 * v * np.sqrt(t1 * r1 * r2 * t3)
    wp_m = r4 * t2 + t4 * r3 + 2.0 * v * np.sqrt(t2 * t4 * r3 * r4)
    wm_m = r2 * r4 + t3 * t4 - 2.0 * v * np.sqrt(r2 * r4 * t3 * t4)
    d = a2 * (wp_p + wm_p) + b2 * (wp_m + wm_m)
    inner_p = a2 * t1 + b2 * r4
    inner_m = a2 * r1 + b2 * t4
    c12 = a2 * (2.0 * t1 - 1.0) + b2 * (2.0 * t4 - 1.0)
    c23 = inner_p * (t2 - r2) + inner_m * (t3 - r3)
    c13 = (a2 * (wp_p - wm_p) + b2 * (wm_m - wp_m)) / d
    lgi = c12 + c23 - c13
    wlgi = b2 * wp_m / d - b2 * r4 - inner_m * r3
    p3_plus = (a2 * wp_p + b2 * wp_m) / d
    nsit23 = np.abs(p3_plus - (inner_p * t2 + inner_m * r3))
    return lgi, wlgi, nsit23


def qm_range(params: SetupParams, tol: Tolerances) -> Dict[str, Tuple[float, float]]:
    """Extremes of lgi, wlgi and nsit23 over a parameter uncertainty box.

    Sweeps a full grid over the half-wave-plate angle, the four
    transmissions and (optionally) the visibility, with ``tol.grid_points``
    points per axis, and returns the observed (min, max) of each quantity.

    Returns
    -------
    dict
        Keys ``"lgi"``, ``"wlgi"``, ``"nsit23"``; values (min, max).
    """
    n = tol.grid_points
    rotation0 = math.asin(min(1.0, math.sqrt(params.alpha_sq)))
    half_width = math.radians(tol.hwp_angle_deg)
    deltas = np.linspace(-half_width, half_width, n) if half_width > 0 else np.zeros(1)
    alpha_axis = np.sin(rotation0 + deltas) ** 2

    t_axes = []
    for t in params.t_ratios:
        if tol.t_delta > 0:
            t_axes.append(np.clip(np.linspace(t - tol.t_delta, t + tol.t_delta, n), 0.0, 1.0))
        else:
            t_axes.append(np.array([t]))
    if tol.v_range is None:
        v_axis = np.array([params.visibility])
    else:
        v_axis = np.linspace(tol.v_range[0], tol.v_range[1], n)

    # The transmissions form the large inner grid; the cheap outer loop runs
    # over (alpha_sq, v) so the sqrt products are recomputed only 4 times per
    # combination on the flattened grid.
    grids = np.meshgrid(*t_axes, indexing="ij")
    t1, t2, t3, t4 = (g.ravel() for g in grids)

    bounds = {name: [math.inf, -math.inf] for name in ("lgi", "wlgi", "nsit23")}
    for a2 in alpha_axis:
        for v in v_axis:
            lgi, wlgi, nsit23 = _sweep_values(a2, v, t1, t2, t3, t4)
            for name, vals in (("lgi", lgi), ("wlgi", wlgi), ("nsit23", nsit23)):
                lo, hi = float(np.min(vals)), float(np.max(vals))
                if lo < bounds[name][0]:
                    bounds[name][0] = lo
                if hi > bounds[name][1]:
                    bounds[name][1] = hi
    return {name: (lo, hi) for name, (lo, hi) in bounds.items()}


def generic_lgi(theta2: float, t2: float, t3: float) -> float:
    """Leggett-Garg combination of the generic lossless one-arm circuit.

    Equals ``1 - 4 R2 R3 + 4 cos(theta2) sqrt(T2 T3 R2 R3)``.
    """
    r2, r3 = 1.0 - t2, 1.0 - t3
    return 1.0 - 4.0 * r2 * r3 + 4.0 * math.cos(theta2) * math.sqrt(t2 * t3 * r2 * r3)


def generic_wlgi(theta1: float, theta2: float, t1: float, t2: float, t3: float) -> float:
    """Probability-form combination of the generic lossless circuit.

    Equals ``2 cos(theta2) R1 sqrt(T2 T3 R2 R3)
    - 2 cos(theta1) R3 sqrt(T1 T2 R1 R2) - R2 R3``.
    """
    r1, r2, r3 = 1.0 - t1, 1.0 - t2, 1.0 - t3
    return (
        2.0 * math.cos(theta2) * r1 * math.sqrt(t2 * t3 * r2 * r3)
        - 2.0 * math.cos(theta1) * r3 * math.sqrt(t1 * t2 * r1 * r2)
        - r2 * r3
    )


def _polish_maximum(fun, x0, bounds):
    res = optimize.minimize(
        lambda x: -fun(*x), x0, method="L-BFGS-B", bounds=bounds
    )
    return -res.fun, res.x


def ideal_maxima(grid_points: int = 13, polish_starts: int = 12) -> Dict[str, object]:
    """Global maxima of the generic-circuit combinations.

    Coarse grid scan followed by local polish from the best grid cells.

    Returns
    -------
    dict
        ``lgi_max``, ``lgi_argmax`` (theta2, t2, t3), ``wlgi_max`` and
        ``wlgi_argmax`` (theta1, theta2, t1, t2, t3).
    """
    thetas = np.linspace(0.0, 2.0 * math.pi, grid_points)
    # Keep transmissions off the hard 0/1 edges where the gradient vanishes.
    ts = np.linspace(0.01, 0.99, grid_points)

    th2, t2, t3 = np.meshgrid(thetas, ts, ts, indexing="ij")
    r2, r3 = 1.0 - t2, 1.0 - t3
    lgi_vals = 1.0 - 4.0 * r2 * r3 + 4.0 * np.cos(th2) * np.sqrt(t2 * t3 * r2 * r3)
    flat = np.argsort(lgi_vals.ravel())[::-1][:polish_starts]
    lgi_best, lgi_arg = -math.inf, None
    for idx in flat:
        x0 = (th2.ravel()[idx], t2.ravel()[idx], t3.ravel()[idx])
        val, x = _polish_maximum(
            generic_lgi, x0, [(0.0, 2.0 * math.pi), (0.0, 1.0), (0.0, 1.0)]
        )
        if val > lgi_best:
            lgi_best, lgi_arg = val, x

    th1, th2, t1, t2, t3 = np.meshgrid(thetas, thetas, ts, ts, ts, indexing="ij")
    r1, r2, r3 = 1.0 - t1, 1.0 - t2, 1.0 - t3
    wlgi_vals = (
        2.0 * np.cos(th2) * r1 * np.sqrt(t2 * t3 * r2 * r3)
        - 2.0 * np.cos(th1) * r3 * np.sqrt(t1 * t2 * r1 * r2)
        - r2 * r3
    )
    flat = np.argsort(wlgi_vals.ravel())[::-1][:polish_starts]
    wlgi_best, wlgi_arg = -math.inf, None
    for idx in flat:
        x0 = (
            th1.ravel()[idx],
            th2.ravel()[idx],
            t1.ravel()[idx],
            t2.ravel()[idx],
            t3.ravel()[idx],
        )
        val, x = _polish_maximum(
            generic_wlgi,
            x0,
            [(0.0, 2.0 * math.pi)] * 2 + [(0.0, 1.0)] * 3,
        )
        if val > wlgi_best:
            wlgi_best, wlgi_arg = val, x

    return {
        "lgi_max": float(lgi_best),
        "lgi_argmax": {"theta2": float(lgi_arg[0]), "t2": float(lgi_arg[1]), "t3": float(lgi_arg[2])},
        "wlgi_max": float(wlgi_best),
        "wlgi_argmax": {
            "theta1": float(wlgi_arg[0]),
            "theta2": float(wlgi_arg[1]),
            "t1": float(wlgi_arg[2]),
            "t2": float(wlgi_arg[3]),
            "t3": float(wlgi_arg[4]),
        },
    }
