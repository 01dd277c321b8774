"""Independent reference implementations used only by the test suite.

Each oracle recomputes a quantity through a different construction than the
library (explicit transfer matrices, quadratic-time pairing, exhaustive
enumeration) so agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from macroreal.circuit import BlockerConfig, SetupParams


def transfer_matrix_probs(params: SetupParams, blockers: BlockerConfig):
    """Detection probabilities via explicit 2x2 transfer matrices.

    Builds, per outer arm, the injection vector onto the inner modes, the
    blocker projector and the detector coupling matrix, and combines the two
    per-detector path amplitudes with the visibility-scaled cross term.
    Returns (p_plus, p_minus, p_lost) normalized to one.
    """
    t1, t2, t3, t4 = params.t_ratios
    r1, r2, r3, r4 = (1.0 - t for t in params.t_ratios)
    v = params.visibility

    # Rows: detectors (+, -); columns: inner modes (+1, -1).
    det = np.array(
        [
            [math.sqrt(t2), 1j * math.sqrt(r3)],
            [1j * math.sqrt(r2), math.sqrt(t3)],
        ],
        dtype=complex,
    )
    inject = {
        +1: np.array([math.sqrt(t1), 1j * math.sqrt(r1)], dtype=complex),
        -1: np.array([1j * math.sqrt(r4), math.sqrt(t4)], dtype=complex),
    }
    proj = np.eye(2, dtype=complex)
    lost_inner = np.zeros(2)
    if blockers.block_t2 == "plus":
        proj[0, 0] = 0.0
        lost_inner[0] = 1.0
    elif blockers.block_t2 == "minus":
        proj[1, 1] = 0.0
        lost_inner[1] = 1.0

    weights = {+1: params.alpha_sq, -1: params.beta_sq}
    blocked_arm = {"plus": +1, "minus": -1, "none": 0}[blockers.block_t1]

    w_plus = w_minus = w_lost = 0.0
    for arm in (+1, -1):
        wa = weights[arm]
        if arm == blocked_arm:
            w_lost += wa
            continue
        vec = inject[arm]
        w_lost += wa * float(np.sum(lost_inner * np.abs(vec) ** 2))
        paths = det @ np.diag(proj @ vec)  # per-detector path amplitudes
        for row, acc in ((0, "plus"), (1, "minus")):
            a, b = paths[row, 0], paths[row, 1]
            inten = abs(a) ** 2 + abs(b) ** 2 + 2.0 * v * (a * np.conj(b)).real
            if acc == "plus":
                w_plus += wa * inten
            else:
                w_minus += wa * inten
    total = w_plus + w_minus + w_lost
    return w_plus / total, w_minus / total, w_lost / total


def brute_force_coincidences(times_a, times_b, lo, hi, bin_width):
    """Quadratic-time delay histogram of (t_b - t_a) over [lo, hi)."""
    n_bins = int(round((hi - lo) / bin_width))
    counts = np.zeros(n_bins, dtype=np.int64)
    for ta in times_a:
        for tb in times_b:
            d = tb - ta
            if lo <= d < hi:
                counts[int((d - lo) // bin_width)] += 1
    return counts


def grid_search_bound(value_fn, project_fn, support, eta, step=0.01, chunk=50000):
    """Exhaustive bound of a hidden-variable functional on a small support.

    Enumerates all weight assignments on `support` (list of flat indices
    into the 56-vector) over a regular grid, projects each onto the
    constraint set with `project_fn`, evaluates `value_fn` in batch and
    returns the maximum.  Assignments whose raw coordinates already exceed
    the total-weight cap are still projected (the projection is total).
    Processed in chunks to bound memory.
    """
    axis = np.arange(0.0, 1.0 + step / 2.0, step)
    grids = np.meshgrid(*[axis] * len(support), indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)
    best = -np.inf
    for start in range(0, flat.shape[0], chunk):
        rows = flat[start : start + chunk]
        weights = np.zeros((rows.shape[0], 56))
        weights[:, support] = rows
        values = value_fn(project_fn(weights, eta), eta)
        best = max(best, float(np.max(values)))
    return best


def deterministic_triple_values():
    """(lgi, wlgi) of each deterministic outcome triple, in product order."""
    rows = []
    for q1, q2, q3 in itertools.product((+1, -1), repeat=3):
        lgi = q1 * q2 + q2 * q3 - q1 * q3
        wlgi = (
            float(q1 == -1 and q3 == +1)
            - float(q1 == -1 and q2 == +1)
            - float(q2 == -1 and q3 == +1)
        )
        rows.append((lgi, wlgi))
    return rows


def representative_run_cells():
    """Mean coincidence cells of the bundled example dataset, verbatim.

    Keys are (run, sub_run) in schedule order; values are the corrected
    coincidence means on the (+1, -1) detectors.
    """
    return {
        (1, 0): (41644.94, 10725.33),
        (1, 1): (12334.57, 35954.40),
        (2, 0): (22977.20, 30456.67),
        (2, 1): (35541.98, 19814.86),
        (3, 0): (34430.15, 8957.09),
        (3, 1): (2203.34, 9067.37),
        (3, 2): (10218.37, 1900.90),
        (3, 3): (10171.06, 30126.35),
        (4, 0): (49888.96, 42526.46),
    }


def representative_expectations():
    """Inequality values recomputed from the cells by direct arithmetic.

    Normalizes each run with plain dict loops (no table machinery, no
    marginalization helper) so it independently checks the pipeline.
    """
    cells = representative_run_cells()
    prefixes = [(+1,), (-1,)]

    def two_time(run):
        raw = {}
        for sub, prefix in enumerate(prefixes):
            plus, minus = cells[(run, sub)]
            raw[prefix + (+1,)] = plus
            raw[prefix + (-1,)] = minus
        total = sum(raw.values())
        return {key: value / total for key, value in raw.items()}

    raw3 = {}
    for sub, prefix in enumerate([(+1, +1), (+1, -1), (-1, +1), (-1, -1)]):
        plus, minus = cells[(3, sub)]
        raw3[prefix + (+1,)] = plus
        raw3[prefix + (-1,)] = minus
    total3 = sum(raw3.values())
    p123 = {key: value / total3 for key, value in raw3.items()}
    p12 = {
        (q1, q2): p123[(q1, q2, +1)] + p123[(q1, q2, -1)]
        for q1, q2 in itertools.product((+1, -1), repeat=2)
    }
    p23, p13 = two_time(1), two_time(2)
    plus4, minus4 = cells[(4, 0)]
    p3_plus = plus4 / (plus4 + minus4)

    def corr(p):
        return p[(+1, +1)] - p[(+1, -1)] - p[(-1, +1)] + p[(-1, -1)]

    c12, c23, c13 = corr(p12), corr(p23), corr(p13)
    return {
        "corr12": c12,
        "corr23": c23,
        "corr13": c13,
        "lgi": c12 + c23 - c13,
        "wlgi": p13[(-1, +1)] - p12[(-1, +1)] - p23[(-1, +1)],
        "nsit12": abs(p23[(+1, +1)] + p23[(+1, -1)] - p12[(+1, +1)] - p12[(-1, +1)]),
        "nsit23": abs(p3_plus - p23[(+1, +1)] - p23[(-1, +1)]),
        "nsit13": abs(p3_plus - p13[(+1, +1)] - p13[(-1, +1)]),
    }


def exhaustive_cross_sigma(a_cells, b_cells, stat):
    """Std (ddof=1) of stat(p) over all pairings of two sub-run count rows.

    ``a_cells`` rows are (C(+, +), C(+, -)) per iteration and ``b_cells``
    rows are (C(-, +), C(-, -)); ``stat`` maps a four-entry probability
    dict to a real.  Plain double loop.
    """
    values = []
    for cpp, cpm in a_cells:
        for cmp_, cmm in b_cells:
            total = cpp + cpm + cmp_ + cmm
            p = {
                (+1, +1): cpp / total,
                (+1, -1): cpm / total,
                (-1, +1): cmp_ / total,
                (-1, -1): cmm / total,
            }
            values.append(stat(p))
    return float(np.std(values, ddof=1))


def exhaustive_four_way_sigma(sub_cells, stat):
    """Std (ddof=1) of stat(p12) over every four-way sub-run combination.

    ``sub_cells`` holds four arrays of (C(q1, q2, +), C(q1, q2, -)) rows in
    the double-blocked schedule order (+,+), (+,-), (-,+), (-,-); ``stat``
    maps the marginal two-time probability dict to a real.  Plain quadruple
    loop over all combinations.
    """
    prefixes = [(+1, +1), (+1, -1), (-1, +1), (-1, -1)]
    values = []
    for rows in itertools.product(*[range(len(c)) for c in sub_cells]):
        cells = {}
        for k, idx in enumerate(rows):
            plus, minus = sub_cells[k][idx]
            cells[prefixes[k] + (+1,)] = plus
            cells[prefixes[k] + (-1,)] = minus
        total = sum(cells.values())
        p12 = {
            pre: (cells[pre + (+1,)] + cells[pre + (-1,)]) / total
            for pre in prefixes
        }
        values.append(stat(p12))
    return float(np.std(values, ddof=1))


def two_photon_event_counts(n1, n2, a, p, s1, s2, eta1, eta2):
    """Expected singles/coincidences from per-photon detection probabilities.

    A photon entering one double-blocker configuration reaches detector 1
    with probability q1 = a*p*s1*eta1 and detector 2 with q2 = a*p*s2*eta2
    (arm choice, surviving splitter branch, final split, detector).  For a
    photon pair the two photons are independent, each detector clicks at
    most once per event, so

        E[C1]  = n1*q1 + n2*(1 - (1-q1)^2)
        E[C2]  = n1*q2 + n2*(1 - (1-q2)^2)
        E[C12] = n2*2*q1*q2.

    This never expands the pair terms into the splitter-branch binomials,
    so it independently checks that algebra in the library closed forms.
    """
    q1 = a * p * s1 * eta1
    q2 = a * p * s2 * eta2
    c1 = n1 * q1 + n2 * (1.0 - (1.0 - q1) ** 2)
    c2 = n1 * q2 + n2 * (1.0 - (1.0 - q2) ** 2)
    c12 = n2 * 2.0 * q1 * q2
    return c1, c2, c12
