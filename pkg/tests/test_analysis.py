"""Tests for the coincidence post-processing pipeline."""

import dataclasses
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from macroreal.analysis import (
    BootstrapResult,
    CoincidenceHistogram,
    NoPeakError,
    WindowSelection,
    analyze_counts,
    analyze_dataset,
    bootstrap_sdm,
    corrected_coincidences,
    count_dataset,
    count_sub_run,
    error_distributions,
    evaluate_inequalities,
    histogram,
    joint_probs_from_counts,
    joint_probs_from_runs,
    load_run_counts_csv,
    per_iteration_values,
    representative_counts_path,
    select_window,
)
from macroreal.circuit import (
    NOMINAL_PARAMS,
    JointProbTable,
    SetupParams,
    UndefinedProbabilityError,
    qm_lgi,
    qm_nsit,
)
from macroreal.simulate import SourceConfig, run_protocol

QUIET = dict(dark_rate_h=0.0, dark_rate_p=0.0, dark_rate_m=0.0, jitter_sigma=0.0)


def poisson_stream(rng, rate, duration_ps):
    n = rng.poisson(rate * duration_ps * 1e-12)
    return np.sort(rng.integers(0, duration_ps, size=n))


# ---------------------------------------------------------------------------
# histogram


def test_histogram_matches_brute_force():
    rng = np.random.default_rng(7)
    a = np.sort(rng.integers(0, 10_000_000, size=1000))
    b = np.sort(rng.integers(0, 10_000_000, size=1000))
    h = histogram(a, b, bin_width=100, window=(-5000, 5000))
    expected = oracles.brute_force_coincidences(a, b, -5000, 5000, 100)
    assert np.array_equal(h.counts, expected)
    assert h.origin == -5000 and h.bin_width == 100


def test_histogram_shifted_delta_stream():
    a = np.arange(0, 200_000_000, 200_000, dtype=np.int64)
    b = a + 5000
    h = histogram(a, b, bin_width=100, window=(-50_000, 50_000))
    peak = (5000 - h.origin) // h.bin_width
    assert h.counts[peak] == len(a)
    assert h.counts.sum() == len(a)


def test_histogram_accidental_rate():
    rng = np.random.default_rng(11)
    duration_ps = 10**12
    rate = 2e5
    a = poisson_stream(rng, rate, duration_ps)
    b = poisson_stream(rng, rate, duration_ps)
    h = histogram(a, b, bin_width=100, window=(-50_000, 50_000))
    expected = rate * rate * 100e-12  # pairs per bin per second x 1 s
    mean = h.counts.mean()
    tol = 4.0 * math.sqrt(expected / h.n_bins)
    assert abs(mean - expected) < tol


def test_histogram_empty_stream():
    h = histogram(np.array([], dtype=np.int64), np.array([100, 200]))
    assert h.counts.sum() == 0
    assert h.n_bins == 1000


def test_histogram_validation():
    a = np.array([0, 100])
    with pytest.raises(ValueError):
        histogram(a, a, bin_width=0)
    with pytest.raises(ValueError):
        histogram(a, a, bin_width=100, window=(-150, 160))
    with pytest.raises(ValueError):
        histogram(a, a, bin_width=100, window=(0, 200))
    with pytest.raises(ValueError):
        histogram(np.array([200, 100]), a)


# ---------------------------------------------------------------------------
# window selection and correction


def gaussian_pair_streams(n, sigma, offset, seed=3, spacing=1_000_000):
    rng = np.random.default_rng(seed)
    a = np.arange(n, dtype=np.int64) * spacing
    b = np.sort(a + offset + np.rint(rng.normal(0.0, sigma, size=n)).astype(np.int64))
    return a, b


def test_select_window_gaussian_fwhm():
    a, b = gaussian_pair_streams(200_000, sigma=400.0, offset=0)
    w = select_window(histogram(a, b))
    width_bins = w.n_bins
    fwhm_bins = 2.355 * 400.0 / 100.0  # 9.42
    assert abs(width_bins - fwhm_bins) <= 1.0
    assert w.policy == "FWHM"


def test_select_window_centered_at_offset():
    a, b = gaussian_pair_streams(100_000, sigma=400.0, offset=20_000)
    w = select_window(histogram(a, b))
    center = 0.5 * (w.start + w.end)
    assert abs(center - 20_000) <= 100


def test_select_window_flat_histogram_raises():
    rng = np.random.default_rng(5)
    h = CoincidenceHistogram(100, -50_000, rng.poisson(5.0, size=1000))
    with pytest.raises(NoPeakError):
        select_window(h)


def test_select_window_flatline_estimate():
    rng = np.random.default_rng(9)
    counts = rng.poisson(8.0, size=1000)
    peak = np.array([200, 900, 2000, 900, 200])
    counts[498:503] += peak
    w = select_window(CoincidenceHistogram(100, -50_000, counts))
    assert abs(w.flatline_mean - 8.0) < 4.0 * math.sqrt(8.0 / 900)


def test_corrected_zero_background_all_inside():
    a = np.arange(0, 100_000_000, 100_000, dtype=np.int64)
    b = a + 5000
    w = WindowSelection(start=4900, end=5100, flatline_mean=0.0)
    assert corrected_coincidences(a, b, w) == len(a)


def test_corrected_uniform_accidentals_near_zero():
    rng = np.random.default_rng(13)
    duration_ps = 10**12
    a = poisson_stream(rng, 2e5, duration_ps)
    b = poisson_stream(rng, 2e5, duration_ps)
    per_bin = 2e5 * 2e5 * 100e-12
    w = WindowSelection(start=-5000, end=5000, flatline_mean=per_bin)
    raw = per_bin * 100
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # clamp is expected here
        assert corrected_coincidences(a, b, w) <= 4.0 * math.sqrt(raw)


def test_corrected_recovers_true_pairs():
    rng = np.random.default_rng(17)
    spacing = 1_000_000
    a = np.arange(1000, dtype=np.int64) * spacing
    accidentals = poisson_stream(rng, 2e5, 1000 * spacing)
    b = np.sort(np.concatenate([a + 5000, accidentals]))
    h = histogram(a, b)
    w = select_window(h)
    corrected = corrected_coincidences(a, b, w)
    raw = corrected + w.flatline_mean * w.n_bins
    assert abs(corrected - 1000) <= 4.0 * math.sqrt(raw)


def test_corrected_clamps_negative_to_zero_with_warning():
    a = np.array([0, 1_000_000], dtype=np.int64)
    b = np.array([500_000], dtype=np.int64)
    w = WindowSelection(start=0, end=1000, flatline_mean=5.0)
    with pytest.warns(RuntimeWarning):
        value = corrected_coincidences(a, b, w)
    assert value == 0.0


def test_window_invariance_under_common_shift():
    a, b = gaussian_pair_streams(50_000, sigma=400.0, offset=5000)
    shift = 123_456_789
    before = corrected_coincidences(a, b, select_window(histogram(a, b)))
    after = corrected_coincidences(
        a + shift, b + shift, select_window(histogram(a + shift, b + shift))
    )
    assert before == after


# ---------------------------------------------------------------------------
# sub-run counting


def test_count_sub_run_sums_two_delay_peaks():
    a = np.arange(2000, dtype=np.int64) * 1_000_000
    first, second = a[:1000] + 10_000, a[1000:] + 30_000
    b = np.sort(np.concatenate([first, second]))
    assert count_sub_run(a, b) == 2000.0


def test_count_sub_run_no_peak_raises():
    rng = np.random.default_rng(19)
    a = poisson_stream(rng, 1e5, 10**11)
    b = poisson_stream(rng, 1e5, 10**11)
    with pytest.raises(NoPeakError):
        count_sub_run(a, b)


def test_run2_peak_offsets_differ_by_arm_delay():
    src = SourceConfig(pair_rate=1e5, seed=21, **QUIET)
    dataset = run_protocol(
        src, NOMINAL_PARAMS, iterations={"interference": 1, "non_interference": 1}
    )
    centers = {}
    for sub, cfg in enumerate(dataset.sub_run_blockers(2)):
        h_s, p_s, _ = dataset.streams(2, sub, 0)
        w = select_window(histogram(h_s, p_s, window=(50_000, 150_000)))
        centers[cfg.block_t1] = 0.5 * (w.start + w.end)
    # Blocking -1 leaves the prompt arm; blocking +1 leaves the delayed one.
    assert abs((centers["plus"] - centers["minus"]) - src.arm_delay_tau) <= 200


# ---------------------------------------------------------------------------
# tables and inequalities


def small_quiet_dataset(seed=23, pair_rate=2e4):
    src = SourceConfig(
        pair_rate=pair_rate, seed=seed, dark_rate_h=100.0, dark_rate_p=100.0,
        dark_rate_m=100.0, jitter_sigma=400.0,
    )
    return run_protocol(
        src, NOMINAL_PARAMS, iterations={"interference": 3, "non_interference": 2}
    )


def test_count_dataset_shapes_and_probability_closure():
    dataset = small_quiet_dataset()
    counts = count_dataset(dataset)
    assert set(counts) == {(r, s) for r in (1, 2, 4) for s in range(2)} - {(4, 1)} | {
        (3, s) for s in range(4)
    } | {(4, 0)}
    assert counts[(1, 0)].shape == (2, 2)
    assert counts[(2, 0)].shape == (3, 2)
    tables = joint_probs_from_runs(counts)
    assert set(tables) == {
        ("t2", "t3"), ("t1", "t3"), ("t1", "t2", "t3"), ("t1", "t2"), ("t3",)
    }
    for table in tables.values():
        assert table.total() == pytest.approx(1.0, abs=1e-9)
        assert all(0.0 <= p <= 1.0 for p in table.entries.values())


def test_joint_probs_representative_fixture_matches_printed_tables():
    tables = joint_probs_from_counts(load_run_counts_csv(representative_counts_path()))
    p23 = tables[("t2", "t3")].entries
    printed23 = {(+1, +1): 0.414, (+1, -1): 0.107, (-1, +1): 0.122, (-1, -1): 0.357}
    for key, value in printed23.items():
        assert p23[key] == pytest.approx(value, abs=1e-3)
    p12 = tables[("t1", "t2")].entries
    printed12 = {(+1, +1): 0.406, (+1, -1): 0.106, (-1, +1): 0.113, (-1, -1): 0.376}
    for key, value in printed12.items():
        assert p12[key] == pytest.approx(value, abs=1e-3)
    assert tables[("t3",)].entries[(+1,)] == pytest.approx(0.540, abs=1e-3)


def test_marginal_identity_is_exact():
    tables = joint_probs_from_counts(load_run_counts_csv(representative_counts_path()))
    p123 = tables[("t1", "t2", "t3")].entries
    p12 = tables[("t1", "t2")].entries
    for q1 in (+1, -1):
        for q2 in (+1, -1):
            assert p12[(q1, q2)] == p123[(q1, q2, +1)] + p123[(q1, q2, -1)]


def test_joint_probs_uniform_counts():
    counts = {
        key: np.full((1, 2), 7.5)
        for key in [(1, 0), (1, 1), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2), (3, 3), (4, 0)]
    }
    tables = joint_probs_from_counts(counts)
    for key, size in [
        (("t2", "t3"), 4), (("t1", "t3"), 4), (("t1", "t2", "t3"), 8),
        (("t1", "t2"), 4), (("t3",), 2),
    ]:
        for p in tables[key].entries.values():
            assert p == pytest.approx(1.0 / size, abs=1e-12)


def test_zero_run_total_raises():
    counts = {key: np.full((1, 2), 5.0) for key in [(4, 0)]}
    counts[(4, 0)] = np.zeros((1, 2))
    with pytest.raises(UndefinedProbabilityError):
        joint_probs_from_counts(counts)


@given(
    cells=st.lists(
        st.floats(min_value=1.0, max_value=1e6), min_size=18, max_size=18
    )
)
@settings(max_examples=50, deadline=None)
def test_tables_close_and_marginalize_for_any_counts(cells):
    keys = [(1, 0), (1, 1), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2), (3, 3), (4, 0)]
    counts = {
        key: np.array([[cells[2 * i], cells[2 * i + 1]]]) for i, key in enumerate(keys)
    }
    tables = joint_probs_from_counts(counts)
    for table in tables.values():
        assert table.total() == pytest.approx(1.0, abs=1e-9)
    report = evaluate_inequalities(tables)
    assert -3.0 <= report.lgi[0] <= 3.0
    assert -1.0 <= report.wlgi[0] <= 1.0


def test_evaluate_representative_regression():
    report = analyze_counts(load_run_counts_csv(representative_counts_path()))
    expected = oracles.representative_expectations()
    assert report.lgi[0] == pytest.approx(expected["lgi"], abs=1e-12)
    assert report.wlgi[0] == pytest.approx(expected["wlgi"], abs=1e-12)
    # Frozen pipeline values.
    assert report.lgi[0] == pytest.approx(1.3182454010, abs=1e-6)
    assert report.wlgi[0] == pytest.approx(0.0909773631, abs=1e-6)
    assert report.nsit12[0] == pytest.approx(0.0018819889, abs=1e-6)
    assert report.nsit23[0] == pytest.approx(0.0035738599, abs=1e-6)
    assert report.nsit13[0] == pytest.approx(0.0019276804, abs=1e-6)
    # Printed three-decimal values.
    assert round(report.lgi[0], 2) == 1.32
    assert report.wlgi[0] == pytest.approx(0.09, abs=1e-3)
    assert report.nsit12[0] == pytest.approx(0.002, abs=5e-4)
    assert report.nsit23[0] == pytest.approx(0.004, abs=5e-4)
    assert report.nsit13[0] == pytest.approx(0.002, abs=5e-4)
    assert report.correlations["t1t2"][0] == pytest.approx(0.56, abs=1e-2)
    assert report.correlations["t2t3"][0] == pytest.approx(0.54, abs=1e-2)
    assert report.correlations["t1t3"][0] == pytest.approx(-0.22, abs=1e-2)
    assert report.lgi[1] is None


def test_evaluate_uniform_tables():
    uniform2 = {key: 0.25 for key in [(+1, +1), (+1, -1), (-1, +1), (-1, -1)]}
    tables = {
        ("t2", "t3"): JointProbTable("two-time", dict(uniform2)),
        ("t1", "t3"): JointProbTable("two-time", dict(uniform2)),
        ("t1", "t2"): JointProbTable("two-time", dict(uniform2)),
        ("t3",): JointProbTable("one-time", {(+1,): 0.5, (-1,): 0.5}),
    }
    report = evaluate_inequalities(tables)
    assert report.lgi[0] == 0.0
    assert report.wlgi[0] == -0.25
    assert report.nsit12[0] == 0.0
    assert report.nsit23[0] == 0.0
    assert report.nsit13[0] == 0.0


def test_evaluate_missing_table_names_run():
    tables = joint_probs_from_counts(load_run_counts_csv(representative_counts_path()))
    del tables[("t1", "t3")]
    with pytest.raises(ValueError, match="run 2"):
        evaluate_inequalities(tables)


def test_load_run_counts_csv_rejects_bad_schema(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("block_t1,block_t2,count\nnone,none,5\n")
    with pytest.raises(ValueError, match="columns"):
        load_run_counts_csv(bad)


# ---------------------------------------------------------------------------
# error distributions


def random_counts(rng, n_by_run):
    counts = {}
    for run, subs in [(1, 2), (2, 2), (3, 4), (4, 1)]:
        for sub in range(subs):
            counts[(run, sub)] = rng.uniform(100.0, 1000.0, size=(n_by_run[run], 2))
    return counts


def test_error_distributions_identical_iterations():
    counts = {}
    for run, subs in [(1, 2), (2, 2), (3, 4), (4, 1)]:
        for sub in range(subs):
            counts[(run, sub)] = np.tile([40.0 + run, 60.0 - sub], (3, 1))
    sig = error_distributions(counts)
    for key in ("sigma12", "sigma23", "sigma13", "delta", "wlgi_delta",
                "nsit12_delta", "nsit23_delta", "nsit13_delta"):
        assert sig[key] == pytest.approx(0.0, abs=1e-12)


def test_cross_pairing_sigma_matches_oracle():
    rng = np.random.default_rng(29)
    counts = random_counts(rng, {1: 6, 2: 5, 3: 3, 4: 4})
    sig = error_distributions(counts)

    def corr(p):
        return p[(+1, +1)] - p[(+1, -1)] - p[(-1, +1)] + p[(-1, -1)]

    expected23 = oracles.exhaustive_cross_sigma(counts[(1, 0)], counts[(1, 1)], corr)
    expected13 = oracles.exhaustive_cross_sigma(counts[(2, 0)], counts[(2, 1)], corr)
    assert sig["sigma23"] == pytest.approx(expected23, rel=1e-12)
    assert sig["sigma13"] == pytest.approx(expected13, rel=1e-12)
    expected_wlgi23 = oracles.exhaustive_cross_sigma(
        counts[(1, 0)], counts[(1, 1)], lambda p: p[(-1, +1)]
    )
    assert sig["wlgi_sigma23"] == pytest.approx(expected_wlgi23, rel=1e-12)


def test_four_way_sigma_matches_oracle_exhaustively():
    rng = np.random.default_rng(31)
    counts = random_counts(rng, {1: 3, 2: 3, 3: 5, 4: 3})
    sig = error_distributions(counts, exhaustive_limit=20)

    def corr(p12):
        return p12[(+1, +1)] - p12[(+1, -1)] - p12[(-1, +1)] + p12[(-1, -1)]

    cells3 = [counts[(3, sub)] for sub in range(4)]
    assert sig["sigma12"] == pytest.approx(
        oracles.exhaustive_four_way_sigma(cells3, corr), rel=1e-12
    )
    assert sig["wlgi_sigma12"] == pytest.approx(
        oracles.exhaustive_four_way_sigma(cells3, lambda p: p[(-1, +1)]), rel=1e-12
    )


def test_sampled_four_way_matches_exhaustive():
    rng = np.random.default_rng(37)
    counts = random_counts(rng, {1: 3, 2: 3, 3: 12, 4: 3})
    exact = error_distributions(counts, exhaustive_limit=20)
    sampled = error_distributions(
        counts, exhaustive_limit=4, n_samples=400_000, seed=1
    )
    assert sampled["sigma12"] == pytest.approx(exact["sigma12"], rel=0.03)
    assert sampled["wlgi_sigma12"] == pytest.approx(exact["wlgi_sigma12"], rel=0.03)


def test_sampled_pairing_matches_exhaustive():
    rng = np.random.default_rng(41)
    counts = random_counts(rng, {1: 40, 2: 40, 3: 3, 4: 3})
    exact = error_distributions(counts)
    sampled = error_distributions(counts, pair_samples=100_000, seed=2)
    assert sampled["sigma13"] == pytest.approx(exact["sigma13"], rel=0.03)
    assert sampled["sigma23"] == pytest.approx(exact["sigma23"], rel=0.03)


def test_error_distributions_requires_two_iterations():
    rng = np.random.default_rng(43)
    counts = random_counts(rng, {1: 1, 2: 3, 3: 3, 4: 3})
    with pytest.raises(ValueError, match="fewer than 2"):
        error_distributions(counts)


def test_delta_is_sum_of_sigmas():
    rng = np.random.default_rng(47)
    counts = random_counts(rng, {1: 4, 2: 4, 3: 4, 4: 4})
    sig = error_distributions(counts)
    assert sig["delta"] == pytest.approx(
        sig["sigma12"] + sig["sigma23"] + sig["sigma13"], rel=1e-12
    )
    assert sig["wlgi_delta"] == pytest.approx(
        sig["wlgi_sigma12"] + sig["wlgi_sigma23"] + sig["wlgi_sigma13"], rel=1e-12
    )


# ---------------------------------------------------------------------------
# bootstrap


def test_bootstrap_constant_samples():
    result = bootstrap_sdm([5.0] * 200, I=150, K=1000)
    assert result.sd == 0.0
    assert result.sd_over_mean == 0.0
    assert result.mean == 5.0
    assert result.ratio_defined


def test_bootstrap_zero_mean_flag():
    result = bootstrap_sdm([0.0] * 200, I=150, K=100)
    assert result.sd == 0.0
    assert result.sd_over_mean is None
    assert not result.ratio_defined


def test_bootstrap_clt_scaling():
    rng = np.random.default_rng(53)
    samples = rng.normal(10.0, 2.0, size=5000)
    result = bootstrap_sdm(samples, I=100, K=20_000, seed=3)
    expected = samples.std(ddof=0) / math.sqrt(100)
    assert result.sd == pytest.approx(expected, rel=0.05)
    assert result.mean == pytest.approx(10.0, abs=0.1)


def test_bootstrap_determinism_and_validation():
    samples = list(range(200))
    first = bootstrap_sdm(samples, I=50, K=500, seed=4)
    second = bootstrap_sdm(samples, I=50, K=500, seed=4)
    assert dataclasses.asdict(first) == dataclasses.asdict(second)
    with pytest.raises(ValueError):
        bootstrap_sdm(samples, I=201, K=10)
    with pytest.raises(ValueError):
        bootstrap_sdm(samples, I=10, K=0)


# ---------------------------------------------------------------------------
# end-to-end


def test_analyze_dataset_deterministic_and_bounded():
    dataset = small_quiet_dataset()
    first = analyze_dataset(dataset, n_samples=50_000)
    second = analyze_dataset(dataset, n_samples=50_000)
    assert first.to_dict() == second.to_dict()
    assert first.lgi[1] is not None and first.lgi[1] >= 0.0
    assert first.lgi[1] == pytest.approx(
        first.correlations["t1t2"][1]
        + first.correlations["t2t3"][1]
        + first.correlations["t1t3"][1],
        rel=1e-12,
    )
    assert first.provenance["iterations"] == {"1": 2, "2": 3, "3": 2, "4": 3}


def test_high_statistics_run_matches_circuit_prediction():
    params = SetupParams(alpha_sq=0.5, t_ratios=NOMINAL_PARAMS.t_ratios, visibility=1.0)
    src = SourceConfig(pair_rate=1e5, seed=59, **QUIET)
    dataset = run_protocol(
        src, params, iterations={"interference": 6, "non_interference": 4}
    )
    report = analyze_dataset(dataset, n_samples=100_000)
    delta = report.lgi[1]
    assert abs(report.lgi[0] - qm_lgi(params)) < 3.0 * delta
    nsit = qm_nsit(params)
    assert report.nsit12[0] < 0.01
    assert report.nsit23[0] < 0.01 + nsit.nsit23
    assert report.nsit13[0] < 0.01


def test_per_iteration_values_shapes():
    rng = np.random.default_rng(61)
    counts = random_counts(rng, {1: 4, 2: 6, 3: 4, 4: 6})
    values = per_iteration_values(counts)
    assert values["c23"].shape == (4,)
    assert values["c13"].shape == (6,)
    assert values["c12"].shape == (4,)
    assert values["p3"].shape == (6,)
    assert values["lgi"].shape == (4,)
    assert np.allclose(
        values["lgi"], values["c12"] + values["c23"] - values["c13"][:4]
    )


def test_analyze_counts_fixture_has_no_deltas():
    report = analyze_counts(load_run_counts_csv(representative_counts_path()))
    for pair in (report.lgi, report.wlgi, report.nsit12, report.nsit23, report.nsit13):
        assert pair[1] is None
    payload = report.to_dict()
    assert payload["lgi"]["delta"] is None
    assert payload["provenance"]["iterations"]["1"] == 1
