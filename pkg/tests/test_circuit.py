import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macroreal.circuit import (
    BlockerConfig,
    IDEAL_PARAMS,
    NOMINAL_PARAMS,
    RUN_CONFIGS,
    SetupParams,
    Tolerances,
    UndefinedProbabilityError,
    arm_branch_weights,
    correlation,
    detection_probs,
    generic_lgi,
    generic_wlgi,
    ideal_maxima,
    joint_probs_one_time,
    joint_probs_three_time,
    joint_probs_two_time,
    lgi_closed_form,
    nsit23_closed_form,
    qm_lgi,
    qm_nsit,
    qm_range,
    qm_wlgi,
    raw_weights,
    run_total_closed_form,
    wlgi_closed_form,
)

from oracles import transfer_matrix_probs

ALL_CONFIGS = [cfg for run in RUN_CONFIGS.values() for cfg in run]

params_st = st.builds(
    SetupParams,
    alpha_sq=st.floats(0.05, 0.95),
    t_ratios=st.tuples(
        st.floats(0.05, 0.95),
        st.floats(0.05, 0.95),
        st.floats(0.05, 0.95),
        st.floats(0.05, 0.95),
    ),
    visibility=st.floats(-1.0, 1.0),
)


@given(params=params_st)
@settings(max_examples=50, deadline=None)
def test_detection_probs_sum_to_one(params):
    for cfg in ALL_CONFIGS:
        p = detection_probs(params, cfg)
        assert abs(p.p_plus + p.p_minus + p.p_lost - 1.0) < 1e-12
        for x in p:
            assert -1e-12 <= x <= 1.0 + 1e-12


@given(params=params_st)
@settings(max_examples=50, deadline=None)
def test_detection_probs_match_transfer_matrix_oracle(params):
    for cfg in ALL_CONFIGS:
        got = detection_probs(params, cfg)
        want = transfer_matrix_probs(params, cfg)
        assert got.p_plus == pytest.approx(want[0], abs=1e-12)
        assert got.p_minus == pytest.approx(want[1], abs=1e-12)
        assert got.p_lost == pytest.approx(want[2], abs=1e-12)


def test_blocked_arm_is_fully_lost():
    w = arm_branch_weights(NOMINAL_PARAMS, BlockerConfig("plus", "none"), +1)
    assert w == (0.0, 0.0, 1.0)
    w = arm_branch_weights(NOMINAL_PARAMS, BlockerConfig("minus", "plus"), -1)
    assert w == (0.0, 0.0, 1.0)


def test_inner_blocker_plus_ratio_is_t2():
    # With the inner -1 arm blocked, the photon reaches the +1 detector by
    # transmission at port 2, so the detected-plus ratio equals T2.
    p = detection_probs(IDEAL_PARAMS, BlockerConfig("minus", "minus"))
    assert p.p_plus / (p.p_plus + p.p_minus) == pytest.approx(0.75, abs=1e-12)


@given(params=params_st)
@settings(max_examples=50, deadline=None)
def test_detected_weights_conserve_in_blocked_runs(params):
    # Every photon is detected in exactly one sub-run of runs 1 and 3.
    for run in (1, 3):
        detected = sum(
            raw_weights(params, cfg).w_plus + raw_weights(params, cfg).w_minus
            for cfg in RUN_CONFIGS[run]
        )
        assert detected == pytest.approx(1.0, abs=1e-12)


@given(params=params_st)
@settings(max_examples=50, deadline=None)
def test_interference_run_total_matches_closed_form(params):
    d = run_total_closed_form(params)
    for run in (2, 4):
        detected = sum(
            raw_weights(params, cfg).w_plus + raw_weights(params, cfg).w_minus
            for cfg in RUN_CONFIGS[run]
        )
        assert detected == pytest.approx(d, abs=1e-12)


def test_interference_run_total_is_unity_without_interference():
    params = SetupParams(0.37, (0.8, 0.71, 0.66, 0.9), visibility=0.0)
    assert run_total_closed_form(params) == pytest.approx(1.0, abs=1e-15)
    detected = sum(
        raw_weights(params, cfg).w_plus + raw_weights(params, cfg).w_minus
        for cfg in RUN_CONFIGS[2]
    )
    assert detected == pytest.approx(1.0, abs=1e-12)


def test_fully_destructive_configuration_raises():
    params = SetupParams(1.0, (0.5, 0.0, 1.0, 0.5), visibility=-1.0)
    with pytest.raises(UndefinedProbabilityError):
        joint_probs_one_time(params)
    with pytest.raises(UndefinedProbabilityError):
        detection_probs(params, BlockerConfig("none", "none"))


def test_tables_are_normalized_and_complete():
    for table, n in (
        (joint_probs_one_time(NOMINAL_PARAMS), 1),
        (joint_probs_two_time(NOMINAL_PARAMS, ("t2", "t3")), 2),
        (joint_probs_two_time(NOMINAL_PARAMS, ("t1", "t3")), 2),
        (joint_probs_two_time(NOMINAL_PARAMS, ("t1", "t2")), 2),
        (joint_probs_three_time(NOMINAL_PARAMS), 3),
    ):
        assert set(table.entries) == set(itertools.product((+1, -1), repeat=n))
        assert table.total() == pytest.approx(1.0, abs=1e-12)
        assert all(p >= 0.0 for p in table.entries.values())


def test_marginalized_table_matches_direct_sums_exactly():
    three = joint_probs_three_time(NOMINAL_PARAMS)
    two = three.marginalize_last()
    for key in itertools.product((+1, -1), repeat=2):
        assert two.entries[key] == three.entries[key + (+1,)] + three.entries[key + (-1,)]
    assert two.total() == pytest.approx(three.total(), abs=1e-15)


@given(params=params_st)
@settings(max_examples=30, deadline=None)
def test_inequality_values_consistent_with_tables(params):
    p12 = joint_probs_two_time(params, ("t1", "t2"))
    p23 = joint_probs_two_time(params, ("t2", "t3"))
    p13 = joint_probs_two_time(params, ("t1", "t3"))
    p3 = joint_probs_one_time(params)
    lgi = correlation(p12) + correlation(p23) - correlation(p13)
    assert qm_lgi(params) == pytest.approx(lgi, abs=1e-9)
    wlgi = p13.entries[(-1, +1)] - p12.entries[(-1, +1)] - p23.entries[(-1, +1)]
    assert qm_wlgi(params) == pytest.approx(wlgi, abs=1e-9)
    nsit = qm_nsit(params)
    nsit23 = abs(p3.entries[(+1,)] - p23.entries[(+1, +1)] - p23.entries[(-1, +1)])
    assert nsit.nsit23 == pytest.approx(nsit23, abs=1e-9)


def test_ideal_circuit_reaches_textbook_values():
    assert qm_lgi(IDEAL_PARAMS) == pytest.approx(1.5, abs=1e-12)
    assert qm_wlgi(IDEAL_PARAMS) == pytest.approx(0.125, abs=1e-12)
    nsit = qm_nsit(IDEAL_PARAMS)
    assert max(abs(x) for x in nsit) < 1e-12


def test_nominal_circuit_values():
    assert qm_lgi(NOMINAL_PARAMS) == pytest.approx(1.47, abs=0.005)
    assert qm_wlgi(NOMINAL_PARAMS) == pytest.approx(0.11, abs=0.005)
    nsit = qm_nsit(NOMINAL_PARAMS)
    assert nsit.nsit23 == pytest.approx(0.006, abs=0.005)
    assert nsit.nsit12 < 1e-12
    assert nsit.nsit13 < 1e-12


@given(params=params_st)
@settings(max_examples=50, deadline=None)
def test_nsit12_and_nsit13_vanish_identically(params):
    nsit = qm_nsit(params)
    assert nsit.nsit12 < 1e-9
    assert nsit.nsit13 < 1e-9


def test_free_run_plus_marginal_gap_at_nominal():
    # The inner-blocker run and the free run disagree about P(q3=+1) by
    # about 0.006 at the nominal port ratios.
    p_plus = detection_probs(NOMINAL_PARAMS, BlockerConfig("none", "none")).p_plus
    p23 = joint_probs_two_time(NOMINAL_PARAMS, ("t2", "t3")).entries
    gap = abs(p_plus - (p23[(+1, +1)] + p23[(-1, +1)]))
    assert gap == pytest.approx(0.006, abs=5e-4)


def test_closed_forms_match_assembly_when_total_is_unity():
    # T2 == T3 makes the interference-run total exactly one, where the
    # unit-total closed forms coincide with the normalized assembly.
    for params in (
        SetupParams(0.42, (0.8, 0.77, 0.77, 0.6), visibility=0.9),
        SetupParams(0.61, (0.55, 0.7, 0.9, 0.85), visibility=0.0),
    ):
        assert run_total_closed_form(params) == pytest.approx(1.0, abs=1e-12)
        assert qm_lgi(params) == pytest.approx(lgi_closed_form(params), abs=1e-12)
        assert qm_wlgi(params) == pytest.approx(wlgi_closed_form(params), abs=1e-12)
        assert qm_nsit(params).nsit23 == pytest.approx(
            nsit23_closed_form(params), abs=1e-12
        )


def test_closed_forms_near_assembly_at_nominal():
    assert lgi_closed_form(NOMINAL_PARAMS) == pytest.approx(qm_lgi(NOMINAL_PARAMS), abs=5e-3)
    assert wlgi_closed_form(NOMINAL_PARAMS) == pytest.approx(qm_wlgi(NOMINAL_PARAMS), abs=5e-3)
    assert nsit23_closed_form(NOMINAL_PARAMS) == pytest.approx(
        qm_nsit(NOMINAL_PARAMS).nsit23, abs=5e-3
    )


def test_closed_forms_affine_in_visibility():
    base = SetupParams(0.44, (0.82, 0.7, 0.76, 0.88))
    for fn in (lgi_closed_form, wlgi_closed_form):
        vals = [
            fn(SetupParams(base.alpha_sq, base.t_ratios, visibility=v))
            for v in (-0.8, 0.05, 0.9)
        ]
        # Three collinear points: the middle value interpolates the ends.
        lam = (0.05 - (-0.8)) / (0.9 - (-0.8))
        assert vals[1] == pytest.approx((1 - lam) * vals[0] + lam * vals[2], abs=1e-12)


def test_assembled_values_monotone_in_visibility_at_nominal():
    vs = np.linspace(0.0, 1.0, 9)
    lgis = [
        qm_lgi(SetupParams(0.5, NOMINAL_PARAMS.t_ratios, visibility=v)) for v in vs
    ]
    wlgis = [
        qm_wlgi(SetupParams(0.5, NOMINAL_PARAMS.t_ratios, visibility=v)) for v in vs
    ]
    assert all(b > a for a, b in zip(lgis, lgis[1:]))
    assert all(b > a for a, b in zip(wlgis, wlgis[1:]))


def test_qm_range_degenerate_box_recovers_point_values():
    tol = Tolerances(hwp_angle_deg=0.0, t_delta=0.0, v_range=None, grid_points=1)
    ranges = qm_range(NOMINAL_PARAMS, tol)
    assert ranges["lgi"][0] == pytest.approx(qm_lgi(NOMINAL_PARAMS), abs=1e-12)
    assert ranges["lgi"][1] == pytest.approx(qm_lgi(NOMINAL_PARAMS), abs=1e-12)
    assert ranges["wlgi"][0] == pytest.approx(qm_wlgi(NOMINAL_PARAMS), abs=1e-12)
    assert ranges["nsit23"][1] == pytest.approx(qm_nsit(NOMINAL_PARAMS).nsit23, abs=1e-12)


def test_qm_range_contains_nominal_point():
    ranges = qm_range(NOMINAL_PARAMS, Tolerances(grid_points=5))
    assert ranges["lgi"][0] <= qm_lgi(NOMINAL_PARAMS) <= ranges["lgi"][1]
    assert ranges["wlgi"][0] <= qm_wlgi(NOMINAL_PARAMS) <= ranges["wlgi"][1]
    nsit23 = qm_nsit(NOMINAL_PARAMS).nsit23
    assert ranges["nsit23"][0] <= nsit23 <= ranges["nsit23"][1]


def test_qm_range_nested_boxes_nest_intervals():
    small = qm_range(NOMINAL_PARAMS, Tolerances(hwp_angle_deg=0.5, t_delta=0.01, grid_points=5))
    large = qm_range(NOMINAL_PARAMS, Tolerances(hwp_angle_deg=1.0, t_delta=0.02, grid_points=5))
    for name in ("lgi", "wlgi", "nsit23"):
        assert large[name][0] <= small[name][0] + 1e-12
        assert small[name][1] <= large[name][1] + 1e-12


def test_generic_circuit_formulas():
    assert generic_lgi(0.0, 0.75, 0.75) == pytest.approx(1.5, abs=1e-15)
    assert generic_lgi(math.pi / 2, 0.5, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert generic_wlgi(math.pi, 0.0, 0.1524, 0.6952, 0.4833) > 0.4


def test_ideal_maxima_finds_global_optima():
    res = ideal_maxima()
    assert res["lgi_max"] == pytest.approx(1.5, abs=1e-7)
    assert res["lgi_argmax"]["t2"] == pytest.approx(0.75, abs=1e-3)
    assert res["lgi_argmax"]["t3"] == pytest.approx(0.75, abs=1e-3)
    assert math.cos(res["lgi_argmax"]["theta2"]) == pytest.approx(1.0, abs=1e-6)
    assert res["wlgi_max"] == pytest.approx(0.403448, abs=1e-4)
    assert math.cos(res["wlgi_argmax"]["theta1"]) == pytest.approx(-1.0, abs=1e-6)
    assert math.cos(res["wlgi_argmax"]["theta2"]) == pytest.approx(1.0, abs=1e-6)
    assert res["wlgi_argmax"]["t1"] == pytest.approx(0.1524, abs=2e-3)
    assert res["wlgi_argmax"]["t2"] == pytest.approx(0.6952, abs=2e-3)
    assert res["wlgi_argmax"]["t3"] == pytest.approx(0.4833, abs=2e-3)


def test_invalid_inputs_raise():
    with pytest.raises(ValueError):
        SetupParams(alpha_sq=1.2)
    with pytest.raises(ValueError):
        SetupParams(t_ratios=(0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        SetupParams(t_ratios=(0.5, 0.5, 0.5, 1.4))
    with pytest.raises(ValueError):
        SetupParams(visibility=1.5)
    with pytest.raises(ValueError):
        BlockerConfig("left", "none")
    with pytest.raises(ValueError):
        Tolerances(t_delta=-0.1)
    with pytest.raises(ValueError):
        Tolerances(v_range=(0.9, 0.2))
    with pytest.raises(ValueError):
        joint_probs_two_time(NOMINAL_PARAMS, ("t2", "t1"))
    with pytest.raises(ValueError):
        correlation(joint_probs_one_time(NOMINAL_PARAMS))
    with pytest.raises(ValueError):
        arm_branch_weights(NOMINAL_PARAMS, BlockerConfig(), 2)
