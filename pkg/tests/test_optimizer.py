import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from layered_anc import (LayeredNetwork, ScalingVector, SolverConfig, load_network,
                         brute_force_optimize, check_feasibility, diamond,
                         fully_connected, layer_subproblem_objective, linear_chain,
                         optimize_layer, optimize_network, random_network,
                         snr_destination, stationarity_check)
from layered_anc.optimizer import (BruteForceSizeError, DiamondGains,
                                   InfeasibleScalingError, StepSizeError,
                                   diamond_analysis, numeric_hessian, signed_search,
                                   snr_function)
from layered_anc.propagation import beta_max, full_power_beta

FAST = SolverConfig(restarts=6, grid_points_per_dim=41)


def diamond_optimum(net):
    """Best second scaling with the first at its bound, by calculus."""
    dg = DiamondGains.of(net)
    w, b = dg.weights, beta_max(net, [], 1)[0]
    d1, d2 = dg.h_1t ** 2, dg.h_2t ** 2
    return np.array([b, w[1] * (1 + d1 * b * b) / (w[0] * b * d2)])


@pytest.mark.parametrize("kw", [dict(restarts=0), dict(grid_points_per_dim=1),
                                dict(tol=0.0), dict(max_iter=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_signed_search_only_with_negative_gains(diamond_net):
    assert not signed_search(diamond_net, SolverConfig())
    neg = diamond(h_s2=-0.1)
    assert signed_search(neg, SolverConfig())
    assert not signed_search(neg, SolverConfig(allow_negative_beta=False))


def test_objective_last_layer_is_one_plus_snr(rng):
    net = random_network(rng, (2, 2))
    b1 = beta_max(net, [], 1) * 0.7
    b2 = beta_max(net, [b1], 2) * np.array([0.3, -0.9])
    obj = layer_subproblem_objective(net, [b1], b2)
    snr = snr_destination(net, ScalingVector.from_arrays([b1, b2]))
    assert obj == pytest.approx(1 + snr, rel=1e-12)


def test_objective_zero_layer_is_one(rng):
    net = random_network(rng, (3, 2))
    assert layer_subproblem_objective(net, [], np.zeros(3)) == 1.0


def test_objective_symmetric_ecgal_layer():
    net = fully_connected((2, 2), 1.0, 10.0, 10.0, 1.0)
    b = beta_max(net, [], 1)
    obj = layer_subproblem_objective(net, [], b)
    from layered_anc.optimizer import _prefix_state
    from layered_anc.propagation import step
    snr = step(net, _prefix_state(net, []), b[None, :]).snr(net)[0]
    assert snr[0] == snr[1]
    assert obj == pytest.approx((1 + snr[0]) ** 2, rel=1e-13)


def test_objective_rejects_infeasible(diamond_net):
    b = beta_max(diamond_net, [], 1)
    with pytest.raises(InfeasibleScalingError, match=r"\(1, 2\)"):
        layer_subproblem_objective(diamond_net, [], [b[0], 1.01 * b[1]])


def test_layer_solver_on_chain(rng):
    net = linear_chain([0.8, 1.5, 0.6], 3.0, [2.0, 5.0], 0.5)
    sol = optimize_layer(net, [], 1, FAST)
    assert sol.beta[0] == pytest.approx(beta_max(net, [], 1)[0], rel=1e-14)
    assert sol.diagnostics.at_bound == (True,)


def test_layer_solver_ecgal_corner():
    net = fully_connected((2, 2), 0.7, 4.0, 6.0, 1.0)
    sol = optimize_layer(net, [], 1, FAST)
    np.testing.assert_allclose(sol.beta, beta_max(net, [], 1), rtol=1e-14)


def test_layer_solver_wrong_prefix():
    with pytest.raises(ValueError):
        optimize_layer(diamond(), [], 2)


def test_diamond_optimum_by_calculus(diamond_net):
    res = optimize_network(diamond_net)
    np.testing.assert_allclose(res.beta_opt.flat(), diamond_optimum(diamond_net), rtol=1e-5)
    assert res.beta_opt[(1, 2)] < 0.05 * beta_max(diamond_net, [], 1)[1]


@pytest.mark.parametrize("gains", [(1.0, 0.3, 0.5, 2.0), (0.4, 1.0, 1.0, 0.2),
                                   (2.0, 0.05, 0.8, 1.0)])
def test_general_diamond_optimum(gains):
    net = diamond(*gains, source_power=5.0, relay_powers=(3.0, 8.0), noise_variance=0.5)
    res = optimize_network(net)
    guess = diamond_optimum(net)
    bm = beta_max(net, [], 1)
    if guess[1] <= bm[1]:
        best = snr_destination(net, ScalingVector.from_arrays([guess]))
        assert res.snr >= best * (1 - 1e-10)


def test_optimize_network_feasible_and_deterministic(rng):
    net = random_network(rng, (2, 3), gain_range=(-2, 2))
    a = optimize_network(net, FAST)
    b = optimize_network(net, FAST)
    assert check_feasibility(net, a.beta_opt).feasible
    assert a.beta_opt == b.beta_opt and a.snr == b.snr
    assert a.snr == snr_destination(net, a.beta_opt)
    assert [d.layer for d in a.per_layer_diagnostics] == [1, 2]


def test_chain_returns_beta_max(rng):
    for _ in range(5):
        L = int(rng.integers(1, 6))
        net = linear_chain(rng.uniform(0.2, 2, L + 1), rng.uniform(0.5, 10),
                           rng.uniform(0.5, 10, L), rng.uniform(0.1, 2))
        res = optimize_network(net, FAST)
        np.testing.assert_allclose(res.beta_opt.flat(), full_power_beta(net).flat(),
                                   rtol=1e-12)


def test_result_serialization(diamond_net):
    res = optimize_network(diamond_net, FAST)
    d = res.to_dict()
    assert d["method"] == "layered" and len(d["beta_opt"][0]) == 2
    assert [r["node"] for r in res.csv_rows()] == [1, 2]


def test_brute_size_guard():
    with pytest.raises(BruteForceSizeError):
        brute_force_optimize(fully_connected((4, 3), 1.0, 1.0, 1.0, 1.0))


def test_brute_single_relay_hits_bound():
    net = linear_chain([0.7, 1.1], 2.0, [3.0], 0.4)
    res = brute_force_optimize(net, SolverConfig(grid_points_per_dim=11))
    assert res.beta_opt[(1, 1)] == pytest.approx(beta_max(net, [], 1)[0], rel=1e-14)
    assert res.method == "brute"


@given(st.integers(0, 2 ** 32 - 1),
       st.sampled_from([(2,), (3,), (1, 2), (2, 1), (1, 1, 2), (2, 2)]),
       st.booleans())
@settings(max_examples=25)
def test_brute_last_axis_reduction_is_exact(seed, layer_sizes, signed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, layer_sizes,
                         gain_range=(-2, 2) if signed else (0.1, 2))
    cfg = SolverConfig(grid_points_per_dim=7)
    fast = brute_force_optimize(net, cfg)
    slow = brute_force_optimize(net, cfg, reduce_last=False)
    assert fast.snr == pytest.approx(slow.snr, rel=1e-12)
    np.testing.assert_allclose(fast.beta_opt.flat(), slow.beta_opt.flat(), rtol=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.booleans())
@settings(max_examples=25)
def test_single_layer_brute_never_beats_layered(seed, n, signed):
    # with one relay layer the layered solver is a global optimizer
    rng = np.random.default_rng(seed)
    net = random_network(rng, (n,), gain_range=(-2, 2) if signed else (0.1, 2))
    cfg = SolverConfig(grid_points_per_dim=15 if n > 2 else 41)
    assert brute_force_optimize(net, cfg).snr <= optimize_network(net, cfg).snr * (1 + 1e-9)


def test_monotone_when_last_layer_has_one_relay(rng):
    for _ in range(20):
        net = random_network(rng, (2, 1))
        b1 = beta_max(net, [], 1) * rng.uniform(0, 1, 2)
        f = snr_function(net)
        vals = [f(np.concatenate([b1, [t]]))
                for t in np.linspace(0, beta_max(net, [b1], 2)[0], 25)]
        assert np.all(np.diff(vals) >= -1e-12 * max(vals))


def test_not_monotone_in_general(diamond_net):
    # positive gains, yet the second relay's best scaling is interior
    f = snr_function(diamond_net)
    b1 = beta_max(diamond_net, [], 1)
    assert f([b1[0], 0.2]) > f([b1[0], b1[1]])


def test_stationarity_on_null_line(diamond_net):
    dg = DiamondGains.of(diamond_net)
    p = dg.null_line_point(1.0)
    np.testing.assert_allclose(p, [-0.1, 1.0])
    rep = stationarity_check(diamond_net, p)
    assert rep.snr == 0.0
    assert rep.gradient_norm < 1e-6
    assert abs(rep.determinant) < 1e-6 * np.abs(rep.hessian).max() ** 2
    assert rep.hessian[0, 0] > 0
    assert rep.classification == "degenerate"


def test_stationarity_off_line_is_nonstationary(diamond_net):
    rep = stationarity_check(diamond_net, [0.5, 1.5])
    assert rep.classification == "nonstationary" and rep.gradient_norm > 1


def test_hessian_determinant_next_to_null_line(diamond_net):
    """Leading-order det(H) just off the line is -4 K^2 s^2 (d1 w2^2 + d2 w1^2) / q^3."""
    dg = DiamondGains.of(diamond_net)
    K = diamond_net.source_power / diamond_net.noise_variance
    w, d = dg.weights, np.array([dg.h_1t ** 2, dg.h_2t ** 2])
    f = snr_function(diamond_net)
    for b2 in (-3.0, 0.5, 2.0):
        for eps in (2e-3, -2e-3):
            x = dg.null_line_point(b2) + eps * w / (w @ w)
            s, q = w @ x, 1 + d @ x ** 2
            expect = -4 * K ** 2 * s ** 2 * (d[0] * w[1] ** 2 + d[1] * w[0] ** 2) / q ** 3
            det = np.linalg.det(numeric_hessian(f, x, 1e-4))
            assert det < 0
            assert det == pytest.approx(expect, rel=0.05)


def test_stationarity_guards(diamond_net):
    with pytest.raises(ValueError):
        stationarity_check(fully_connected((2, 2), 1.0, 1.0, 1.0, 1.0), np.ones(4))
    with pytest.raises(StepSizeError):
        stationarity_check(diamond_net, [1e300, 1.0], step_size=1e-20)


def test_diamond_analysis(diamond_net):
    a = diamond_analysis(diamond_net)
    assert a.slope_sign_ok
    assert a.interior_roots == []
    assert a.min_residual > 0.5
    assert all(r.gradient_norm < 1e-6 and r.snr == 0.0 for r in a.line_points)


@given(st.floats(0.1, 3), st.floats(0.1, 3), st.floats(0.1, 3), st.floats(0.1, 3),
       st.floats(-5, 5), st.floats(-5, 5))
def test_no_interior_critical_point(hs1, hs2, h1t, h2t, b1, b2):
    # any root of the interior conditions would need q = 1 + q
    dg = DiamondGains(hs1, hs2, h1t, h2t)
    x = np.array([b1, b2])
    w, d = dg.weights, np.array([h1t ** 2, h2t ** 2])
    r = dg.critical_residuals(x)
    # projecting r on the direction beta removes the (w.beta) term
    assert x @ r == pytest.approx((w @ x) * (1 + d @ x ** 2) - (w @ x) * (d @ x ** 2),
                                  rel=1e-9, abs=1e-9)
    assert (x @ r) == pytest.approx(w @ x, rel=1e-9, abs=1e-9)


def test_recorded_decomposition_counterexample():
    # layer 1 maximizes its own objective, yet a lower-objective choice wins overall
    from pathlib import Path
    net, _ = load_network(Path(__file__).parent / "data" / "decomposition_counterexample.json")
    layered = optimize_network(net)
    brute = brute_force_optimize(net, SolverConfig(grid_points_per_dim=41))
    assert brute.snr > 1.09 * layered.snr
    b1 = brute.beta_opt.layer(1)
    assert (layer_subproblem_objective(net, [], layered.beta_opt.layer(1))
            > layer_subproblem_objective(net, [], b1))
    assert check_feasibility(net, brute.beta_opt).feasible
