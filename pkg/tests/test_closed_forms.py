import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from layered_anc import (ScalingVector, SolverConfig, brute_force_optimize,
                         enumerate_paths, full_power_beta, optimize_network,
                         snr_destination)
from layered_anc import closed_forms as cf
from layered_anc.propagation import beta_max

pos = st.floats(0.05, 20.0)


def ecgal_beta(spec, betas=None):
    betas = cf.ecgal_symmetric_beta_max(spec) if betas is None else betas
    return ScalingVector.from_arrays(np.full(spec.N, b) for b in betas)


def test_chain_beta_max_l1():
    spec = cf.LinearChainSpec((1.0, 1.0), 1.0, (1.0,), 1.0)
    assert cf.linear_beta_max_recursion(spec)[0] ** 2 == pytest.approx(0.5, rel=1e-15)


@given(st.integers(1, 8), pos, pos, pos)
def test_equal_chain_beta_max_constant(L, h, P, s2):
    b = cf.linear_beta_max_recursion(cf.LinearChainSpec.equal(L, h, P, s2))
    np.testing.assert_allclose(b ** 2, P / (h * h * P + s2), rtol=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 7))
def test_chain_matches_propagation(seed, L):
    rng = np.random.default_rng(seed)
    spec = cf.LinearChainSpec(rng.uniform(0.1, 3, L + 1), rng.uniform(0.1, 10),
                              rng.uniform(0.1, 10, L), rng.uniform(0.05, 3))
    net = spec.network()
    np.testing.assert_allclose(cf.linear_beta_max_recursion(spec),
                               full_power_beta(net).flat(), rtol=1e-12)
    beta = rng.uniform(-2, 2, L)
    assert cf.linear_snr(spec, beta, L + 1) == pytest.approx(
        snr_destination(net, ScalingVector.from_arrays([[b] for b in beta])), rel=1e-12)


def test_chain_snr_examples():
    spec = cf.LinearChainSpec((1.0, 1.0), 1.0, (1.0,), 1.0)
    bmax = cf.linear_beta_max_recursion(spec)
    assert cf.linear_snr(spec, bmax, 2) == pytest.approx(1 / 3, rel=1e-15)
    spec = cf.LinearChainSpec((0.5, 2.0, 1.0), 3.0, (1.0, 1.0), 0.2)
    assert cf.linear_snr(spec, [1.0, 1.0], 1) == pytest.approx(3.0 * 0.25 / 0.2)
    with pytest.raises(ValueError):
        cf.linear_snr(spec, [1.0, 1.0], 4)


def test_chain_spec_validation():
    with pytest.raises(ValueError):
        cf.LinearChainSpec((1.0,), 1.0, (), 1.0)
    with pytest.raises(ValueError):
        cf.LinearChainSpec((1.0, 1.0), 1.0, (0.0,), 1.0)


def test_equal_closed_form_l1():
    assert cf.linear_equal_closed_form(1, 1.0, 1.0, 1.0) == pytest.approx(1 / 3, rel=1e-15)
    # one relay: the usual two-hop result gamma^2 / (1 + 2 gamma)
    for g in (0.1, 2.0, 50.0):
        assert cf.linear_equal_closed_form(1, 1.0, g, 1.0) == pytest.approx(
            g * g / (1 + 2 * g), rel=1e-13)


@given(st.integers(1, 40), pos, pos, pos)
def test_equal_closed_form_matches_recursion(L, h, P, s2):
    spec = cf.LinearChainSpec.equal(L, h, P, s2)
    exact = cf.linear_snr(spec, cf.linear_beta_max_recursion(spec), L + 1)
    assert cf.linear_equal_closed_form(L, h, P, s2) == pytest.approx(exact, rel=1e-12)


@given(pos, pos, pos)
def test_equal_closed_form_decreasing_in_l(h, P, s2):
    vals = [cf.linear_equal_closed_form(L, h, P, s2) for L in range(1, 30)]
    assert np.all(np.diff(vals) < 0)


def test_unit_ratio_limit():
    # r rounds to 1 when the noise is negligible: the limit branch takes over
    L, g = 4, 1e20
    assert cf.linear_equal_closed_form(L, 1.0, 1.0, 1 / g) == pytest.approx(g / (L + 1))
    near = cf.linear_equal_closed_form(L, 1.0, 1.0, 1e-9)
    assert near == pytest.approx(1e9 / (L + 1), rel=1e-6)


@pytest.mark.parametrize("L", [2, 3, 5])
def test_lemma1_sweep(L):
    spec = cf.LinearChainSpec(np.linspace(0.6, 1.4, L + 1), 4.0, np.linspace(1, 3, L), 0.5)
    net = spec.network()
    prefix = list(full_power_beta(net).arrays()[:L - 2])
    top = beta_max(net, prefix, L - 1)[0]
    snr_l, snr_t = [], []
    for b in np.linspace(0, top, 101):
        pre = prefix + [np.array([b])]
        bl = beta_max(net, pre, L)[0]
        beta = [float(x[0]) for x in pre] + [bl]
        snr_l.append(cf.linear_snr(spec, beta, L))
        snr_t.append(cf.linear_snr(spec, beta, L + 1))
    assert np.argmax(snr_l) == np.argmax(snr_t) == 100


@pytest.mark.parametrize("L", [20, 35, 60])
def test_chain_rate_envelope(L):
    for g in np.logspace(-2, 3, 60):
        snr = cf.linear_equal_closed_form(L, 1.0, g, 1.0)
        R = 0.5 * math.log2(1 + snr)
        assert R <= cf.chain_rate_envelope(L, 1.0, g, 1.0) * 1.05


def test_ecgal_edge_and_path_counts():
    for N, L in [(2, 2), (3, 3), (1, 4)]:
        net = cf.ecgal_build(cf.EcgalSpec(N, L, 1.0, 1.0, 1.0, 1.0))
        assert len(net.gains) == N * N * (L - 1) + 2 * N
        assert len(enumerate_paths(net)) == N ** L


def test_ecgal_n2_l2_is_grid2x2(grid2x2):
    assert cf.ecgal_build(cf.EcgalSpec(2, 2, 1.0, 1.0, 1.0, 1.0)) == grid2x2


@given(st.integers(1, 5), st.integers(1, 5), pos, pos, pos, pos)
def test_ecgal_beta_max_matches_propagation(N, L, h, P, ps, s2):
    spec = cf.EcgalSpec(N, L, h, P, ps, s2)
    bmax = cf.ecgal_symmetric_beta_max(spec)
    full = full_power_beta(cf.ecgal_build(spec))
    for l in range(L):
        np.testing.assert_allclose(full.layer(l + 1), bmax[l], rtol=1e-12)
    assert bmax[0] ** 2 == pytest.approx(P / (h * h * ps + s2), rel=1e-12)


@given(st.integers(1, 6), pos, pos, pos)
def test_ecgal_n1_is_chain(L, h, P, s2):
    spec = cf.EcgalSpec(1, L, h, P, P, s2)
    chain = cf.LinearChainSpec.equal(L, h, P, s2)
    np.testing.assert_allclose(cf.ecgal_symmetric_beta_max(spec),
                               cf.linear_beta_max_recursion(chain), rtol=1e-13)
    a = cf.ecgal_opt_snr(spec)
    assert a == pytest.approx(cf.linear_equal_closed_form(L, h, P, s2), rel=1e-12)
    assert a == pytest.approx(snr_destination(chain.network(), ecgal_beta(spec)), rel=1e-12)


@given(st.integers(1, 5), st.integers(1, 5), pos, pos, pos, pos, st.data())
def test_ecgal_closed_form_any_symmetric_beta(N, L, h, P, ps, s2, data):
    spec = cf.EcgalSpec(N, L, h, P, ps, s2)
    betas = np.array(data.draw(st.lists(st.floats(-2, 2), min_size=L, max_size=L)))
    net = cf.ecgal_build(spec)
    assert cf.ecgal_opt_snr(spec, betas) == pytest.approx(
        snr_destination(net, ecgal_beta(spec, betas)), rel=1e-12, abs=1e-300)


def test_ecgal_brute_oracle():
    spec = cf.EcgalSpec(2, 2, 1.0, 10.0, 10.0, 1.0)
    res = brute_force_optimize(cf.ecgal_build(spec), SolverConfig(grid_points_per_dim=31))
    exact = cf.ecgal_opt_snr(spec)
    assert res.snr <= exact * (1 + 1e-12)
    assert res.snr == pytest.approx(exact, rel=1e-12)


def test_ecgal_optimizer_symmetric():
    spec = cf.EcgalSpec(3, 3, 0.8, 5.0, 2.0, 1.0)
    res = optimize_network(cf.ecgal_build(spec), SolverConfig(restarts=4))
    bmax = cf.ecgal_symmetric_beta_max(spec)
    for l in range(3):
        np.testing.assert_allclose(res.beta_opt.layer(l + 1), bmax[l], rtol=1e-9)


def test_mac_bound_values():
    assert cf.mac_cutset_bound(5, 10) == pytest.approx(0.5 * math.log2(51), rel=1e-15)
    assert cf.mac_cutset_bound(5, 10) == pytest.approx(2.836, abs=1e-3)
    assert cf.mac_cutset_bound(1, 3) == pytest.approx(1.0, rel=1e-15)
    assert cf.mac_cutset_bound(4, 1e-12) < 1e-11


def test_case2_example():
    spec = cf.EcgalSpec.from_x(5, 1, 100.0, 1e9)
    approx = cf.case2_leading_order(spec)
    assert approx == pytest.approx(500 / 1.2, rel=1e-15)
    assert cf.leading_order_deviation(approx, spec) < 0.25


def test_case2_approaches_nx():
    for N in (10, 100, 1000):
        spec = cf.EcgalSpec.from_x(N, 1, 10.0, 1e9)
        assert cf.case2_leading_order(spec) == pytest.approx(N * 10 / (1 + 1 / N))
    assert (cf.case2_leading_order(cf.EcgalSpec.from_x(1000, 1, 10.0, 1.0))
            / (1000 * 10)) > 0.99


def test_no_scheme_beats_first_cut():
    for N, L in [(2, 1), (5, 3), (50, 5)]:
        for ps in (1e-9, 1.0, 1e6):
            spec = cf.EcgalSpec(N, L, 1.0, 1.0, ps, 1.0)
            assert cf.ecgal_opt_snr(spec) <= cf.first_cut_snr_bound(spec) * (1 + 1e-12)


@given(st.integers(1, 6), st.integers(1, 6), st.floats(0.1, 1e4), st.floats(0.1, 1e3))
def test_invariance_at_fixed_x_and_source_snr(N, L, x, snr_s):
    # the closed form depends on (h, P, Ps, s2) only through x and h^2 Ps / s2
    a = cf.ecgal_opt_snr(cf.EcgalSpec(N, L, 1.0, x / N, snr_s, 1.0))
    h, s2 = 2.5, 0.3
    b = cf.ecgal_opt_snr(cf.EcgalSpec(N, L, h, x * s2 / (N * h * h), snr_s * s2 / h ** 2, s2))
    assert b == pytest.approx(a, rel=1e-10)


def test_gap_sweep_shape_and_csv():
    rows = cf.gap_sweep(5, [1, 2], [1.0, 10.0, 100.0])
    assert [(r.L, r.x) for r in rows] == [(l, x) for l in (1, 2) for x in (1.0, 10.0, 100.0)]
    text = cf.gap_csv(rows)
    assert text.splitlines()[0] == "L,x,C_bits,R_bits,gap_bits"
    assert len(text.splitlines()) == 7
    assert all(r.gap >= 0 for r in rows)
    assert cf.gap_csv(rows, "nats").startswith("L,x,C_nats")
