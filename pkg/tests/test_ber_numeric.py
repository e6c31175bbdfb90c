import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from doublegg import ber_numeric as bn
from doublegg.channel import GenGammaParams, DoubleGGParams, preset, special_case
from doublegg.grid import channel_grid, default_panel_width
from doublegg.montecarlo import McSettings, ber_mc
from doublegg.specfun import q_function

from oracles import factor_expectation, lambda_reference

B, C = preset("b"), preset("c")


def near_deterministic(beta=1e5):
    f = GenGammaParams(1.0, beta, 1.0)
    return DoubleGGParams(f, f, 1, 1)


def mc_check(cfg, snr, draws=2_000_000, seed=7):
    r = ber_mc(cfg, [snr], McSettings(draws=draws, seed=seed, streams=4))
    q = bn.ber(cfg, snr)
    assert abs(r.ber[0] - q) < 3 * r.stderr[0], (q, r.ber[0], r.stderr[0])


# -- configuration and plumbing -------------------------------------------------------


def test_link_config_shapes_and_ids():
    cfg = bn.LinkConfig(((B, C), (C, B)))
    assert (cfg.M, cfg.N, cfg.kind) == (2, 2, "MIMO")
    assert bn.LinkConfig.simo([B, B], "egc").config_id == "simo-egc-1x2"
    assert bn.LinkConfig.miso([B, C]).kind == "MISO"
    assert bn.LinkConfig.siso(B, label="ref").config_id == "ref"


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(channels=((B, C), (B,))),
        dict(channels=((B,),), combiner="MRC"),
        dict(channels=((B,),), snr_grid_db=(0.0, 0.0)),
        dict(channels=()),
    ],
)
def test_link_config_validation(kwargs):
    with pytest.raises(ValueError):
        bn.LinkConfig(**kwargs)


def test_link_config_rejects_non_channels():
    with pytest.raises(TypeError):
        bn.LinkConfig((("b",),))


def test_snr_must_be_positive():
    with pytest.raises(ValueError):
        bn.ber_siso(B, 0.0)


def test_curve_csv_round_trip():
    cfg = bn.LinkConfig.simo([B, B], snr_grid_db=(0.0, 7.5, 15.0))
    curve = bn.ber_curve(cfg)
    mcurve = bn.BerCurve([1.0, 2.0], [0.1, 0.05], [1e-3, 2e-3], "montecarlo", "x")
    buf = io.StringIO()
    bn.write_csv([curve, mcurve], buf)
    assert buf.getvalue().splitlines()[0] == "snr_db,ber,ci_halfwidth,method,config_id"
    back = bn.read_csv(io.StringIO(buf.getvalue()))
    assert back == [curve, mcurve]


def test_curve_validation_and_underflow_flag():
    with pytest.raises(ValueError):
        bn.BerCurve([2.0, 1.0], [0.1, 0.2])
    c = bn.BerCurve([1.0, 2.0], [1e-3, 1e-15])
    assert c.underflow.tolist() == [False, True]


def test_conditional_ber_reductions():
    rng = np.random.default_rng(1)
    I = rng.gamma(2.0, 0.5, size=(50, 1, 3))
    s = np.array([3.0, 40.0])
    oc = bn.conditional_ber(bn.LinkConfig(((B, B, B),)), I, s / 3)
    # transmit-sum metric (1/MN) sqrt(snr/2 * sum_n (sum_m I)^2) with M = 1
    manual = q_function(np.sqrt(np.multiply.outer(s / 2, (I[:, 0, :] ** 2).sum(axis=1))) / 3)
    np.testing.assert_allclose(oc, manual, rtol=1e-13)
    two = bn.LinkConfig(((B,), (B,)))
    J = rng.gamma(2.0, 0.5, size=(50, 2, 1))
    expected = q_function(np.multiply.outer(np.sqrt(s) / (2 * math.sqrt(2)), J.sum(axis=(1, 2))))
    np.testing.assert_allclose(bn.conditional_ber(two, J, s), expected, rtol=1e-13)


# -- grids ----------------------------------------------------------------------------


@pytest.mark.parametrize("name", "abcd")
def test_grid_reproduces_normalization_and_moments(name):
    ch = preset(name)
    g = channel_grid(ch)
    k, gs = g.expect(np.ones(g.size))
    assert k == pytest.approx(1.0, abs=1e-12)
    assert abs(k - gs) < 1e-6
    m1, _ = g.expect(g.irradiance)
    from doublegg.channel import moment

    assert m1 == pytest.approx(moment(ch, 1.0), rel=1e-11)
    assert default_panel_width(ch) <= 1.0


# -- SISO -----------------------------------------------------------------------------


@pytest.mark.parametrize("name, db", [("a", 10.0), ("b", 30.0), ("d", 55.0)])
def test_siso_against_nested_quadrature(name, db):
    ch = preset(name)
    s = 10 ** (db / 10)
    ref = factor_expectation(ch, lambda I: q_function(I * math.sqrt(s / 2)))
    assert bn.ber_siso(ch, s) == pytest.approx(ref, rel=1e-8)


def test_siso_low_snr_limit():
    assert bn.ber_siso(B, 1e-10) == pytest.approx(0.5, abs=1e-5)


def test_siso_deterministic_channel_is_awgn():
    # residual spread of I is 2e-8, far below the tolerance
    s = 10.0
    assert bn.ber_siso(near_deterministic(1e8), s) == pytest.approx(q_function(math.sqrt(s / 2)), rel=1e-5)


def test_error_estimate_bounds_change_under_refinement():
    g1 = channel_grid(B)
    g2 = channel_grid(B, g1.panel_width / 2)
    s = 1e4
    v1 = g1.mass @ q_function(g1.irradiance * math.sqrt(s / 2))
    v2 = g2.mass @ q_function(g2.irradiance * math.sqrt(s / 2))
    _, err = bn.ber_siso(B, s, with_error=True)
    assert abs(v1 - v2) <= err


# -- SIMO -----------------------------------------------------------------------------

SNRS = np.array([1.0, 10.0, 1e3, 1e6])


@pytest.mark.parametrize("fn", [bn.ber_simo_oc, bn.ber_simo_egc, bn.ber_simo_sc, bn.ber_miso])
def test_single_branch_equals_siso(fn):
    np.testing.assert_allclose(fn([C], SNRS), bn.ber_siso(C, SNRS), rtol=1e-12)


def test_egc_and_miso_identical():
    for chs in ([B, B], [B, C, preset("d")]):
        assert np.array_equal(bn.ber_simo_egc(chs, SNRS), bn.ber_miso(chs, SNRS))


@pytest.mark.parametrize(
    "cfg, db",
    [
        (bn.LinkConfig.simo([B, B], "OC"), 20.0),
        (bn.LinkConfig.simo([B, C], "EGC"), 25.0),
        (bn.LinkConfig.simo([B, B], "SC"), 20.0),
        (bn.LinkConfig.miso([C, C, C]), 15.0),
        (bn.LinkConfig(((B, B), (B, B))), 15.0),
    ],
    ids=["oc", "egc-inid", "sc", "miso3", "mimo2x2"],
)
def test_against_monte_carlo(cfg, db):
    mc_check(cfg, 10 ** (db / 10))


def test_oc_two_branches_against_nested_quadrature():
    # E over I1 of E over I2 of Craig's integrand, by brute force in one dimension
    from scipy import integrate

    s = 50.0
    g = channel_grid(C)

    def craig(t):
        w = s / (2 * 2) / (2 * math.sin(t) ** 2)
        return (g.mass @ np.exp(-w * g.irradiance**2)) ** 2

    ref = integrate.quad(craig, 0, math.pi / 2, epsabs=0, epsrel=1e-11)[0] / math.pi
    assert bn.ber_simo_oc([C, C], s) == pytest.approx(ref, rel=1e-9)


def test_sc_is_never_better_than_oc_for_channel_b():
    s = bn.db_to_linear(np.arange(0, 91, 5.0))
    assert np.all(bn.ber_simo_sc([B, B], s) >= bn.ber_simo_oc([B, B], s))


@pytest.mark.parametrize("chs", [[B, C], [C, C, preset("d")]])
def test_oc_beats_egc(chs):
    s = bn.db_to_linear(np.arange(0, 91, 10.0))
    assert np.all(bn.ber_simo_oc(chs, s) <= bn.ber_simo_egc(chs, s))


def test_permutation_symmetry():
    chs = [B, C, preset("a")]
    for fn in (bn.ber_simo_oc, bn.ber_simo_egc, bn.ber_simo_sc):
        np.testing.assert_allclose(fn(chs, SNRS), fn(chs[::-1], SNRS), rtol=1e-10)


# -- MIMO -----------------------------------------------------------------------------


def test_mimo_single_transmitter_reduces_to_oc():
    cfg = bn.LinkConfig(((B, C),))
    np.testing.assert_allclose(bn.ber_mimo(cfg, SNRS), bn.ber_simo_oc([B, C], SNRS / 2), rtol=1e-12)


def test_mimo_single_receiver_is_miso():
    cfg = bn.LinkConfig(((B,), (C,)))
    np.testing.assert_allclose(bn.ber_mimo(cfg, SNRS), bn.ber_miso([B, C], SNRS), rtol=1e-12)


def test_mimo_siso():
    cfg = bn.LinkConfig(((C,),))
    assert bn.ber_mimo(cfg, 40.0) == pytest.approx(bn.ber_siso(C, 40.0), rel=1e-12)


def test_mimo_transform_against_qmc():
    cfg = bn.LinkConfig(((B, C), (C, B)))
    s = 10 ** 4
    v, err = bn.ber_mimo(cfg, s, with_error=True)
    q, se = bn.qmc_expectation(cfg, [s], log2_points=16, randomizations=8)
    assert abs(v - q[0]) < 4 * se[0] + 1e-5 * v
    assert err < 1e-6 * v


def test_qmc_is_reproducible():
    cfg = bn.LinkConfig.miso([B, B])
    a = bn.qmc_expectation(cfg, [30.0], log2_points=12, randomizations=4, seed=3)
    b = bn.qmc_expectation(cfg, [30.0], log2_points=12, randomizations=4, seed=3)
    assert np.array_equal(a[0], b[0])


# -- Lambda integral --------------------------------------------------------------------


@pytest.mark.parametrize("upsilon, N, snr", [(4, 2, 100.0), (3, 1, 5.0), (4, 3, 1e4)])
def test_lambda_oracle_against_nested_quadrature(upsilon, N, snr):
    ch = preset("a")
    assert bn.lambda_oracle(ch, upsilon, N, snr) == pytest.approx(lambda_reference(ch, upsilon, N, snr), rel=1e-9)


def test_lambda_oracle_limits_and_monotonicity():
    s = np.logspace(-8, 8, 60)
    v = bn.lambda_oracle(B, 4, 2, s)
    assert v[0] == pytest.approx(1.0, abs=1e-7)
    assert np.all(np.diff(v) < 0)


# -- curve properties -------------------------------------------------------------------


@settings(max_examples=10, deadline=None)
@given(st.sampled_from("abcd"), st.sampled_from(bn.COMBINERS), st.integers(1, 3))
def test_curves_decrease_and_stay_in_range(name, combiner, n):
    s = bn.db_to_linear(np.arange(0.0, 121.0, 6.0))
    v = bn.ber(bn.LinkConfig.simo([preset(name)] * n, combiner), s)
    assert np.all((v > 0) & (v <= 0.5))
    assert np.all(np.diff(v) < 0)


@pytest.mark.parametrize("combiner", bn.COMBINERS)
def test_more_apertures_help(combiner):
    s = bn.db_to_linear(np.arange(10.0, 91.0, 10.0))
    prev = bn.ber_siso(C, s)
    for n in (2, 3, 4):
        cur = bn.ber(bn.LinkConfig.simo([C] * n, combiner), s)
        assert np.all(cur <= prev)
        prev = cur


def test_quadrature_error_is_raised(monkeypatch):
    monkeypatch.setattr(bn, "_MAX_REL_ERROR", 0.0)
    with pytest.raises(bn.QuadratureError) as info:
        bn.ber_siso(B, np.array([10.0, 100.0]))
    assert info.value.estimate.shape == (2,)


def test_special_case_gamma_gamma_siso_against_bessel_density():
    from scipy import integrate

    from oracles import gamma_gamma_pdf

    ch = special_case("gamma_gamma", alpha=4.0, beta=1.9)
    s = 200.0
    ref = integrate.quad(
        lambda t: gamma_gamma_pdf(4.0, 1.9, math.exp(t)) * math.exp(t) * q_function(math.exp(t) * math.sqrt(s / 2)),
        -60, 6, epsabs=0, epsrel=1e-11, limit=400,
    )[0]
    assert bn.ber_siso(ch, s) == pytest.approx(ref, rel=1e-8)
