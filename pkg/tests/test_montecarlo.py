import math

import numpy as np
import pytest

from doublegg import ber_numeric as bn
from doublegg import montecarlo as mc
from doublegg.channel import DoubleGGParams, GenGammaParams, preset
from doublegg.specfun import q_function

B, C = preset("b"), preset("c")


def small(**kw):
    base = dict(draws=40_000, seed=5, block=4096)
    base.update(kw)
    return mc.McSettings(**base)


@pytest.mark.parametrize(
    "kwargs",
    [dict(draws=0), dict(block=0), dict(streams=0), dict(seed=-1), dict(seed=2**64), dict(target_rel_ci=0.0)],
)
def test_settings_validation(kwargs):
    with pytest.raises(ValueError):
        mc.McSettings(**kwargs)


@pytest.mark.parametrize(
    "cfg",
    [bn.LinkConfig.simo([B, C], "SC"), bn.LinkConfig(((B, C), (C, B)))],
    ids=["simo-sc", "mimo"],
)
def test_result_does_not_depend_on_worker_count(cfg):
    s = [10.0, 1000.0]
    runs = [mc.ber_mc(cfg, s, small(streams=n, draws=50_001)) for n in (1, 4, 16)]
    for r in runs[1:]:
        np.testing.assert_array_equal(r.ber, runs[0].ber)
        np.testing.assert_array_equal(r.ci_halfwidth, runs[0].ci_halfwidth)
    assert runs[0].draws == 50_001


def test_seed_changes_the_estimate():
    cfg = bn.LinkConfig.siso(B)
    a = mc.ber_mc(cfg, 30.0, small(seed=1))
    b = mc.ber_mc(cfg, 30.0, small(seed=2))
    assert a.ber[0] != b.ber[0]


def test_worker_cap_from_environment(monkeypatch):
    monkeypatch.setenv("DOUBLEGG_WORKERS", "2")
    assert mc._workers(mc.McSettings(streams=16)) == 2
    monkeypatch.delenv("DOUBLEGG_WORKERS")
    assert mc._workers(mc.McSettings(streams=16)) == 16


def test_merge_matches_direct_statistics():
    x = np.random.default_rng(0).random((2, 1000))
    acc = None
    for lo in range(0, 1000, 137):
        part = x[:, lo : lo + 137]
        mean = part.mean(axis=1)
        acc = mc._merge(acc, (part.shape[1], mean, ((part - mean[:, None]) ** 2).sum(axis=1)))
    n, mean, m2 = acc
    assert n == 1000
    np.testing.assert_allclose(mean, x.mean(axis=1), rtol=1e-13)
    np.testing.assert_allclose(m2 / (n - 1), x.var(axis=1, ddof=1), rtol=1e-11)


def test_near_deterministic_channel_has_no_spread():
    f = GenGammaParams(1.0, 1e8, 1.0)
    cfg = bn.LinkConfig.siso(DoubleGGParams(f, f, 1, 1))
    r = mc.ber_mc(cfg, 10.0, small())
    assert r.ber[0] == pytest.approx(q_function(math.sqrt(5.0)), rel=1e-3)
    assert r.ci_halfwidth[0] < 1e-3 * r.ber[0]


def test_confidence_intervals_cover_quadrature():
    # 99% intervals: fewer than 29 hits out of 32 has probability below 1e-3
    cfg = bn.LinkConfig.simo([B, C], "EGC")
    snr = bn.db_to_linear(25.0)
    exact = bn.ber(cfg, snr)
    hits = 0
    for seed in range(32):
        r = mc.ber_mc(cfg, snr, small(seed=seed, draws=20_000))
        hits += abs(r.ber[0] - exact) <= r.ci_halfwidth[0]
    assert hits >= 29


@pytest.mark.parametrize(
    "cfg, db",
    [
        (bn.LinkConfig.siso(B), 20.0),
        (bn.LinkConfig.simo([B, C], "OC"), 15.0),
        (bn.LinkConfig.simo([B, C], "SC"), 15.0),
        (bn.LinkConfig.miso([C, C]), 15.0),
    ],
    ids=["siso", "oc", "sc", "miso"],
)
def test_bit_level_agrees_and_is_noisier(cfg, db):
    s = bn.db_to_linear(db)
    semi = mc.ber_mc(cfg, s, small(draws=200_000))
    bits = mc.ber_mc(cfg, s, small(draws=200_000, bit_level=True))
    se = math.hypot(semi.stderr[0], bits.stderr[0])
    assert abs(semi.ber[0] - bits.ber[0]) < 4 * se
    assert semi.ci_halfwidth[0] < bits.ci_halfwidth[0]


def test_target_relative_ci_stops_early():
    cfg = bn.LinkConfig.siso(C)
    r = mc.ber_mc(cfg, 10.0, small(draws=5_000_000, target_rel_ci=0.02))
    assert r.draws < 5_000_000
    assert r.draws % (16 * 4096) == 0
    assert np.all(r.ci_halfwidth <= 0.02 * r.ber)


def test_snr_must_be_positive():
    with pytest.raises(ValueError):
        mc.ber_mc(bn.LinkConfig.siso(B), [1.0, 0.0], small())


def test_mc_curve_records_provenance():
    cfg = bn.LinkConfig.siso(B, snr_grid_db=(0.0, 10.0))
    c = mc.mc_curve(cfg, small())
    assert c.method == "montecarlo" and c.config_id == cfg.config_id
    assert c.provenance == {"seed": 5, "draws": 40_000, "block": 4096, "generator": "Philox", "ci": "99% normal"}
    assert mc.mc_curve(cfg, small(bit_level=True), snr_db=[5.0]).method == "montecarlo-bit"


# -- gains --------------------------------------------------------------------------------


def loglinear(offset, slope=-0.5, cid="x"):
    db = np.arange(0.0, 41.0, 2.0)
    return bn.BerCurve(db, 10.0 ** (slope * (db - offset) / 5.0 - 1.0), config_id=cid)


def test_snr_at_ber_is_exact_on_loglinear_curve():
    # log10 BER = -1 - (db - 3) / 10, so BER 1e-3 is reached at 23 dB
    assert mc.snr_at_ber(loglinear(3.0), 1e-3) == pytest.approx(23.0, abs=1e-12)


def test_gain_between_shifted_curves():
    assert mc.gain_at_target(loglinear(7.0), loglinear(3.0), 1e-3) == pytest.approx(4.0, abs=1e-12)
    assert mc.gain_at_target(loglinear(3.0), loglinear(3.0), 1e-3) == 0.0


def test_out_of_range_target():
    with pytest.raises(mc.RangeError, match="does not cross"):
        mc.snr_at_ber(loglinear(3.0, cid="short"), 1e-9)
    with pytest.raises(ValueError):
        mc.snr_at_ber(loglinear(3.0), 0.7)
