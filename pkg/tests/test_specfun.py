import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from doublegg.specfun import (
    DomainError,
    MeijerGAccuracyError,
    MeijerGCapabilityError,
    MeijerGSpec,
    delta_params,
    log_gamma,
    log_meijer_g,
    meijer_g,
    meijer_g_result,
    q_approx,
    q_function,
)

mpmath.mp.dps = 40


def mp_meijer(spec, z):
    a_n, a_rest = list(spec.a[: spec.n]), list(spec.a[spec.n :])
    b_m, b_rest = list(spec.b[: spec.m]), list(spec.b[spec.m :])
    return float(mpmath.meijerg([a_n, a_rest], [b_m, b_rest], z))


@pytest.mark.parametrize("z", [0.5, 3.7, 20.0, -2.5 + 1.0j, 1e-3 + 40j, 150.0])
def test_log_gamma_matches_mpmath(z):
    assert abs(log_gamma(z) - complex(mpmath.loggamma(z))) < 1e-12 * max(1.0, abs(z))


@pytest.mark.parametrize("z", [0, -1, -7.0])
def test_log_gamma_rejects_poles(z):
    with pytest.raises(DomainError):
        log_gamma(z)


@given(st.floats(0.0, 30.0))
def test_q_function_against_erfc(x):
    assert q_function(x) == pytest.approx(float(mpmath.erfc(x / mpmath.sqrt(2))) / 2, rel=1e-13)


def test_q_function_at_zero_and_approx_definition():
    assert q_function(0.0) == 0.5
    x = np.linspace(0, 5, 11)
    np.testing.assert_allclose(q_approx(x), np.exp(-x**2 / 2) / 12 + np.exp(-2 * x**2 / 3) / 4)
    assert q_approx(0.0) == pytest.approx(1 / 3)


def test_delta_params():
    assert delta_params(1, 1.0) == [1.0]
    assert delta_params(3, 0.5) == pytest.approx([1 / 6, 1 / 2, 5 / 6])
    with pytest.raises(ValueError):
        delta_params(0, 1.0)


@pytest.mark.parametrize(
    "m, n, a, b, kind",
    [
        (0, 2, (0.2, 0.7), (), "pdf"),
        (2, 0, (), (0.5, 1.2), "numerator"),
        (3, 1, (1.0,), (0.5, 1.0, 1.5), "numerator"),
        (2, 1, (1.0,), (0.4, 0.9, 0.0), "cdf"),
        (1, 1, (0.5, 0.2), (0.0, 0.3), None),
    ],
)
def test_spec_kind(m, n, a, b, kind):
    assert MeijerGSpec(m, n, a, b).kind == kind


def test_spec_rejects_invalid_order():
    with pytest.raises(ValueError):
        MeijerGSpec(3, 0, (), (0.0, 1.0))


def test_unsupported_kind_refused():
    with pytest.raises(MeijerGCapabilityError):
        meijer_g(MeijerGSpec(1, 1, (0.5, 0.2), (0.0, 0.3)), 1.0)


@pytest.mark.parametrize("z", [1e-4, 0.3, 1.0, 7.5, 60.0])
def test_exponential_identity(z):
    # G^{1,0}_{0,1}(z | -; 0) = exp(-z)
    assert meijer_g(MeijerGSpec(1, 0, (), (0.0,)), z) == pytest.approx(math.exp(-z), rel=1e-12)


@pytest.mark.parametrize("nu", [0.0, 0.3, 1.7])
@pytest.mark.parametrize("z", [0.01, 1.0, 25.0])
def test_bessel_k_identity(nu, z):
    # G^{2,0}_{0,2}(z | -; nu/2, -nu/2) = 2 K_nu(2 sqrt z)
    spec = MeijerGSpec(2, 0, (), (nu / 2, -nu / 2))
    assert meijer_g(spec, z) == pytest.approx(2 * special.kv(nu, 2 * math.sqrt(z)), rel=1e-11)


SPECS = [
    MeijerGSpec(0, 3, (0.45, 0.95, -0.15), ()),
    MeijerGSpec(4, 1, (1.0,), (0.25, 0.75, 1.05, 1.55)),
    MeijerGSpec(5, 2, (0.5, 1.0), (0.55 / 2, 1.55 / 2, 0.3, 0.6, 0.9)),
    MeijerGSpec(3, 1, (1.0,), (0.55, 2.35 / 2, 3.35 / 2, 0.0)),
    MeijerGSpec(2, 1, (1.0,), (0.5, 1.8, 0.0)),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind}-{s.m}{s.n}{s.p}{s.q}")
@pytest.mark.parametrize("z", [1e-3, 0.2, 1.0, 4.0, 90.0])
def test_meijer_g_matches_mpmath(spec, z):
    expected = mp_meijer(spec, z)
    res = meijer_g_result(spec, z)
    assert res.value == pytest.approx(expected, rel=1e-9, abs=1e-300)
    assert res.error <= 1e-8 * abs(res.value) + 1e-300


def test_log_form_survives_extreme_arguments():
    spec = MeijerGSpec(1, 0, (), (0.0,))
    la, sign, rel = log_meijer_g(spec, np.array([math.log(500.0), -600.0]))
    np.testing.assert_allclose(la[0], -500.0, rtol=1e-12)
    assert sign[0] == 1 and rel.max() < 1e-10
    # G^{1,0}_{0,1}(e^-600) = exp(-e^-600) -> 1
    assert la[1] == pytest.approx(0.0, abs=1e-12)


def test_array_input_keeps_shape():
    spec = MeijerGSpec(1, 0, (), (0.0,))
    z = np.array([[0.5, 1.0], [2.0, 3.0]])
    np.testing.assert_allclose(meijer_g(spec, z), np.exp(-z), rtol=1e-12)


@pytest.mark.parametrize("z", [0.0, -1.0])
def test_meijer_g_rejects_nonpositive(z):
    with pytest.raises(DomainError):
        meijer_g(MeijerGSpec(1, 0, (), (0.0,)), z)


def test_accuracy_error_carries_estimate(monkeypatch):
    import doublegg.specfun as sf

    def fake(spec, log_z, tol=1e-12):
        n = np.size(log_z)
        return np.zeros(n), np.ones(n), np.full(n, 1e-3)

    monkeypatch.setattr(sf, "log_meijer_g", fake)
    with pytest.raises(MeijerGAccuracyError) as info:
        sf.meijer_g(MeijerGSpec(1, 0, (), (0.0,)), 2.0)
    assert info.value.estimate == 1.0
    assert info.value.error == pytest.approx(1e-3)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(0.5, 4.0), st.floats(-6.0, 6.0))
def test_gamma_gamma_kernel_against_bessel(b1, b2, logz):
    # G^{2,0}_{0,2}(z | b1, b2) = 2 z^{(b1+b2)/2} K_{b1-b2}(2 sqrt z)
    z = math.exp(logz)
    spec = MeijerGSpec(2, 0, (), (b1, b2))
    expected = 2 * z ** ((b1 + b2) / 2) * special.kv(b1 - b2, 2 * math.sqrt(z))
    assert meijer_g(spec, z) == pytest.approx(expected, rel=1e-10)
