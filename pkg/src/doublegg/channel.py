"""Double Generalized Gamma turbulence channel.

The irradiance is ``I = X * Y`` with independent generalized Gamma factors,
``X**gamma1 ~ Gamma(beta1, Omega1/beta1)`` (small-scale) and
``Y**gamma2 ~ Gamma(beta2, Omega2/beta2)`` (large-scale).  The Meijer G form
of the density ties the two exponents through a pair of integers with
``gamma1 / gamma2 = p / q``; the exponent actually modelled for the first
factor is therefore ``gamma2 * p / q`` (see :attr:`DoubleGGParams.gamma1`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .specfun import DomainError, MeijerGSpec, delta_params, log_meijer_g

__all__ = [
    "GenGammaParams",
    "DoubleGGParams",
    "RationalApprox",
    "InfeasibleVarianceError",
    "PRESETS",
    "omega_from",
    "normalized_variance",
    "beta_from_variance",
    "best_rational",
    "pdf",
    "cdf",
    "log_pdf",
    "log_cdf",
    "quantile",
    "sample",
    "preset",
    "special_case",
    "mean",
    "moment",
]

_LOG_2PI = math.log(2.0 * math.pi)


class InfeasibleVarianceError(ValueError):
    """No shape parameter >= 0.5 reproduces the requested variance."""


@dataclass(frozen=True)
class GenGammaParams:
    """One generalized Gamma factor: power exponent, shape and scale."""

    gamma: float
    beta: float
    omega: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.beta >= 0.5:
            raise ValueError(f"beta must be >= 0.5, got {self.beta}")
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")

    def moment(self, r):
        """E[X**r]."""
        lg = (
            special.gammaln(self.beta + r / self.gamma)
            - special.gammaln(self.beta)
            + (r / self.gamma) * math.log(self.omega / self.beta)
        )
        return np.exp(lg)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        g, b, w = self.gamma, self.beta, self.omega
        with np.errstate(divide="ignore", over="ignore"):
            lx = np.log(x)
            out = (
                math.log(g) + b * math.log(b / w) - special.gammaln(b)
                + (g * b - 1.0) * lx - (b / w) * np.exp(g * lx)
            )
        return np.where(x > 0, out, -np.inf)

    def pdf(self, x):
        return np.exp(self.log_pdf(x))


@dataclass(frozen=True)
class RationalApprox:
    num: int
    den: int
    target: float
    rel_error: float

    @property
    def value(self) -> float:
        return self.num / self.den


@dataclass(frozen=True)
class DoubleGGParams:
    """A Double GG channel: two generalized Gamma factors and the pair (p, q).

    ``gg1`` keeps the exponent as given; :attr:`gamma1` is the exponent the
    Meijer G density represents, ``gg2.gamma * p / q``.
    """

    gg1: GenGammaParams
    gg2: GenGammaParams
    p: int
    q: int
    ratio_tol: float = 1e-2

    def __post_init__(self):
        if int(self.p) != self.p or int(self.q) != self.q or self.p < 1 or self.q < 1:
            raise ValueError(f"p and q must be positive integers, got ({self.p}, {self.q})")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "q", int(self.q))
        if self.ratio_error > self.ratio_tol:
            raise ValueError(
                f"p/q = {self.p}/{self.q} misses gamma1/gamma2 = "
                f"{self.gg1.gamma / self.gg2.gamma:.6g} by {self.ratio_error:.2e} (> {self.ratio_tol:g})"
            )

    @classmethod
    def from_factors(cls, gg1: GenGammaParams, gg2: GenGammaParams, max_den: int = 12, **kw):
        """Pick (p, q) from the continued fraction of gamma1/gamma2."""
        r = best_rational(gg1.gamma / gg2.gamma, max_den)
        return cls(gg1, gg2, r.num, r.den, **kw)

    @property
    def ratio_error(self) -> float:
        target = self.gg1.gamma / self.gg2.gamma
        return abs(self.p / self.q - target) / target

    @property
    def gamma1(self) -> float:
        return self.gg2.gamma * self.p / self.q

    @property
    def factors(self) -> tuple[GenGammaParams, GenGammaParams]:
        """The two factors of the modelled distribution (first exponent tied to p/q)."""
        return replace(self.gg1, gamma=self.gamma1), self.gg2

    def normalized(self) -> "DoubleGGParams":
        """Copy with both scales recomputed so that E[X] = E[Y] = 1 exactly."""
        g1, g2 = self.factors
        return replace(
            self,
            gg1=replace(self.gg1, omega=omega_from(g1.beta, g1.gamma)),
            gg2=replace(self.gg2, omega=omega_from(g2.beta, g2.gamma)),
        )

    def with_gamma2(self, gamma2: float) -> "DoubleGGParams":
        """Copy with the large-scale exponent changed; p/q keeps tying gamma1."""
        g1 = replace(self.gg1, gamma=gamma2 * self.p / self.q)
        return replace(self, gg1=g1, gg2=replace(self.gg2, gamma=gamma2))


PRESETS = {
    # plane wave, moderate
    "a": ((2.1690, 0.55, 1.5793), (0.8530, 2.35, 0.9671), 28, 11),
    # plane wave, strong
    "b": ((1.8621, 0.5, 1.5074), (0.7638, 1.8, 0.9280), 17, 7),
    # spherical wave, moderate
    "c": ((0.9135, 2.65, 0.9836), (1.4385, 0.85, 1.1745), 7, 11),
    # spherical wave, strong
    "d": ((0.4205, 3.2, 0.8336), (0.6643, 2.8, 0.9224), 7, 11),
}


def preset(name: str) -> DoubleGGParams:
    """The four turbulence scenarios ``"a"``..``"d"`` with their printed values."""
    try:
        f1, f2, p, q = PRESETS[name.lower()]
    except (KeyError, AttributeError):
        raise KeyError(f"unknown channel preset {name!r}; choose from {sorted(PRESETS)}") from None
    return DoubleGGParams(GenGammaParams(*f1), GenGammaParams(*f2), p, q)


def omega_from(beta: float, gamma: float) -> float:
    """Scale giving a unit-mean generalized Gamma factor."""
    if beta < 0.5 or gamma <= 0:
        raise ValueError("need beta >= 0.5 and gamma > 0")
    lg = special.gammaln(beta) - special.gammaln(beta + 1.0 / gamma)
    return float(math.exp(gamma * lg) * beta)


def normalized_variance(beta, gamma):
    """Gamma(b + 2/g) Gamma(b) / Gamma(b + 1/g)**2 - 1."""
    lg = (
        special.gammaln(beta + 2.0 / gamma)
        + special.gammaln(beta)
        - 2.0 * special.gammaln(beta + 1.0 / gamma)
    )
    return np.expm1(lg)


def beta_from_variance(sigma2: float, gamma: float) -> float:
    """Invert :func:`normalized_variance` for the shape parameter.

    The variance decreases monotonically in beta, so the root is bracketed
    between 0.5 and a doubling upper bound.  A root sitting on beta = 0.5
    (to rounding) is returned as exactly 0.5.
    """
    if sigma2 <= 0 or gamma <= 0:
        raise ValueError("need sigma2 > 0 and gamma > 0")
    top = float(normalized_variance(0.5, gamma))
    if abs(top - sigma2) <= 1e-12 * sigma2:
        return 0.5
    if top < sigma2:
        raise InfeasibleVarianceError(
            f"variance {sigma2:g} exceeds the beta = 0.5 maximum {top:g} for gamma = {gamma:g}"
        )

    def f(b):
        return math.log(normalized_variance(b, gamma)) - math.log(sigma2)

    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
    return optimize.brentq(f, 0.5, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def best_rational(target: float, max_den: int) -> RationalApprox:
    """Last continued-fraction convergent of ``target`` with denominator <= ``max_den``."""
    if not target > 0 or max_den < 1:
        raise ValueError("need target > 0 and max_den >= 1")
    frac = Fraction(target)
    h0, h1, k0, k1 = 0, 1, 1, 0
    best = None
    x = frac
    for _ in range(64):
        a = math.floor(x)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > max_den:
            break
        if h1 > 0:
            best = (h1, k1)
        if x == a:
            break
        x = 1 / (x - a)
    if best is None:
        # target < 1/max_den: nothing but the zeroth convergent fits
        best = (1, max_den)
    num, den = best
    return RationalApprox(num, den, float(target), abs(num / den - target) / target)


# -- Meijer G density and distribution ------------------------------------


@lru_cache(maxsize=256)
def _kernels(ch: DoubleGGParams):
    b1, b2 = ch.gg1.beta, ch.gg2.beta
    p, q = ch.p, ch.q
    pdf_spec = MeijerGSpec(0, p + q, tuple(delta_params(q, 1 - b1) + delta_params(p, 1 - b2)), ())
    cdf_spec = MeijerGSpec(p + q, 1, (1.0,), tuple(delta_params(q, b1) + delta_params(p, b2) + [0.0]))
    common = (
        (b2 - 0.5) * math.log(p)
        + (b1 - 0.5) * math.log(q)
        + (1.0 - 0.5 * (p + q)) * _LOG_2PI
        - special.gammaln(b1)
        - special.gammaln(b2)
    )
    # log of the argument at I = 1; it scales as I**(-p*gamma2)
    log_z1 = (
        p * math.log(ch.gg2.omega) + p * math.log(p) + q * math.log(q)
        + q * math.log(ch.gg1.omega) - q * math.log(b1) - p * math.log(b2)
    )
    return pdf_spec, cdf_spec, common, log_z1


def _check_positive(I):
    I = np.asarray(I, dtype=float)
    if np.any(~(I > 0)) or np.any(~np.isfinite(I)):
        raise DomainError("irradiance must be positive and finite")
    return I


def log_pdf(ch: DoubleGGParams, I):
    """Natural log of the density, evaluated through the Meijer G kernel."""
    I = _check_positive(I)
    spec, _, common, log_z1 = _kernels(ch)
    lx = np.log(I).ravel()
    log_z = log_z1 - ch.p * ch.gg2.gamma * lx
    la, sign, _ = log_meijer_g(spec, log_z)
    out = la + common + math.log(ch.gg2.gamma) + math.log(ch.p) - lx
    out = np.where(sign > 0, out, -np.inf)
    return out.reshape(I.shape) if I.ndim else float(out[0])


def pdf(ch: DoubleGGParams, I):
    """Double GG density at irradiance ``I`` (scalar or array)."""
    return np.exp(log_pdf(ch, I))


def log_cdf(ch: DoubleGGParams, I):
    I = _check_positive(I)
    _, spec, common, log_z1 = _kernels(ch)
    lx = np.log(I).ravel()
    log_z = ch.p * ch.gg2.gamma * lx - log_z1
    la, sign, _ = log_meijer_g(spec, log_z)
    out = np.where(sign > 0, la + common, -np.inf)
    out = np.minimum(out, 0.0)
    return out.reshape(I.shape) if I.ndim else float(out[0])


def cdf(ch: DoubleGGParams, I):
    """Distribution function P(irradiance <= I)."""
    return np.exp(log_cdf(ch, I))


def moment(ch: DoubleGGParams, r):
    """E[I**r] of the modelled distribution, from the factor moments."""
    g1, g2 = ch.factors
    return g1.moment(r) * g2.moment(r)


def mean(ch: DoubleGGParams) -> float:
    return float(moment(ch, 1.0))


def log_irradiance_stats(ch: DoubleGGParams) -> tuple[float, float]:
    """Mean and standard deviation of log(I)."""
    mu = var = 0.0
    for f in ch.factors:
        mu += (special.psi(f.beta) + math.log(f.omega / f.beta)) / f.gamma
        var += special.polygamma(1, f.beta) / f.gamma**2
    return float(mu), float(math.sqrt(var))


def quantile(ch: DoubleGGParams, u):
    """Inverse of :func:`cdf`, by Brent's method on log-irradiance."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(~((u_arr > 0) & (u_arr < 1))):
        raise DomainError("quantile needs u strictly inside (0, 1)")
    mu, sd = log_irradiance_stats(ch)
    out = np.empty(u_arr.shape)
    for idx, uu in np.ndenumerate(u_arr):
        target = math.log(uu)

        def f(x):
            return log_cdf(ch, math.exp(x)) - target

        lo, hi = mu - sd, mu + sd
        step = max(sd, 0.5)
        while f(lo) > 0:
            lo -= step
            step *= 2
        step = max(sd, 0.5)
        while f(hi) < 0:
            hi += step
            step *= 2
        out[idx] = math.exp(optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=200))
    return out if out.ndim else float(out)


def sample(ch: DoubleGGParams, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` irradiance values as products of two generalized Gamma variates."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out = np.ones(count)
    for f in ch.factors:
        g = rng.standard_gamma(f.beta, size=count) * (f.omega / f.beta)
        out *= g ** (1.0 / f.gamma)
    return out


def special_case(kind: str, **params) -> DoubleGGParams:
    """Sub-models of the Double GG family.

    ``gamma_gamma(alpha, beta)``, ``k_channel(beta)``,
    ``double_weibull(gammas, omegas=None)`` and ``negative_exponential()``.
    The last one follows the usual reduction gamma_i = Omega_i = beta_i = 1,
    which is the product of two unit-mean exponentials (a K channel with
    beta = 1).
    """
    unit = dict(gamma=1.0, omega=1.0)
    if kind == "gamma_gamma":
        return DoubleGGParams(
            GenGammaParams(beta=params["alpha"], **unit), GenGammaParams(beta=params["beta"], **unit), 1, 1
        )
    if kind == "k_channel":
        return DoubleGGParams(GenGammaParams(beta=1.0, **unit), GenGammaParams(beta=params["beta"], **unit), 1, 1)
    if kind == "double_weibull":
        g1, g2 = params["gammas"]
        omegas = params.get("omegas")
        if omegas is None:
            omegas = (omega_from(1.0, g1), omega_from(1.0, g2))
        return DoubleGGParams.from_factors(
            GenGammaParams(g1, 1.0, omegas[0]),
            GenGammaParams(g2, 1.0, omegas[1]),
            max_den=params.get("max_den", 12),
        )
    if kind == "negative_exponential":
        return special_case("k_channel", beta=1.0)
    raise ValueError(f"unknown special case {kind!r}")
