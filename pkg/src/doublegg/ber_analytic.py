"""Closed-form SIMO optimal-combining BER through Meijer G functions.

The Gaussian tail is replaced by ``Q(x) ~ exp(-x^2/2)/12 + exp(-2x^2/3)/4``,
which turns the BER of an N-branch optimal combiner into products of

    Lambda(upsilon) = E[exp(-snr * I^2 / (upsilon * N))],   upsilon in {3, 4},

one per branch.  For a Double GG branch with ``p * gamma2 / 2 = l / k``
(positive integers) Lambda is a single G^{k(p+q), l}_{l, k(p+q)} function.
When ``p * gamma2 / 2`` is not a ratio of small integers, the large-scale
exponent is moved to the nearest value that is, and the shift is reported.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import channel as _ch
from . import ber_numeric as _bn
from .specfun import MeijerGError, MeijerGSpec, delta_params, log_meijer_g

__all__ = [
    "LambdaContext",
    "LambdaResult",
    "RationalNudgeWarning",
    "lambda_context",
    "j_sequence",
    "lambda_closed",
    "lambda_closed_result",
    "ber_simo_oc_closed",
    "lambda_kc",
    "lambda_gg",
    "lambda_dw",
]

_LOG_2PI = math.log(2.0 * math.pi)
NUDGE_TOL = 1e-3
_RTOL = 1e-8


class RationalNudgeWarning(UserWarning):
    """p * gamma2 / 2 had no close small-integer ratio; gamma2 was moved."""


def j_sequence(xi: int, y: int, x: float) -> list[float]:
    """The run Delta(xi, (y-x)/y), Delta(xi, (y-1-x)/y), ..., Delta(xi, (1-x)/y).

    Examples
    --------
    >>> j_sequence(2, 1, 0.0)
    [0.5, 1.0]
    """
    if xi < 1 or y < 1:
        raise ValueError("xi and y must be positive integers")
    out: list[float] = []
    for i in range(y):
        out += delta_params(xi, (y - i - x) / y)
    return out


@dataclass(frozen=True)
class LambdaContext:
    """Everything Lambda needs for one branch, fixed once per channel.

    Attributes
    ----------
    channel : DoubleGGParams
        Channel the closed form describes exactly, with
        ``gamma2 = 2 l / (k p)``.
    source : DoubleGGParams
        Channel as given.
    l, k : int
        Integers with ``l / k`` approximating ``p * gamma2 / 2`` of ``source``.
    rational : RationalApprox
        The approximation, with its relative error.
    log_alpha, omega : float
        Log of the amplitude constant and the scale constant of the Meijer G
        form.
    """

    channel: _ch.DoubleGGParams
    source: _ch.DoubleGGParams
    l: int
    k: int
    rational: _ch.RationalApprox
    log_alpha: float
    omega: float

    @property
    def nudged(self) -> bool:
        """True when ``channel`` differs from ``source``."""
        return self.rational.rel_error > 0.0

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @property
    def spec(self) -> MeijerGSpec:
        ch = self.channel
        b = j_sequence(self.k, ch.q, 1.0 - ch.gg1.beta) + j_sequence(self.k, ch.p, 1.0 - ch.gg2.beta)
        return MeijerGSpec(len(b), self.l, tuple(delta_params(self.l, 1.0)), tuple(b))

    @property
    def log_prefactor(self) -> float:
        ch, l, k = self.channel, self.l, self.k
        pq = ch.p + ch.q
        return (
            self.log_alpha
            - 0.5 * math.log(l)
            + (ch.gg1.beta + ch.gg2.beta) * math.log(k)
            - math.log(2.0)
            - 0.5 * (l - 1 + (k - 1) * pq) * _LOG_2PI
        )

    def log_argument(self, upsilon, N, snr):
        l, k, ch = self.l, self.k, self.channel
        return (
            l * math.log(upsilon * N)
            - k * math.log(self.omega)
            + l * math.log(l)
            - l * np.log(snr)
            - k * (ch.p + ch.q) * math.log(k)
        )


def lambda_context(
    ch: _ch.DoubleGGParams, *, max_den: int = 12, nudge_tol: float = NUDGE_TOL
) -> LambdaContext:
    """Choose ``l / k`` for ``p * gamma2 / 2`` and build the branch constants.

    The closed form is exact only for a rational ``p * gamma2 / 2``, so it is
    always evaluated on ``ch.with_gamma2(2 l / (k p))``.  A warning is issued
    when that moves gamma2 by more than ``nudge_tol`` (relative).
    """
    target = ch.p * ch.gg2.gamma / 2.0
    rational = _ch.best_rational(target, max_den)
    l, k = rational.num, rational.den
    if rational.rel_error > nudge_tol:
        warnings.warn(
            f"p*gamma2/2 = {target:.6g} approximated by {l}/{k} (rel. error {rational.rel_error:.2e}); "
            f"closed form evaluated with gamma2 = {2 * l / (k * ch.p):.6g}",
            RationalNudgeWarning,
            stacklevel=2,
        )
    exact = ch.with_gamma2(2.0 * l / (k * ch.p)) if rational.rel_error > 0 else ch
    g1, g2 = exact.gg1, exact.gg2
    p, q = exact.p, exact.q
    log_alpha = (
        math.log(g2.gamma)
        + (g2.beta + 0.5) * math.log(p)
        + (g1.beta - 0.5) * math.log(q)
        + (1.0 - 0.5 * (p + q)) * _LOG_2PI
        - special.gammaln(g1.beta)
        - special.gammaln(g2.beta)
    )
    omega = (g2.omega * p / g2.beta) ** p * (q * g1.omega / g1.beta) ** q
    return LambdaContext(exact, ch, l, k, rational, float(log_alpha), float(omega))


@dataclass(frozen=True)
class LambdaResult:
    """Lambda values with error estimates.

    ``method`` is ``"closed"`` or ``"oracle_fallback"`` (the Meijer G
    evaluation failed and quadrature was used).  ``source_value`` is the
    quadrature value on the un-nudged channel, present only when requested
    for a nudged context.
    """

    value: np.ndarray | float
    error: np.ndarray | float
    method: str
    source_value: np.ndarray | float | None = None


def _check(upsilon, N, snr):
    if upsilon not in (3, 4):
        raise ValueError("upsilon must be 3 or 4")
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    s = np.asarray(snr, dtype=float)
    if np.any(~(s > 0)) or np.any(~np.isfinite(s)):
        raise ValueError("snr must be positive and finite")
    return s


def lambda_closed_result(
    ctx: LambdaContext, upsilon: int, N: int, snr, *, compare_source: bool = False
) -> LambdaResult:
    """Closed-form Lambda with an error estimate and an automatic fallback."""
    s = _check(upsilon, N, snr)
    flat = s.ravel()
    try:
        la, sign, rel = log_meijer_g(ctx.spec, ctx.log_argument(upsilon, N, flat))
        if np.any(sign <= 0) or np.any(rel > _RTOL):
            raise MeijerGError("closed form not resolved to the requested accuracy")
        value = np.exp(la + ctx.log_prefactor)
        error = value * rel
        method = "closed"
    except MeijerGError:
        value, error = _bn.lambda_oracle(ctx.channel, upsilon, N, flat, with_error=True)
        method = "oracle_fallback"
    value = np.minimum(value, 1.0)
    source = None
    if compare_source and ctx.nudged:
        source = _shape(_bn.lambda_oracle(ctx.source, upsilon, N, flat), s)
    return LambdaResult(_shape(value, s), _shape(error, s), method, source)


def _shape(v, like):
    v = np.asarray(v, dtype=float).reshape(like.shape)
    return v if v.ndim else float(v)


def lambda_closed(ctx: LambdaContext, upsilon: int, N: int, snr):
    """E[exp(-snr I^2 / (upsilon N))] in closed form."""
    return lambda_closed_result(ctx, upsilon, N, snr).value


def ber_simo_oc_closed(ctxs, snr):
    """Approximate N-branch optimal-combining BER, one context per branch."""
    ctxs = list(ctxs)
    if not ctxs:
        raise ValueError("need at least one branch")
    N = len(ctxs)
    p4 = p3 = 1.0
    for c in ctxs:
        p4 = p4 * lambda_closed(c, 4, N, snr)
        p3 = p3 * lambda_closed(c, 3, N, snr)
    return p4 / 12.0 + p3 / 4.0


def _g41(upsilon, N, snr, b, scale, log_front):
    s = _check(upsilon, N, snr)
    spec = MeijerGSpec(4, 1, (1.0,), tuple(b))
    la, sign, _ = log_meijer_g(spec, np.log(upsilon * N * scale) - np.log(s.ravel()))
    return _shape(sign * np.exp(la + log_front), s)


def lambda_kc(beta2: float, upsilon: int, N: int, snr):
    """Lambda for the K channel with shape ``beta2``."""
    if beta2 < 0.5:
        raise ValueError("beta2 must be >= 0.5")
    front = (beta2 - 1.0) * math.log(2.0) - math.log(math.pi) - special.gammaln(beta2)
    b = (0.5, 1.0, beta2 / 2.0, (beta2 + 1.0) / 2.0)
    return _g41(upsilon, N, snr, b, beta2**2 / 16.0, front)


def lambda_gg(beta1: float, beta2: float, upsilon: int, N: int, snr):
    """Lambda for the Gamma-Gamma channel with shapes ``beta1``, ``beta2``."""
    if beta1 < 0.5 or beta2 < 0.5:
        raise ValueError("shapes must be >= 0.5")
    front = (
        (beta1 + beta2 - 2.0) * math.log(2.0) - math.log(math.pi)
        - special.gammaln(beta1) - special.gammaln(beta2)
    )
    b = (beta1 / 2.0, (beta1 + 1.0) / 2.0, beta2 / 2.0, (beta2 + 1.0) / 2.0)
    return _g41(upsilon, N, snr, b, (beta1 * beta2) ** 2 / 16.0, front)


def lambda_dw(gammas, omegas, p: int, q: int, l: int, k: int, upsilon: int, N: int, snr):
    """Lambda for the Double Weibull channel (both shapes equal to one).

    ``gammas`` and ``omegas`` are the (small-scale, large-scale) exponents and
    scales; ``p / q`` ties the exponents and ``l / k = p * gamma2 / 2``.
    """
    g2 = gammas[1]
    w1, w2 = omegas
    if min(p, q, l, k) < 1:
        raise ValueError("p, q, l, k must be positive integers")
    if abs(p * g2 / 2.0 - l / k) > 1e-9 * (l / k):
        raise ValueError(f"l/k = {l}/{k} does not equal p*gamma2/2 = {p * g2 / 2.0:.12g}")
    s = _check(upsilon, N, snr)
    front = (
        math.log(g2) + 1.5 * math.log(p) + 0.5 * math.log(q) - 0.5 * math.log(l) + 2.0 * math.log(k)
        - math.log(2.0) - 0.5 * (l - 3 + k * (p + q)) * _LOG_2PI
    )
    log_z = (
        l * math.log(upsilon * N) + l * math.log(l) - l * np.log(s.ravel())
        - k * p * math.log(w2 * p * k) - k * q * math.log(q * w1 * k)
    )
    spec = MeijerGSpec(k * (p + q), l, tuple(delta_params(l, 1.0)), tuple(j_sequence(k, q, 0.0) + j_sequence(k, p, 0.0)))
    la, sign, _ = log_meijer_g(spec, log_z)
    return _shape(sign * np.exp(la + front), s)
