"""Reference BER values by deterministic integration over the fading.

Every configuration is reduced to one-dimensional expectations over the
log-irradiance grids of :mod:`doublegg.grid`, using exact integral
representations of the Gaussian tail:

* SISO and selection combining are plain grid sums;
* optimal combining uses ``Q(x) = 1/pi Int_0^{pi/2} exp(-x^2 / (2 sin^2 t)) dt``,
  under which the receive branches factorize;
* equal-gain combining and MISO invert the Laplace transform of the branch
  sum, ``Q(c S) = 1/(2 pi i) Int exp(s^2/2) E[exp(-c s S)] ds / s``, along a
  vertical line through its saddle point;
* MIMO combines the first form over receive apertures with a Gaussian line
  integral for each sum over transmit apertures.

All of these are exact, so the only errors are those of the one-dimensional
rules; each result carries an estimate from the embedded Gauss rule of the
grid plus the outer quadrature.  A randomized quasi-Monte Carlo integrator
over the same channels (:func:`qmc_expectation`) is kept as an independent
cross-check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, interpolate, optimize
from scipy.stats import qmc

from . import channel as _ch
from .grid import GAUSS, KRONROD, NODES, channel_grid
from .specfun import q_function

__all__ = [
    "LinkConfig",
    "BerCurve",
    "QuadratureError",
    "UNDERFLOW",
    "SNR_DB_DEFAULT",
    "db_to_linear",
    "conditional_ber",
    "ber_siso",
    "ber_simo_oc",
    "ber_simo_egc",
    "ber_miso",
    "ber_simo_sc",
    "ber_mimo",
    "ber",
    "ber_curve",
    "lambda_oracle",
    "qmc_expectation",
    "write_csv",
    "read_csv",
]

SNR_DB_DEFAULT = tuple(float(v) for v in range(0, 91))
# values below this are dominated by rounding in the integrals
UNDERFLOW = 1e-14
COMBINERS = ("OC", "EGC", "SC")
CSV_COLUMNS = ("snr_db", "ber", "ci_halfwidth", "method", "config_id")

# relative error estimate above which a quadrature result is refused
_MAX_REL_ERROR = 1e-4
# Gaussian factors exp(-t^2/2) are below 1e-22 past this abscissa
_T_MAX = 10.0


class QuadratureError(ArithmeticError):
    """An integral did not reach the accuracy it is required to have."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


# -- configurations ----------------------------------------------------------


@dataclass(frozen=True)
class LinkConfig:
    """An M x N link: ``channels[m][n]`` is the path from aperture m to aperture n.

    ``combiner`` applies to single-transmitter links; with M > 1 the
    receiver always forms the sum of the per-aperture signals.
    """

    channels: tuple
    combiner: str = "OC"
    snr_grid_db: tuple = SNR_DB_DEFAULT
    label: str = ""

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.channels)
        if not rows or not rows[0]:
            raise ValueError("a link needs at least one channel")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("channel matrix must be rectangular (M rows of N paths)")
        for r in rows:
            for c in r:
                if not isinstance(c, _ch.DoubleGGParams):
                    raise TypeError(f"channels must be DoubleGGParams, got {type(c).__name__}")
        object.__setattr__(self, "channels", rows)
        comb = str(self.combiner).upper()
        if comb not in COMBINERS:
            raise ValueError(f"combiner must be one of {COMBINERS}, got {self.combiner!r}")
        object.__setattr__(self, "combiner", comb)
        grid = tuple(float(v) for v in self.snr_grid_db)
        if not grid or not np.all(np.isfinite(grid)) or np.any(np.diff(grid) <= 0):
            raise ValueError("snr_grid_db must be a non-empty, strictly increasing list")
        object.__setattr__(self, "snr_grid_db", grid)

    @classmethod
    def siso(cls, ch, **kw):
        return cls(((ch,),), **kw)

    @classmethod
    def simo(cls, chs, combiner="OC", **kw):
        return cls((tuple(chs),), combiner=combiner, **kw)

    @classmethod
    def miso(cls, chs, **kw):
        return cls(tuple((c,) for c in chs), **kw)

    @property
    def M(self) -> int:
        return len(self.channels)

    @property
    def N(self) -> int:
        return len(self.channels[0])

    @property
    def kind(self) -> str:
        if self.M == 1:
            return "SISO" if self.N == 1 else "SIMO"
        return "MISO" if self.N == 1 else "MIMO"

    @property
    def config_id(self) -> str:
        if self.label:
            return self.label
        tag = self.kind.lower()
        if self.kind == "SIMO":
            tag += "-" + self.combiner.lower()
        return f"{tag}-{self.M}x{self.N}"


def conditional_ber(cfg: LinkConfig, I, snr):
    """Error probability given the irradiances.

    Parameters
    ----------
    I : array, shape (..., M, N)
    snr : array, shape (S,)

    Returns
    -------
    ndarray, shape (S, ...)
    """
    I = np.asarray(I, dtype=float)
    s = np.atleast_1d(np.asarray(snr, dtype=float))
    M, N = cfg.M, cfg.N
    if M == 1:
        row = I[..., 0, :]
        if cfg.combiner == "OC":
            metric, scale = np.sqrt((row * row).sum(axis=-1)), np.sqrt(s / (2.0 * N))
        elif cfg.combiner == "EGC":
            metric, scale = row.sum(axis=-1), np.sqrt(s) / (N * math.sqrt(2.0))
        else:
            metric, scale = row.max(axis=-1), np.sqrt(s / (2.0 * N))
    else:
        sums = I.sum(axis=-2)
        metric, scale = np.sqrt((sums * sums).sum(axis=-1)), np.sqrt(s / 2.0) / (M * N)
    return q_function(np.multiply.outer(scale, metric))


# -- helpers -------------------------------------------------------------------


def _snr(snr):
    s = np.asarray(snr, dtype=float)
    if np.any(~(s > 0)) or np.any(~np.isfinite(s)):
        raise ValueError("average SNR must be positive and finite (linear scale)")
    return s


def _finish(values, errors, shape, with_error, what):
    values = np.asarray(values, dtype=float).reshape(shape)
    errors = np.asarray(errors, dtype=float).reshape(shape)
    bad = errors > _MAX_REL_ERROR * np.abs(values) + 1e-300
    if np.any(bad):
        raise QuadratureError(
            f"{what}: error estimate {np.max(errors / np.maximum(np.abs(values), 1e-300)):.2e} relative",
            values,
            errors,
        )
    if values.ndim == 0:
        values, errors = float(values), float(errors)
    return (values, errors) if with_error else values


def _grids(chs):
    return [channel_grid(c) for c in chs]


def _log_laplace(g, w, mass):
    """log E[exp(-w I)] for real w >= 0, and the tilted mean E[I e^{-wI}] / E[e^{-wI}]."""
    with np.errstate(divide="ignore"):
        lw = np.log(mass) - w * g.irradiance
    top = lw.max()
    p = np.exp(lw - top)
    tot = p.sum()
    return top + math.log(tot), float(p @ g.irradiance / tot)


# -- SISO ---------------------------------------------------------------------


def ber_siso(ch: _ch.DoubleGGParams, snr, *, with_error: bool = False):
    """E[Q(I sqrt(snr/2))] for one link; ``snr`` is the linear average SNR."""
    s = _snr(snr)
    g = channel_grid(ch)
    vals = q_function(np.multiply.outer(np.sqrt(s.ravel() / 2.0), g.irradiance))
    k, gs = vals @ g.mass, vals @ g.mass_gauss
    return _finish(k, np.abs(k - gs), s.shape, with_error, "ber_siso")


# -- optimal combining ----------------------------------------------------------


def _craig(s_flat, factor, grids, scale):
    """(1/pi) Int_0^{pi/2} prod_n E[exp(-scale I_n^2 / sin^2 t)] dt for each snr."""
    sq = [g.irradiance**2 for g in grids]
    vals, errs = [], []
    for s in s_flat:
        c = scale * s

        def f(t, c=c):
            z = c / math.sin(t) ** 2
            out = np.ones(2)
            for g, i2 in zip(grids, sq):
                e = np.exp(-z * i2)
                out *= (g.mass @ e, g.mass_gauss @ e)
            return out

        res, err = integrate.quad_vec(f, 0.0, 0.5 * math.pi, epsabs=0.0, epsrel=1e-11, limit=400)
        vals.append(res[0] / math.pi)
        errs.append((abs(res[0] - res[1]) + err) / math.pi)
    return np.array(vals), np.array(errs)


def ber_simo_oc(chs, snr, *, with_error: bool = False):
    """E[Q(sqrt(snr/(2N) sum I_n^2))] for N receive apertures with optimal combining."""
    chs = list(chs)
    if len(chs) == 1:
        return ber_siso(chs[0], snr, with_error=with_error)
    s = _snr(snr)
    N = len(chs)
    v, e = _craig(s.ravel(), None, _grids(chs), 1.0 / (4.0 * N))
    return _finish(v, e, s.shape, with_error, "ber_simo_oc")


# -- equal-gain combining / MISO -------------------------------------------------


def _sum_tail(grids, c):
    """E[Q(c * sum_k I_k)] by Laplace inversion along Re s = s0."""
    means = [g.mass @ g.irradiance for g in grids]

    def slope(x):
        return x - 1.0 / x - c * sum(_log_laplace(g, c * x, g.mass)[1] for g in grids)

    hi = 2.0 + c * sum(means)
    s0 = optimize.brentq(slope, 1e-12, hi, xtol=1e-14, rtol=1e-12)
    out = []
    for mass_name in ("mass", "mass_gauss"):
        logs, tilts = [], []
        for g in grids:
            mass = getattr(g, mass_name)
            lw, _ = _log_laplace(g, c * s0, mass)
            with np.errstate(divide="ignore"):
                p = np.exp(np.log(mass) - c * s0 * g.irradiance - lw)
            logs.append(lw)
            tilts.append(p)
        h0 = 0.5 * s0 * s0 + sum(logs)

        def f(t):
            z = complex(s0, t)
            val = np.exp(0.5 * (z * z - s0 * s0)) / z
            for g, p in zip(grids, tilts):
                val *= p @ np.exp(-1j * c * t * g.irradiance)
            return val.real

        res, err = integrate.quad(f, 0.0, _T_MAX, epsabs=0.0, epsrel=1e-11, limit=400)
        out.append((math.exp(h0) * res / math.pi, math.exp(h0) * err / math.pi))
    (k, ek), (gs, _) = out
    return k, abs(k - gs) + ek


def _ber_sum(chs, snr, with_error, what):
    chs = list(chs)
    if len(chs) == 1:
        return ber_siso(chs[0], snr, with_error=with_error)
    s = _snr(snr)
    K = len(chs)
    grids = _grids(chs)
    res = [_sum_tail(grids, math.sqrt(v) / (K * math.sqrt(2.0))) for v in s.ravel()]
    v, e = (np.array(x) for x in zip(*res))
    return _finish(v, e, s.shape, with_error, what)


def ber_simo_egc(chs, snr, *, with_error: bool = False):
    """E[Q(sqrt(snr) / (N sqrt 2) * sum I_n)] for equal-gain combining."""
    return _ber_sum(chs, snr, with_error, "ber_simo_egc")


def ber_miso(chs, snr, *, with_error: bool = False):
    """E[Q(sqrt(snr) / (M sqrt 2) * sum I_m)]; identical to :func:`ber_simo_egc`."""
    return _ber_sum(chs, snr, with_error, "ber_miso")


# -- selection combining ---------------------------------------------------------


@lru_cache(maxsize=64)
def _cdf_on_grid(of: _ch.DoubleGGParams, on: _ch.DoubleGGParams):
    if of == on:
        return channel_grid(on).cdf
    return _ch.cdf(of, channel_grid(on).irradiance)


def ber_simo_sc(chs, snr, *, with_error: bool = False):
    """Selection combining, integrated against the density of the largest irradiance."""
    chs = list(chs)
    if len(chs) == 1:
        return ber_siso(chs[0], snr, with_error=with_error)
    s = _snr(snr)
    N = len(chs)
    a = np.sqrt(s.ravel() / (2.0 * N))
    k = np.zeros(a.size)
    gs = np.zeros(a.size)
    for n, ch in enumerate(chs):
        g = channel_grid(ch)
        w = np.ones(g.size)
        for j, other in enumerate(chs):
            if j != n:
                w = w * _cdf_on_grid(other, ch)
        vals = q_function(np.multiply.outer(a, g.irradiance))
        k += vals @ (g.mass * w)
        gs += vals @ (g.mass_gauss * w)
    return _finish(k, np.abs(k - gs), s.shape, with_error, "ber_simo_sc")


# -- MIMO ----------------------------------------------------------------------

# composite Kronrod rule (embedded Gauss for the error) on [0, _T_MAX]
_INNER_PANELS = 14


def _inner_nodes():
    width = _T_MAX / _INNER_PANELS
    mids = width * (np.arange(_INNER_PANELS) + 0.5)
    tau = (mids[:, None] + 0.5 * width * NODES).ravel()
    return tau, np.tile(0.5 * width * KRONROD, _INNER_PANELS), np.tile(0.5 * width * GAUSS, _INNER_PANELS)


_TAU, _TAU_WK, _TAU_WG = _inner_nodes()


def _sum_square_mgf(grids, lam):
    """E[exp(-lam S^2)] with S the sum of the independent irradiances on ``grids``.

    Uses exp(-lam S^2) = (4 pi lam)^{-1/2} Int exp(-u^2/(4 lam) - i u S) du on the
    line Im u = -y, with y at the saddle point.  Returns the Kronrod value, the
    value with the Gauss masses and an error estimate of the inner rule.
    """
    distinct, power = [], []
    for g in grids:
        for i, d in enumerate(distinct):
            if d is g:
                power[i] += 1
                break
        else:
            distinct.append(g)
            power.append(1)

    def slope(y):
        return y / (2.0 * lam) - sum(k * _log_laplace(g, y, g.mass)[1] for g, k in zip(distinct, power))

    hi = 2.0 * lam * sum(k * (g.mass @ g.irradiance) for g, k in zip(distinct, power))
    y = optimize.brentq(slope, 0.0, hi, xtol=1e-14, rtol=1e-12) if slope(hi) > 0 else hi
    r = math.sqrt(2.0 * lam)
    base = np.exp(-0.5 * _TAU * _TAU + 1j * _TAU * (y / r))
    phases = [np.exp(-1j * r * np.multiply.outer(_TAU, g.irradiance)) for g in distinct]
    out = []
    for mass_name in ("mass", "mass_gauss"):
        phi = y * y / (4.0 * lam)
        val = base
        for g, k, ph in zip(distinct, power, phases):
            m = getattr(g, mass_name)
            lw, _ = _log_laplace(g, y, m)
            with np.errstate(divide="ignore"):
                p = np.exp(np.log(m) - y * g.irradiance - lw)
            val = val * (ph @ p) ** k
            phi += k * lw
        out.append(math.sqrt(2.0 / math.pi) * math.exp(phi) * val.real)
    k_val = _TAU_WK @ out[0]
    return k_val, _TAU_WK @ out[1], abs(k_val - _TAU_WG @ out[0])


def _mimo_point(cols, s, M, N):
    kappa2 = s / (2.0 * (M * N) ** 2)

    def f(t):
        lam = kappa2 / (2.0 * math.sin(t) ** 2)
        out = np.ones(3)
        for grids in cols:
            k, gs, ek = _sum_square_mgf(grids, lam)
            out *= (k, gs, k + ek)
        return out

    res, err = integrate.quad_vec(f, 0.0, 0.5 * math.pi, epsabs=0.0, epsrel=1e-9, limit=200)
    v = res[0] / math.pi
    e = (abs(res[0] - res[1]) + abs(res[2] - res[0]) + err) / math.pi
    return v, e


def ber_mimo(cfg: LinkConfig, snr, *, with_error: bool = False, method: str = "transform", **qmc_kw):
    """E[Q(1/(MN) sqrt(snr/2 sum_n (sum_m I_mn)^2))] for an M x N link.

    ``method="qmc"`` integrates with randomized quasi-Monte Carlo instead
    (keyword arguments go to :func:`qmc_expectation`); its error is one
    standard error over the randomizations.
    """
    M, N = cfg.M, cfg.N
    if method == "qmc":
        s = _snr(snr)
        v, e = qmc_expectation(cfg, s.ravel(), **qmc_kw)
        v, e = v.reshape(s.shape), e.reshape(s.shape)
        if v.ndim == 0:
            v, e = float(v), float(e)
        return (v, e) if with_error else v
    if method != "transform":
        raise ValueError(f"unknown method {method!r}")
    if M == 1:
        # the 1/N area normalization turns the metric into optimal combining at snr/N
        return ber_simo_oc(cfg.channels[0], _snr(snr) / N, with_error=with_error)
    if N == 1:
        return ber_miso([r[0] for r in cfg.channels], snr, with_error=with_error)
    s = _snr(snr)
    cols = [_grids([cfg.channels[m][n] for m in range(M)]) for n in range(N)]
    res = [_mimo_point(cols, v, M, N) for v in s.ravel()]
    v, e = (np.array(x) for x in zip(*res))
    return _finish(v, e, s.shape, with_error, "ber_mimo")


# -- dispatch and curves -----------------------------------------------------------


def ber(cfg: LinkConfig, snr, *, with_error: bool = False):
    """Quadrature BER of any configuration at linear average SNR ``snr``."""
    if cfg.M == 1:
        row = list(cfg.channels[0])
        fn = {"OC": ber_simo_oc, "EGC": ber_simo_egc, "SC": ber_simo_sc}[cfg.combiner]
        return fn(row, snr, with_error=with_error)
    return ber_mimo(cfg, snr, with_error=with_error)


def ber_curve(cfg: LinkConfig, snr_db=None) -> "BerCurve":
    """Quadrature curve over ``snr_db`` (default: the configuration's grid)."""
    db = np.asarray(cfg.snr_grid_db if snr_db is None else snr_db, dtype=float)
    v, e = ber(cfg, db_to_linear(db), with_error=True)
    return BerCurve(
        db,
        np.atleast_1d(v),
        None,
        "quadrature",
        cfg.config_id,
        {"max_error_estimate": float(np.max(e)), "grid_nodes": [channel_grid(c).size for r in cfg.channels for c in r]},
    )


# -- Lambda integral -------------------------------------------------------------------


def lambda_oracle(ch: _ch.DoubleGGParams, upsilon, N: int, snr, *, with_error: bool = False):
    """Int pdf(I) exp(-snr I^2 / (upsilon N)) dI on the channel grid."""
    if upsilon not in (3, 4):
        raise ValueError("upsilon must be 3 or 4")
    if N < 1:
        raise ValueError("N must be >= 1")
    s = _snr(snr)
    g = channel_grid(ch)
    vals = np.exp(-np.multiply.outer(s.ravel() / (upsilon * N), g.irradiance**2))
    k, gs = vals @ g.mass, vals @ g.mass_gauss
    return _finish(k, np.abs(k - gs), s.shape, with_error, "lambda_oracle")


# -- randomized QMC --------------------------------------------------------------------


def _strictly_rising(v):
    # drop points that do not exceed every earlier value (cdf round-off)
    prior = np.concatenate([[-np.inf], np.maximum.accumulate(v)[:-1]])
    return v > prior


@lru_cache(maxsize=64)
def _inverse_table(ch: _ch.DoubleGGParams):
    g = channel_grid(ch)
    log_f = _ch.log_cdf(ch, g.irradiance)
    ok = np.isfinite(log_f) & (log_f < -1e-12)
    logit = log_f[ok] - np.log(-np.expm1(log_f[ok]))
    keep = _strictly_rising(logit)
    # monotone cubic interpolation of log-irradiance in logit(F)
    return interpolate.PchipInterpolator(logit[keep], g.x[ok][keep])


def _inverse_cdf(ch, u):
    table = _inverse_table(ch)
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        z = np.log(u) - np.log1p(-u)
    return np.exp(table(np.clip(z, table.x[0], table.x[-1])))


def qmc_expectation(cfg: LinkConfig, snr, *, log2_points: int = 20, randomizations: int = 16, seed: int = 0):
    """Randomized QMC estimate of the BER and its standard error.

    Randomization ``r`` is a Sobol' point set scrambled from child ``r`` of
    ``SeedSequence(seed)``, so the estimate is fixed by ``seed``.
    Irradiances are obtained by inverting the tabulated cdf.
    """
    s = np.atleast_1d(_snr(snr)).ravel()
    M, N = cfg.M, cfg.N
    flat = [c for r in cfg.channels for c in r]
    chunk = 1 << min(log2_points, 16)
    est = np.empty((randomizations, s.size))
    children = np.random.SeedSequence(seed).spawn(randomizations)
    for r in range(randomizations):
        rng = np.random.Generator(np.random.Philox(children[r]))
        sob = qmc.Sobol(len(flat), scramble=True, seed=rng)
        acc = np.zeros(s.size)
        remaining = 1 << log2_points
        while remaining:
            u = sob.random(chunk)
            I = np.column_stack([_inverse_cdf(c, u[:, j]) for j, c in enumerate(flat)])
            acc += conditional_ber(cfg, I.reshape(-1, M, N), s).sum(axis=1)
            remaining -= chunk
        est[r] = acc / (1 << log2_points)
    return est.mean(axis=0), est.std(axis=0, ddof=1) / math.sqrt(randomizations)


# -- curves and CSV ----------------------------------------------------------------------


@dataclass(eq=False)
class BerCurve:
    """BER samples over SNR (dB) with optional confidence half-widths.

    Equality compares the samples, method and configuration id; the free-form
    ``provenance`` is not part of the CSV form and is ignored.
    """

    snr_db: np.ndarray
    ber: np.ndarray
    ci_halfwidth: np.ndarray | None = None
    method: str = "quadrature"
    config_id: str = ""
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.snr_db = np.asarray(self.snr_db, dtype=float).ravel()
        self.ber = np.asarray(self.ber, dtype=float).ravel()
        if self.snr_db.shape != self.ber.shape:
            raise ValueError("snr_db and ber must have the same length")
        if np.any(np.diff(self.snr_db) <= 0):
            raise ValueError("snr_db must be strictly increasing")
        if self.ci_halfwidth is not None:
            self.ci_halfwidth = np.asarray(self.ci_halfwidth, dtype=float).ravel()
            if self.ci_halfwidth.shape != self.ber.shape:
                raise ValueError("ci_halfwidth must match ber")

    @property
    def underflow(self) -> np.ndarray:
        """True where the BER is below the reliable floor of 1e-14."""
        return self.ber < UNDERFLOW

    def __len__(self):
        return self.ber.size

    def __eq__(self, other):
        if not isinstance(other, BerCurve):
            return NotImplemented
        ci_equal = (self.ci_halfwidth is None and other.ci_halfwidth is None) or (
            self.ci_halfwidth is not None
            and other.ci_halfwidth is not None
            and np.array_equal(self.ci_halfwidth, other.ci_halfwidth)
        )
        return (
            self.method == other.method
            and self.config_id == other.config_id
            and np.array_equal(self.snr_db, other.snr_db)
            and np.array_equal(self.ber, other.ber)
            and ci_equal
        )

    def rows(self):
        for i in range(len(self)):
            ci = "" if self.ci_halfwidth is None else repr(float(self.ci_halfwidth[i]))
            yield {
                "snr_db": repr(float(self.snr_db[i])),
                "ber": repr(float(self.ber[i])),
                "ci_halfwidth": ci,
                "method": self.method,
                "config_id": self.config_id,
            }


def write_csv(curves, fh) -> None:
    """Write curves as rows of ``snr_db,ber,ci_halfwidth,method,config_id``."""
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for c in curves:
        w.writerows(c.rows())


def read_csv(fh) -> list[BerCurve]:
    """Inverse of :func:`write_csv`; curves come back in file order."""
    groups: dict[tuple[str, str], list[dict]] = {}
    for row in csv.DictReader(fh):
        groups.setdefault((row["config_id"], row["method"]), []).append(row)
    out = []
    for (cid, method), rows in groups.items():
        cis = [r["ci_halfwidth"] for r in rows]
        ci = None if all(c == "" for c in cis) else [float(c) if c else math.nan for c in cis]
        out.append(
            BerCurve(
                [float(r["snr_db"]) for r in rows],
                [float(r["ber"]) for r in rows],
                ci,
                method,
                cid,
            )
        )
    return out
