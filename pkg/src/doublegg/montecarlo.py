"""Monte Carlo BER estimates and gain read-out from BER curves.

The default estimator is semi-analytic: fading matrices are drawn from the
channel samplers and the exact conditional error probability is averaged.
A bit-level mode instead transmits random on-off keyed bits through the
faded channel with additive Gaussian noise and counts threshold-detection
errors; it exists to validate the conditional error model itself.

Draws are split into fixed-size blocks.  Block ``b`` uses a Philox
generator keyed by the seed and jumped ``b`` times, and block results are
merged in block order, so the estimate depends only on ``(seed, draws)``
and never on how many worker threads evaluated the blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import channel as _ch
from .ber_numeric import BerCurve, LinkConfig, conditional_ber, db_to_linear

__all__ = ["McSettings", "McResult", "RangeError", "ber_mc", "mc_curve", "gain_at_target", "snr_at_ber"]

# two-sided 99% normal quantile
Z99 = 2.5758293035489004
# blocks per round between checks of the stopping rule
_ROUND = 16


class RangeError(ValueError):
    """The target BER is not bracketed by a curve."""


@dataclass(frozen=True)
class McSettings:
    """Monte Carlo controls.

    Parameters
    ----------
    draws : int
        Number of fading (or bit) draws; an upper bound when
        ``target_rel_ci`` is set.
    seed : int
        Key of the counter-based generator.
    streams : int
        Worker threads.  Has no effect on the result.
    block : int
        Draws per generator block.
    target_rel_ci : float, optional
        Stop early once every 99% half-width is below this fraction of its
        estimate.  Checked every 16 blocks.
    bit_level : bool
        Simulate bits and noise instead of averaging the conditional BER.
    """

    draws: int = 10_000_000
    seed: int = 0
    streams: int = 1
    block: int = 1 << 16
    target_rel_ci: float | None = None
    bit_level: bool = False

    def __post_init__(self):
        if self.draws < 1 or self.block < 1 or self.streams < 1:
            raise ValueError("draws, block and streams must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.target_rel_ci is not None and not self.target_rel_ci > 0:
            raise ValueError("target_rel_ci must be positive")


@dataclass(frozen=True)
class McResult:
    ber: np.ndarray
    ci_halfwidth: np.ndarray
    draws: int

    @property
    def stderr(self) -> np.ndarray:
        return self.ci_halfwidth / Z99


def _sample_matrix(cfg: LinkConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    I = np.empty((n, cfg.M, cfg.N))
    for m, row in enumerate(cfg.channels):
        for k, ch in enumerate(row):
            I[:, m, k] = _ch.sample(ch, rng, n)
    return I


def _bit_errors(cfg: LinkConfig, I, snr, rng):
    """0/1 detection errors of OOK bits, shape (S, n).

    Per aperture ``r = x * s + noise``; the detector forms ``sum(w * r)`` and
    compares it with ``sum(w * s) / 2``.  Signal, weights and noise level are
    chosen so that the error probability given ``I`` is the conditional BER.
    """
    n = I.shape[0]
    M, N = cfg.M, cfg.N
    if M == 1:
        sig = I[:, 0, :]
        if cfg.combiner == "OC":
            w = sig
        elif cfg.combiner == "EGC":
            w = np.ones_like(sig)
        else:
            w = (sig == sig.max(axis=1, keepdims=True)).astype(float)
        sigma = np.sqrt(N / (2.0 * snr))
    else:
        sig = I.sum(axis=1) / M
        w = sig
        sigma = N / np.sqrt(2.0 * snr)
    bits = rng.integers(0, 2, size=n).astype(bool)
    clean = (w * np.where(bits[:, None], sig, 0.0)).sum(axis=1)
    half = 0.5 * (w * sig).sum(axis=1)
    out = np.empty((snr.size, n))
    for i, sd in enumerate(sigma):
        stat = clean + sd * (w * rng.standard_normal(sig.shape)).sum(axis=1)
        out[i] = (stat > half) != bits
    return out


def _block_stats(cfg, snr, settings, b, n):
    rng = np.random.Generator(np.random.Philox(key=settings.seed).jumped(b))
    I = _sample_matrix(cfg, rng, n)
    if settings.bit_level:
        x = _bit_errors(cfg, I, snr, rng)
    else:
        x = conditional_ber(cfg, I, snr)
    mean = x.mean(axis=1)
    m2 = ((x - mean[:, None]) ** 2).sum(axis=1)
    return n, mean, m2


def _merge(acc, part):
    # Chan et al. pairwise update of count, mean and centred sum of squares
    if acc is None:
        return part
    na, ma, sa = acc
    nb, mb, sb = part
    n = na + nb
    d = mb - ma
    return n, ma + d * (nb / n), sa + sb + d * d * (na * nb / n)


def _workers(settings: McSettings) -> int:
    cap = os.environ.get("DOUBLEGG_WORKERS")
    n = settings.streams
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def ber_mc(cfg: LinkConfig, snr, settings: McSettings = McSettings()) -> McResult:
    """Monte Carlo BER at linear average SNR values ``snr``.

    Returns the estimates with 99% normal-approximation half-widths.
    """
    s = np.atleast_1d(np.asarray(snr, dtype=float))
    if np.any(~(s > 0)):
        raise ValueError("average SNR must be positive")
    sizes = [settings.block] * (settings.draws // settings.block)
    if settings.draws % settings.block:
        sizes.append(settings.draws % settings.block)
    acc = None
    with ThreadPoolExecutor(max_workers=_workers(settings)) as pool:
        for start in range(0, len(sizes), _ROUND):
            idx = range(start, min(start + _ROUND, len(sizes)))
            parts = pool.map(lambda b: _block_stats(cfg, s, settings, b, sizes[b]), idx)
            for part in parts:
                acc = _merge(acc, part)
            n, mean, m2 = acc
            half = _half_width(n, m2)
            if settings.target_rel_ci is not None and np.all(half <= settings.target_rel_ci * mean):
                break
    n, mean, m2 = acc
    return McResult(mean, _half_width(n, m2), int(n))


def _half_width(n, m2):
    if n < 2:
        return np.full_like(m2, np.inf)
    return Z99 * np.sqrt(m2 / (n - 1) / n)


def mc_curve(cfg: LinkConfig, settings: McSettings = McSettings(), snr_db=None) -> BerCurve:
    """Monte Carlo BER curve over ``snr_db`` (default: the link's grid)."""
    db = np.asarray(cfg.snr_grid_db if snr_db is None else snr_db, dtype=float)
    res = ber_mc(cfg, db_to_linear(db), settings)
    method = "montecarlo-bit" if settings.bit_level else "montecarlo"
    prov = {
        "seed": settings.seed,
        "draws": res.draws,
        "block": settings.block,
        "generator": "Philox",
        "ci": "99% normal",
    }
    return BerCurve(db, res.ber, res.ci_halfwidth, method, cfg.config_id, prov)


def snr_at_ber(curve: BerCurve, target_ber: float) -> float:
    """SNR (dB) where the curve crosses ``target_ber``.

    Interpolates log10(BER) linearly in dB between the first pair of grid
    points that brackets the target.
    """
    if not 0 < target_ber < 0.5:
        raise ValueError("target BER must be in (0, 0.5)")
    db = np.asarray(curve.snr_db, dtype=float)
    y = np.log10(np.maximum(np.asarray(curve.ber, dtype=float), 1e-300))
    t = math.log10(target_ber)
    for i in range(len(db) - 1):
        if y[i] >= t >= y[i + 1] and y[i] > y[i + 1]:
            return float(db[i] + (y[i] - t) / (y[i] - y[i + 1]) * (db[i + 1] - db[i]))
    raise RangeError(
        f"curve {curve.config_id!r} does not cross BER {target_ber:g} "
        f"on [{db[0]:g}, {db[-1]:g}] dB"
    )


def gain_at_target(curve_ref: BerCurve, curve_new: BerCurve, target_ber: float) -> float:
    """SNR saved (dB) by ``curve_new`` relative to ``curve_ref`` at ``target_ber``."""
    return snr_at_ber(curve_ref, target_ber) - snr_at_ber(curve_new, target_ber)
