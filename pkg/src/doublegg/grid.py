"""Composite Gauss-Kronrod grids in log-irradiance.

Every expectation over a Double GG channel is computed as
``E[g(I)] = Int g(e^x) f(e^x) e^x dx`` on a fixed set of panels in
``x = log I``.  Each panel carries the 15-point Kronrod rule and its embedded
7-point Gauss rule, so one set of density evaluations gives both a value and
an error estimate.  Grids are cached per (channel, panel width).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import channel as _ch

# QUADPACK qk15 abscissae and weights
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.0, 0.129484966168869693270611432679082, 0.0, 0.279705391489276667901467771423780,
    0.0, 0.381830050505118944950369775488975, 0.0, 0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS = np.concatenate([_WG[:-1], _WG[::-1]])


@dataclass(frozen=True)
class ChannelGrid:
    """Nodes and probability masses of one channel on a log-irradiance grid.

    ``mass`` (Kronrod) and ``mass_gauss`` (embedded Gauss) are the weights
    with the density and Jacobian folded in, so ``mass @ g(irradiance)``
    approximates ``E[g(I)]``.
    """

    channel: _ch.DoubleGGParams
    x: np.ndarray
    irradiance: np.ndarray
    mass: np.ndarray
    mass_gauss: np.ndarray
    panel_width: float

    @property
    def size(self) -> int:
        return self.x.size

    def expect(self, values):
        """Kronrod and Gauss estimates of E[g(I)] for tabulated g (last axis = nodes)."""
        values = np.asarray(values)
        return values @ self.mass, values @ self.mass_gauss

    @property
    def cdf(self) -> np.ndarray:
        return _cached_cdf(self.channel, self.panel_width)


def support(ch: _ch.DoubleGGParams) -> tuple[float, float]:
    """Log-irradiance interval outside of which the mass is negligible (< ~1e-30)."""
    mu, sd = _ch.log_irradiance_stats(ch)
    g1, g2 = ch.factors
    # lower tail of the density behaves like I**min(gamma*beta)
    kappa = min(g1.gamma * g1.beta, g2.gamma * g2.beta)
    lo = mu - max(12.0 * sd, 75.0 / kappa)
    hi_tail = 0.0
    for f in (g1, g2):
        t = (f.omega / f.beta) * (f.beta + 70.0 + 12.0 * math.sqrt(f.beta))
        hi_tail += math.log(t) / f.gamma
    hi = max(mu + 12.0 * sd, hi_tail)
    return lo, hi


def default_panel_width(ch: _ch.DoubleGGParams) -> float:
    _, sd = _ch.log_irradiance_stats(ch)
    return float(min(1.0, sd))


def _nodes(lo, hi, width):
    n_panels = max(1, int(math.ceil((hi - lo) / width)))
    edges = lo + width * np.arange(n_panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    x = (mids[:, None] + 0.5 * width * NODES[None, :]).ravel()
    wk = np.tile(0.5 * width * KRONROD, n_panels)
    wg = np.tile(0.5 * width * GAUSS, n_panels)
    return x, wk, wg


@lru_cache(maxsize=64)
def channel_grid(ch: _ch.DoubleGGParams, panel_width: float | None = None) -> ChannelGrid:
    """Cached grid for ``ch``; panels default to the log-irradiance spread (max 1)."""
    if panel_width is None:
        panel_width = default_panel_width(ch)
    lo, hi = support(ch)
    x, wk, wg = _nodes(lo, hi, panel_width)
    irr = np.exp(x)
    dens = np.exp(_ch.log_pdf(ch, irr) + x)
    return ChannelGrid(ch, x, irr, wk * dens, wg * dens, float(panel_width))


@lru_cache(maxsize=64)
def _cached_cdf(ch, panel_width):
    g = channel_grid(ch, panel_width)
    return _ch.cdf(ch, g.irradiance)
