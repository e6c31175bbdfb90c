"""Special-function kernel: log-gamma, Gaussian Q, and a Meijer G evaluator.

The Meijer G-function is evaluated directly from its Mellin-Barnes integral

    G(z) = 1/(2 pi i) * Int  prod Gamma(b_j - s) prod Gamma(1 - a_i + s)
                             ------------------------------------------- z^s ds
                             prod Gamma(1 - b_j + s) prod Gamma(a_i - s)

along a vertical line through the real saddle point of the integrand, which
sits between the two pole families.  The imaginary coordinate is mapped with
``t = w sinh(u)`` and integrated with the trapezoidal rule, whose error drops
geometrically as the step is halved.  Everything is carried in log space so
that kernels with hundreds of gamma factors and arguments like ``exp(700)``
do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

__all__ = [
    "DomainError",
    "MeijerGError",
    "MeijerGCapabilityError",
    "ContourError",
    "MeijerGAccuracyError",
    "MeijerGSpec",
    "MeijerGResult",
    "log_gamma",
    "q_function",
    "q_approx",
    "meijer_g",
    "meijer_g_result",
    "log_meijer_g",
    "delta_params",
]


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class MeijerGError(ArithmeticError):
    """Base class for Meijer G evaluation failures."""


class MeijerGCapabilityError(MeijerGError):
    """The requested (m, n, p, q) class is not handled by this evaluator."""


class ContourError(MeijerGError):
    """No contour separates the two pole families."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class MeijerGAccuracyError(MeijerGError):
    """Quadrature did not reach the requested accuracy.

    ``estimate`` and ``error`` hold the best value found and its error bound.
    """

    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def log_gamma(z):
    """Principal branch of log Gamma(z) for real or complex input.

    Raises
    ------
    DomainError
        If ``z`` is zero or a negative integer.
    """
    arr = np.asarray(z, dtype=complex)
    poles = (arr.imag == 0) & (arr.real <= 0) & (arr.real == np.round(arr.real))
    if np.any(poles):
        raise DomainError(f"log_gamma has a pole at {arr[poles].ravel()[0].real:g}")
    out = special.loggamma(arr)
    return out if out.ndim else complex(out)


def q_function(x):
    """Gaussian tail probability Q(x) = 0.5 * erfc(x / sqrt(2))."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return out if out.ndim else float(out)


def q_approx(x):
    """Two-exponential approximation exp(-x^2/2)/12 + exp(-2x^2/3)/4."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / 12.0 + np.exp(-2.0 * x * x / 3.0) / 4.0
    return out if out.ndim else float(out)


def delta_params(j: int, x: float) -> list[float]:
    """The parameter run x/j, (x+1)/j, ..., (x+j-1)/j."""
    if j < 1:
        raise ValueError("j must be a positive integer")
    return [(x + i) / j for i in range(j)]


@dataclass(frozen=True)
class MeijerGSpec:
    """Order and parameters of a Meijer G-function G^{m,n}_{p,q}(z | a; b).

    ``kind`` is set at construction to one of

    * ``"pdf"`` -- m = q = 0, n = p, the kernel of the Double GG density;
    * ``"numerator"`` -- otherwise m = q and n = p, every gamma factor in the
      numerator;
    * ``"cdf"`` -- G^{r,1}_{1,r+1}, one top and one trailing bottom parameter
      in the denominator;

    or ``None`` for anything else, which :func:`meijer_g` refuses.
    """

    m: int
    n: int
    a: tuple[float, ...]
    b: tuple[float, ...]
    kind: str | None = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        p, q = len(self.a), len(self.b)
        if not (0 <= self.m <= q and 0 <= self.n <= p):
            raise ValueError(f"invalid Meijer G order m={self.m}, n={self.n}, p={p}, q={q}")
        if self.m == 0 and q == 0 and self.n == p and p > 0:
            kind = "pdf"
        elif self.m == q and self.n == p and p + q > 0:
            kind = "numerator"
        elif p == 1 and self.n == 1 and q >= 2 and self.m == q - 1:
            kind = "cdf"
        else:
            kind = None
        object.__setattr__(self, "kind", kind)

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return len(self.b)


@dataclass(frozen=True)
class MeijerGResult:
    value: float
    error: float


_POLE_DEPTH = 80


class _Kernel:
    """Integrand prod G(bn - s) prod G(1 - an + s) / (prod G(1 - bd + s) prod G(ad - s)) z^s."""

    def __init__(self, bn, an, bd, ad):
        self.bn, self.an, self.bd, self.ad = (np.asarray(v, dtype=float) for v in (bn, an, bd, ad))
        self.poles, self.family = self._pole_table()
        self.base, self.mult, self.sign = self._terms()
        self.sign_mult = self.sign * self.mult

    @property
    def decay(self) -> float:
        return 0.5 * (self.bn.size + self.an.size - self.bd.size - self.ad.size)

    def _pole_table(self):
        j = np.arange(_POLE_DEPTH)
        exact = {}

        def counts(values):
            out = {}
            for v in values.ravel():
                key = round(float(v), 10)
                exact.setdefault(key, float(v))
                out[key] = out.get(key, 0) + 1
            return out

        left = counts(self.an[:, None] - 1.0 - j[None, :])
        for v, n in counts(self.bd[:, None] - 1.0 - j[None, :]).items():
            if v in left:
                left[v] -= n
        right = counts(self.bn[:, None] + j[None, :])
        for v, n in counts(self.ad[:, None] + j[None, :]).items():
            if v in right:
                right[v] -= n
        left = {v for v, n in left.items() if n > 0}
        right = {v for v, n in right.items() if n > 0}
        both = left & right
        keys = sorted(left | right)
        poles = np.array([exact[v] for v in keys])
        # +1 left family, -1 right family, 0 where the families collide
        family = np.array([0 if v in both else (1 if v in left else -1) for v in keys], dtype=int)
        return poles, family

    def _terms(self):
        # every factor is G(base + mult * s) ** sign
        one = lambda v, val: np.full(v.size, val)
        base = np.concatenate([self.bn, 1.0 - self.an, 1.0 - self.bd, self.ad])
        mult = np.concatenate([one(self.bn, -1.0), one(self.an, 1.0), one(self.bd, 1.0), one(self.ad, -1.0)])
        sign = np.concatenate([one(self.bn, 1.0), one(self.an, 1.0), one(self.bd, -1.0), one(self.ad, -1.0)])
        return base, mult, sign

    def log_phi(self, s, L):
        s = np.asarray(s, dtype=complex)
        return s * L + self.sign @ special.loggamma(self.base[:, None] + self.mult[:, None] * s[None, :])

    def log_abs_real(self, x, L):
        return float(x * L + self.sign @ special.gammaln(self.base + self.mult * x))

    def slope(self, x, L):
        return float(L + self.sign_mult @ special.psi(self.base + self.mult * x))

    def curvature(self, x):
        return float(self.sign @ _trigamma(self.base + self.mult * x))


def _trigamma(v):
    v = np.asarray(v, dtype=float)
    pos = v > 0
    out = np.empty_like(v)
    out[pos] = special.zeta(2.0, v[pos])
    neg = ~pos
    if np.any(neg):
        out[neg] = (np.pi / np.sin(np.pi * v[neg])) ** 2 - special.zeta(2.0, 1.0 - v[neg])
    return out


def _kernel(spec: MeijerGSpec) -> _Kernel:
    if spec.kind is None:
        raise MeijerGCapabilityError(
            f"G^{{{spec.m},{spec.n}}}_{{{spec.p},{spec.q}}} is outside the supported classes"
        )
    return _cached_kernel(spec)


@lru_cache(maxsize=512)
def _cached_kernel(spec: MeijerGSpec) -> _Kernel:
    a = np.asarray(spec.a, dtype=float)
    b = np.asarray(spec.b, dtype=float)
    return _Kernel(b[: spec.m], a[: spec.n], b[spec.m:], a[spec.n:])


def _argmin(k: _Kernel, L: float, lo: float, hi: float) -> float:
    """Minimiser of log|integrand| on the pole-free interval (lo, hi) (bracketed Newton)."""
    if np.isfinite(lo) and np.isfinite(hi):
        pad = 1e-13 * max(1.0, abs(lo), abs(hi))
        a, b = lo + pad, hi - pad
    else:
        a = lo + 1e-13 * max(1.0, abs(lo)) if np.isfinite(lo) else None
        b = hi - 1e-13 * max(1.0, abs(hi)) if np.isfinite(hi) else None
        step = 1.0
        if a is None:
            a = (b if b is not None else 0.0) - step
            while k.slope(a, L) > 0 and step < 1e8:
                step *= 2.0
                a -= step
        if b is None:
            step = 1.0
            b = a + step
            while k.slope(b, L) < 0 and step < 1e8:
                step *= 2.0
                b += step
    if k.slope(a, L) >= 0:
        return a
    if k.slope(b, L) <= 0:
        return b
    x = 0.5 * (a + b)
    for _ in range(200):
        g = k.slope(x, L)
        if g > 0:
            b = x
        else:
            a = x
        h = k.curvature(x)
        x_new = x - g / h if h > 0 else 0.5 * (a + b)
        if not (a < x_new < b):
            x_new = 0.5 * (a + b)
        if abs(x_new - x) <= 1e-15 * max(1.0, abs(x)) or b - a <= 1e-15 * max(1.0, abs(x)):
            return x_new
        x = x_new
    return x


def _width(k: _Kernel, x: float) -> float:
    h = k.curvature(x)
    return float(np.clip(1.0 / math.sqrt(h), 1e-12, 1e3)) if h > 0 else 1.0


class _Piece:
    """A partial integral stored as mantissa * exp(log_scale)."""

    __slots__ = ("mantissa", "error", "log_scale")

    def __init__(self, mantissa, error, log_scale):
        self.mantissa, self.error, self.log_scale = mantissa, error, log_scale


def _line(k: _Kernel, L: float, c: float, w: float, tol: float, abs_floor) -> _Piece:
    """(1 / 2 pi i) Int over Re s = c, with t = w sinh(u) and the trapezoidal rule."""
    log_ref = k.log_abs_real(c, L)

    def g(u):
        val = np.exp(k.log_phi(c + 1j * w * np.sinh(u), L) - log_ref)
        return val.real * w * np.cosh(u)

    u_max = 2.0
    g0 = abs(g(np.array([0.0]))[0])
    while u_max < 40.0:
        tail = np.abs(g(np.array([u_max - 0.5, u_max])))
        if np.all(tail <= 1e-18 * max(g0, 1e-300)):
            break
        u_max += 1.0
    h = 0.25
    n = int(math.ceil(u_max / h))
    vals = g(h * np.arange(n + 1))
    total = h * (0.5 * vals[0] + vals[1:].sum())
    mag = h * np.abs(vals).sum()
    err = mag
    for _ in range(9):
        h *= 0.5
        new = g(h * (2 * np.arange(n) + 1))
        refined = 0.5 * total + h * new.sum()
        mag = 0.5 * mag + h * np.abs(new).sum()
        diff = abs(refined - total)
        total = refined
        n *= 2
        # the trapezoidal error decays geometrically in 1/h, so the refined sum
        # is far more accurate than the last difference suggests
        err = max(diff * min(1.0, math.sqrt(diff / mag)), 1e-16 * mag)
        floor = abs_floor(log_ref) if abs_floor else 0.0
        if err <= max(tol * abs(total), floor):
            break
    return _Piece(total / math.pi, err / math.pi, log_ref)


def _loop(k: _Kernel, L: float, x: float, r: float, tol: float) -> _Piece:
    """(1 / 2 pi i) times the counter-clockwise circle integral around s = x."""
    npts = 32
    theta = 2 * np.pi * np.arange(npts) / npts
    e = np.exp(1j * theta)
    lv = k.log_phi(x + r * e, L) + np.log(r * e)
    log_ref = float(lv.real.max())
    total = np.exp(lv - log_ref).sum().real / npts
    err = abs(total)
    while npts < 4096:
        theta = 2 * np.pi * (np.arange(npts) + 0.5) / npts
        e = np.exp(1j * theta)
        lv = k.log_phi(x + r * e, L) + np.log(r * e)
        new = np.exp(lv - log_ref).sum().real / npts
        refined = 0.5 * (total + new)
        err = abs(refined - total)
        total = refined
        npts *= 2
        if err <= max(tol * abs(total), 1e-15):
            break
    return _Piece(total, err, log_ref)


def _evaluate(k: _Kernel, L: float, tol: float):
    poles, family = k.poles, k.family
    lefts = poles[family > 0]
    rights = poles[family < 0]
    lo = lefts.max() if lefts.size else -np.inf
    hi = rights.min() if rights.size else np.inf
    diag = {"log_z": L, "left_max": lo, "right_min": hi}
    if lo < hi:
        a, b = lo, hi
    else:
        below = poles[poles < hi]
        a, b = (below.max() if below.size else -np.inf), hi
    if np.any(family == 0):
        clash = poles[family == 0]
        # a collided pole is harmless only while it never has to be encircled
        if np.any((clash > a) & (clash < b)) or lo >= hi:
            raise ContourError("left and right pole families collide; G is undefined", diag)

    def neighbours(x):
        i = np.searchsorted(poles, x)
        below = poles[i - 1] if i > 0 else -np.inf
        above = poles[i] if i < poles.size else np.inf
        return below, above

    c = _argmin(k, L, a, b)
    w = _width(k, c)
    pieces: list[_Piece] = []
    encircled: set[float] = set()

    def encircle(x, sign):
        if x in encircled:
            return
        encircled.add(x)
        idx = np.searchsorted(poles, x)
        if family[idx] == 0:
            raise ContourError(f"pole families collide at s = {x:g}", diag)
        gaps = np.abs(poles[max(idx - 1, 0): idx + 2] - x)
        gaps = gaps[gaps > 0]
        r = 0.45 * (gaps.min() if gaps.size else 1.0)
        r = min(r, 4.0 / max(abs(L), 1.0), 0.45)
        if r < 1e-12 * max(1.0, abs(x)):
            raise ContourError(f"no room to encircle pole at s = {x:g}", diag)
        piece = _loop(k, L, x, r, tol)
        piece.mantissa *= sign
        pieces.append(piece)

    def loops_scale():
        return max((p.log_scale + math.log(abs(p.mantissa) + 1e-300) for p in pieces), default=-np.inf)

    def place_loops(c):
        wrong = ((family > 0) & (poles > c)) | ((family < 0) & (poles < c))
        for xp, fam in zip(poles[wrong], family[wrong]):
            encircle(float(xp), 1.0 if fam > 0 else -1.0)

    def floor(log_ref):
        ls = loops_scale()
        return tol * math.exp(ls - log_ref) if np.isfinite(ls) and ls - log_ref < 700 else 0.0

    def combine(line):
        parts = pieces + [line]
        ref = max(p.log_scale for p in parts)
        total = sum(p.mantissa * math.exp(p.log_scale - ref) for p in parts)
        error = sum(p.error * math.exp(p.log_scale - ref) for p in parts)
        if total == 0.0:
            return -np.inf, 0.0, np.inf
        return math.log(abs(total)) + ref, math.copysign(1.0, total), error / abs(total)

    place_loops(c)
    best = combine(_line(k, L, c, w, tol, floor))
    if best[2] <= tol:
        return best
    # the line failed to converge: walk the contour past the poles pinning the
    # saddle, one pole at a time, and keep the best-conditioned configuration
    below, above = neighbours(c)
    direction = 1 if above - c < c - below else -1
    for _ in range(32):
        below, above = neighbours(c)
        j = np.searchsorted(poles, c)
        if direction > 0:
            if not np.isfinite(above):
                break
            a, b = above, (poles[j + 1] if j + 1 < poles.size else np.inf)
        else:
            if not np.isfinite(below):
                break
            a, b = (poles[j - 2] if j > 1 else -np.inf), below
        c = _argmin(k, L, a, b)
        w = _width(k, c)
        place_loops(c)
        trial = combine(_line(k, L, c, w, tol, floor))
        if trial[2] < best[2]:
            best = trial
        if best[2] <= tol:
            break
    return best


def log_meijer_g(spec: MeijerGSpec, log_z, tol: float = 1e-12):
    """Evaluate G at ``z = exp(log_z)`` (array) in log form.

    Returns
    -------
    log_abs, sign, rel_err : ndarray
        ``G = sign * exp(log_abs)`` with estimated relative error ``rel_err``.
    """
    k = _kernel(spec)
    log_z = np.atleast_1d(np.asarray(log_z, dtype=float))
    if not np.all(np.isfinite(log_z)):
        raise DomainError("Meijer G argument must be positive and finite")
    if k.decay <= 0:
        raise MeijerGCapabilityError("integrand does not decay along vertical lines")
    out = np.empty((3, log_z.size))
    for i, L in enumerate(log_z.ravel()):
        out[:, i] = _evaluate(k, float(L), tol)
    shape = log_z.shape
    return out[0].reshape(shape), out[1].reshape(shape), out[2].reshape(shape)


def meijer_g_result(spec: MeijerGSpec, z, tol: float = 1e-12, rtol: float = 1e-8):
    """Value and absolute error estimate of G(z) for positive real ``z``."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("Meijer G is evaluated for positive real z only")
    log_abs, sign, rel = log_meijer_g(spec, np.log(z).ravel(), tol=tol)
    value = (sign * np.exp(log_abs)).reshape(z.shape)
    error = (np.abs(value.ravel()) * rel).reshape(z.shape)
    bad = rel > rtol
    if np.any(bad):
        raise MeijerGAccuracyError(
            f"Meijer G relative error {rel.max():.2e} exceeds {rtol:.0e}",
            value if value.ndim else float(value),
            error if error.ndim else float(error),
        )
    if value.ndim == 0:
        return MeijerGResult(float(value), float(error))
    return MeijerGResult(value, error)


def meijer_g(spec: MeijerGSpec, z, tol: float = 1e-12, rtol: float = 1e-8):
    """G^{m,n}_{p,q}(z | a; b) for positive real ``z`` (scalar or array)."""
    return meijer_g_result(spec, z, tol=tol, rtol=rtol).value
