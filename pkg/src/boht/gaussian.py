"""Large-degree Gaussian approximation of the chi^2 BP recursion.

For large mean degree d the chi^2 capacity after one BP step is close to
``g(s_{r,d,lambda}(x))`` where ``x`` is the chi^2 capacity before the step,

    s_r(x) = ((1 + x)^(r-1) - (1 - x)^(r-1)) / (2 (r - 1)),
    s_{r,d,lambda}(x) = d lambda^2 (r - 1) s_r(x),
    g(s) = E tanh(s + sqrt(s) Z),  Z ~ N(0, 1).

A nonzero fixed point of this map with ``(r-1) d lambda^2 < 1`` signals
reconstruction below the Kesten-Stigum line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError

DEFAULT_ORDER = 96
NONZERO_TOL = 1e-6

__all__ = [
    "GaussMap",
    "BelowKsResult",
    "s_poly",
    "gaussian_g",
    "g_r_d_lambda",
    "fixed_point",
    "ks_scan",
    "below_ks_search",
    "write_scan_csv",
]


POLE_PAIRS = 4
_POLES = (np.arange(POLE_PAIRS) + 0.5) * np.pi


@lru_cache(maxsize=16)
def _hermite(n_q):
    x, w = special.roots_hermite(n_q)
    return math.sqrt(2.0) * x, w / math.sqrt(math.pi)


def _pole_terms(y):
    # partial-fraction terms of tanh for the poles at +-i(k + 1/2)pi, k < POLE_PAIRS
    return (2.0 * y[..., None] / (y[..., None] ** 2 + _POLES**2)).sum(axis=-1)


def _pole_expectation(s):
    """Exact ``E[2Y / (Y^2 + a^2)]`` summed over the subtracted poles, ``Y ~ N(s, s)``.

    ``E[1 / (Y - ia)] = i sqrt(pi / 2) / sigma * w((ia - mu) / (sqrt(2) sigma))``
    with ``w`` the Faddeeva function.
    """
    sig = np.sqrt(s)[..., None]
    zeta = (1j * _POLES - s[..., None]) / (math.sqrt(2.0) * sig)
    vals = 2.0 * np.real(1j * math.sqrt(math.pi / 2.0) / sig * special.wofz(zeta))
    return vals.sum(axis=-1)


def s_poly(r: int, x):
    """``s_r(x)``; vectorized in ``x``."""
    if r < 2:
        raise DomainError("s_r needs r >= 2")
    x = np.asarray(x, dtype=float)
    out = ((1.0 + x) ** (r - 1) - (1.0 - x) ** (r - 1)) / (2.0 * (r - 1))
    return float(out) if out.ndim == 0 else out


def gaussian_g(s, n_q: int = DEFAULT_ORDER):
    """``E tanh(s + sqrt(s) Z)`` by Gauss-Hermite quadrature of order ``n_q``.

    Seen as a function of ``Z``, tanh has poles at distance ``pi / (2 sqrt(s))``
    from the real axis, which ruins plain Gauss-Hermite convergence for
    moderate ``s``.  The nearest ``POLE_PAIRS`` pole pairs are therefore
    subtracted and integrated in closed form; the quadrature only sees the
    smooth remainder.
    """
    if n_q < 32:
        raise DomainError("quadrature order must be at least 32")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(np.isnan(s)):
        raise DomainError("g(s) needs s >= 0")
    z, w = _hermite(n_q)
    pos = s > 0
    sp = s[pos]
    y = sp[..., None] + np.sqrt(sp)[..., None] * z
    out = np.zeros(s.shape)
    out[pos] = (np.tanh(y) - _pole_terms(y)) @ w + _pole_expectation(sp)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GaussMap:
    """The map ``x -> g(s_{r,d,lambda}(x))`` on [0, 1]."""

    r: int
    d: float
    lam: float
    n_q: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.r < 2 or self.d < 0 or not 0.0 <= self.lam <= 1.0 or self.n_q < 32:
            raise DomainError("need r >= 2, d >= 0, lambda in [0, 1] and n_q >= 32")

    @property
    def ks_ratio(self) -> float:
        return (self.r - 1) * self.d * self.lam**2

    def s(self, x):
        return self.d * self.lam**2 * (self.r - 1) * s_poly(self.r, x)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > 1):
            raise DomainError("x must lie in [0, 1]")
        return gaussian_g(self.s(x), self.n_q)


def g_r_d_lambda(r: int, d: float, lam: float, x, n_q: int = DEFAULT_ORDER):
    return GaussMap(r, d, lam, n_q)(x)


def _iterate(maps_s, r, n_q, x0, tol, max_iter):
    """Vectorized fixed-point iteration; ``maps_s`` holds ``d lambda^2 (r - 1)`` per map."""
    x = np.full(maps_s.shape, float(x0))
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iter):
        nxt = gaussian_g(maps_s[active] * s_poly(r, x[active]), n_q)
        nxt = np.atleast_1d(nxt)
        done = np.abs(nxt - x[active]) < tol
        x[active] = nxt
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        if not active.any():
            return x
    raise ConvergenceError(f"fixed-point iteration did not converge in {max_iter} steps")


def fixed_point(r: int, d: float, lam: float, x0: float = 1.0, tol: float = 1e-10,
                max_iter: int = 10**4, n_q: int = DEFAULT_ORDER) -> float:
    """Largest fixed point of the Gaussian map, reached by iterating from ``x0``.

    The iterates decrease monotonically from 1; 0 means only the trivial
    fixed point exists.
    """
    m = GaussMap(r, d, lam, n_q)
    if not 0.0 <= x0 <= 1.0:
        raise DomainError("x0 must lie in [0, 1]")
    coef = np.array([m.d * m.lam**2 * (m.r - 1)])
    return float(_iterate(coef, r, n_q, x0, tol, max_iter)[0])


def ks_scan(r: int, d: float, ratios, tol: float = 1e-10, max_iter: int = 10**6,
            n_q: int = DEFAULT_ORDER):
    """Gaussian fixed points along ``(r-1) d lambda^2 = ratio``.

    Returns rows ``(r, d, lambda, ks_ratio, fixed_point)``.  Near the line the
    trivial fixed point attracts slowly, hence the generous iteration cap.
    """
    if d <= 0:
        raise DomainError("d must be positive")
    ratios = np.asarray(ratios, dtype=float)
    lams = np.sqrt(ratios / ((r - 1) * d))
    if np.any(lams > 1):
        raise DomainError("ratio too large for lambda <= 1")
    fps = _iterate(ratios.copy(), r, n_q, 1.0, tol, max_iter)
    return [(r, float(d), float(l), float(q), float(f)) for l, q, f in zip(lams, ratios, fps)]


@dataclass(frozen=True)
class BelowKsResult:
    lam: float
    fixed_point: float
    ks_ratio: float


def below_ks_search(r: int, d: float, step: float = 1e-3, lo: float = 0.90, hi: float = 1.00):
    """Smallest ratio in ``[lo, hi)`` on a ``step`` grid whose Gaussian fixed point is nonzero.

    Returns ``(result, rows)``; ``result`` is None when every fixed point on the
    grid is trivial.
    """
    n = int(round((hi - lo) / step))
    ratios = lo + step * np.arange(n)
    rows = ks_scan(r, d, ratios)
    for row in rows:
        if row[4] > NONZERO_TOL:
            lam = row[2]
            return BelowKsResult(lam, row[4], (r - 1) * d * lam**2), rows
    return None, rows


def write_scan_csv(rows, path) -> None:
    lines = ["r,d,lambda,ks_ratio,fixed_point"]
    lines += [f"{r},{d!r},{lam!r},{q!r},{fp!r}" for r, d, lam, q, fp in rows]
    Path(path).write_text("\n".join(lines) + "\n")
