"""Multi-terminal contraction coefficients of binary-symmetric broadcast kernels.

The chi^2 coefficient over BMS inputs reduces to maximizing a polynomial
``f_B`` on ``(0, 1]``; BEC inputs are extremal.  For ``B_{r, lambda}`` this
polynomial has an explicit binomial form.  The SKL coefficient of
``B_{r, lambda}`` equals ``lambda^2`` for r = 3, 4; here that inequality is
checked numerically on a grid of BSC inputs.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass
from functools import lru_cache
from math import comb

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from . import bms
from .errors import DomainError
from .kernels import HyperedgeKernel, b_r_lambda, hyperedge_bp

__all__ = [
    "ContractionReport",
    "SklGridReport",
    "f_r_lambda",
    "f_r_lambda_derivative",
    "f_B",
    "eta_chi2_sym",
    "skl_edge_capacity",
    "verify_skl_contraction",
    "chi2_tight_lambda",
]


def _special_c(r, lam):
    """chi^2 capacity of B_{r, lambda} seen through i identity and r-1-i trivial children."""
    i = np.arange(1, r)
    return i, lam**2 / (lam + (1.0 - lam) * 2.0 ** (1 - i))


def f_r_lambda(r: int, lam: float, eps):
    """Binomial-sum form of ``f_B`` for the special kernel (vectorized in ``eps``)."""
    if r < 3:
        raise DomainError("f_r_lambda needs r >= 3")
    eps = np.asarray(eps, dtype=float)
    if lam == 0:
        return np.zeros_like(eps)[()] if eps.ndim else 0.0
    i, c = _special_c(r, lam)
    binom = np.array([comb(r - 1, k) for k in i], dtype=float)
    e = eps[..., None]
    terms = binom * (1.0 - e) ** (r - 1 - i) * e ** (i - 1) * c
    out = terms.sum(axis=-1) / (r - 1)
    return float(out) if out.ndim == 0 else out


def f_r_lambda_derivative(r: int, lam: float, eps):
    """Closed-form ``d f_{r, lambda} / d eps`` (vectorized in ``eps``)."""
    if r < 3:
        raise DomainError("f_r_lambda_derivative needs r >= 3")
    eps = np.asarray(eps, dtype=float)
    if lam == 0:
        return np.zeros_like(eps)[()] if eps.ndim else 0.0
    i_all, c_all = _special_c(r, lam)
    c = dict(zip(i_all.tolist(), c_all.tolist()))
    e = eps[..., None]
    i = np.arange(2, r)
    binom = np.array([comb(r - 1, k) for k in i], dtype=float)
    coef = np.array([(k - 1) * c[k] - k * c[k - 1] for k in i])
    terms = binom * (1.0 - e) ** (r - 1 - i) * e ** (i - 2) * coef
    out = terms.sum(axis=-1) / (r - 1)
    return float(out) if out.ndim == 0 else out


def _subset_capacities(kernel: HyperedgeKernel) -> np.ndarray:
    """``A[i]``: sum of chi^2 capacities over all size-i sets of perfectly observed children."""
    n = kernel.r - 1
    A = np.zeros(n + 1)
    ident, triv = bms.identity(), bms.trivial()
    if kernel.lam is not None:
        # exchangeable: one representative per subset size
        for i in range(1, n + 1):
            ch = hyperedge_bp(kernel, [ident] * i + [triv] * (n - i))
            A[i] = comb(n, i) * bms.chi2_capacity(ch)
        return A
    for mask in itertools.product((False, True), repeat=n):
        i = sum(mask)
        if i == 0:
            continue
        ch = hyperedge_bp(kernel, [ident if m else triv for m in mask])
        A[i] += bms.chi2_capacity(ch)
    return A


@lru_cache(maxsize=256)
def _cached_subsets(r, table_bytes, lam):
    table = np.frombuffer(table_bytes) if table_bytes is not None else None
    return _subset_capacities(HyperedgeKernel(r, table, lam))


def _kernel_subsets(kernel):
    tb = kernel.row_plus.tobytes() if kernel.row_plus is not None else None
    return _cached_subsets(kernel.r, tb, kernel.lam)


def f_B(kernel: HyperedgeKernel, eps):
    """``C_chi2(BEC_{1-eps}^{x(r-1)} o B) / ((r-1) eps)``; ``eps = 0`` gives the limit."""
    A = _kernel_subsets(kernel)
    n = kernel.r - 1
    eps = np.asarray(eps, dtype=float)
    if np.any((eps < 0) | (eps > 1)):
        raise DomainError("eps must lie in [0, 1]")
    e = eps[..., None]
    i = np.arange(1, n + 1)
    # divide eps^i by eps analytically so that eps = 0 returns the limit
    out = (A[1:] * (1.0 - e) ** (n - i) * e ** (i - 1)).sum(axis=-1) / n
    return float(out) if out.ndim == 0 else out


@dataclass
class ContractionReport:
    """Result of maximizing ``f_B`` over ``eps``.

    ``argmax_eps == 0`` denotes the ``eps -> 0`` limit.  ``poly_coeffs`` are the
    power-basis coefficients of ``f_B``, lowest degree first.
    """

    eta: float
    argmax_eps: float
    poly_coeffs: list
    ks_ratio: float | None = None
    candidates: list | None = None

    def to_json(self) -> str:
        doc = asdict(self)
        doc.pop("candidates")
        return json.dumps(doc)

    def poly(self) -> Polynomial:
        return Polynomial(self.poly_coeffs)


def _chebyshev_nodes(m):
    k = np.arange(m)
    return (1.0 + np.cos((2 * k + 1) * np.pi / (2 * m))) / 2.0


def _bisect_root(fn, a, b, fa, iters=200):
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = fn(m)
        if fm == 0 or b - a < 1e-15:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def eta_chi2_sym(kernel: HyperedgeKernel) -> ContractionReport:
    """``sup_{0 < eps <= 1} f_B(eps)``: chi^2 multi-terminal coefficient over BMS inputs.

    ``f_B`` is interpolated exactly at r-1 Chebyshev nodes, derivative roots are
    isolated by bisection on a fixed partition, and every candidate (the two
    endpoints plus critical points) is re-evaluated directly.
    """
    r = kernel.r
    deg = r - 2
    nodes = _chebyshev_nodes(deg + 1)
    cheb = Chebyshev.fit(nodes, f_B(kernel, nodes), deg, domain=[0.0, 1.0])
    candidates = [0.0, 1.0]
    if deg >= 2:
        dcheb = cheb.deriv()
        grid = np.linspace(0.0, 1.0, 10 * deg + 1)
        vals = dcheb(grid)
        for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if fa == 0:
                candidates.append(float(a))
            elif fa * fb < 0:
                candidates.append(_bisect_root(dcheb, a, b, fa))
    values = [f_B(kernel, e) for e in candidates]
    best = int(np.argmax(values))
    eta = float(values[best])
    coeffs = cheb.convert(kind=Polynomial, domain=[0.0, 1.0], window=[0.0, 1.0]).coef
    coeffs = np.pad(coeffs, (0, deg + 1 - coeffs.size)).tolist()
    ratio = None
    if kernel.lam is not None and kernel.lam > 0:
        ratio = eta / kernel.lam**2
    return ContractionReport(eta, float(candidates[best]), coeffs, ratio, list(zip(candidates, values)))


def chi2_tight_lambda(r: int, lo: float = 1e-3, hi: float = 0.2, tol: float = 1e-6) -> float:
    """Smallest lambda (by bisection) with ``eta_chi2_sym(B_{r, lambda}) <= lambda^2``.

    Assumes the predicate is monotone in lambda on ``[lo, hi]``; ``hi`` must satisfy it.
    """

    def tight(lam):
        return eta_chi2_sym(b_r_lambda(r, lam)).eta <= lam**2 * (1 + 1e-12)

    if tight(lo):
        return lo
    if not tight(hi):
        raise DomainError(f"lambda = {hi} is not tight for r = {r}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if tight(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _arctanh_sum3(lam, t1, t2):
    return np.arctanh(lam * (t1 + t2) / (1.0 + lam * t1 * t2))


def _skl_r3(lam, t1, t2):
    return lam * (
        0.5 * (t1 + t2) * _arctanh_sum3(lam, t1, t2)
        + 0.5 * (t1 - t2) * _arctanh_sum3(lam, t1, -t2)
    )


def _g4(lam, t1, t2, t3):
    s = t1 + t2 + t3 + t1 * t2 * t3
    return s * np.arctanh(lam * s / (1.0 + lam * (t1 * t2 + t2 * t3 + t3 * t1)))


def _skl_r4(lam, t1, t2, t3):
    return lam / 4.0 * (
        _g4(lam, t1, t2, t3) + _g4(lam, t1, -t2, t3) + _g4(lam, t1, t2, -t3) + _g4(lam, t1, -t2, -t3)
    )


def skl_edge_capacity(r: int, lam: float, thetas):
    """SKL capacity of ``(BSC x ... x BSC) o B_{r, lambda}`` for r in {3, 4}.

    ``thetas`` has a trailing axis of length r-1; leading axes broadcast.
    """
    th = np.asarray(thetas, dtype=float)
    if r not in (3, 4):
        raise DomainError("closed-form SKL capacity is available for r = 3, 4 only")
    if th.shape[-1] != r - 1:
        raise DomainError(f"need {r - 1} thetas")
    if not 0.0 <= lam < 1.0 or np.any(th < 0) or np.any(th >= 1):
        raise DomainError("need lambda in [0, 1) and thetas in [0, 1)")
    cols = [th[..., j] for j in range(r - 1)]
    out = _skl_r3(lam, *cols) if r == 3 else _skl_r4(lam, *cols)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class SklGridReport:
    """Largest value of ``LHS - lambda^2 * sum_i theta_i arctanh theta_i`` on a theta grid.

    The all-zero grid point (where both sides vanish) is excluded.
    """

    r: int
    lam: float
    grid_step: float
    max_gap: float
    witness: list

    def to_json(self) -> str:
        return json.dumps(
            {"r": self.r, "lambda": self.lam, "grid_step": self.grid_step,
             "max_gap": self.max_gap, "witness": self.witness}
        )

    def recompute_gap(self) -> float:
        w = np.asarray(self.witness)
        return float(skl_edge_capacity(self.r, self.lam, w) - self.lam**2 * np.sum(w * np.arctanh(w)))


def verify_skl_contraction(r: int, lam: float, grid_step: float) -> SklGridReport:
    if not 0.0 < grid_step <= 0.1:
        raise DomainError("grid_step must lie in (0, 0.1]")
    n_pts = int(round(1.0 / grid_step))
    axis = np.arange(n_pts) * grid_step  # caps theta at 1 - grid_step
    mesh = np.stack(np.meshgrid(*[axis] * (r - 1), indexing="ij"), axis=-1)
    pts = mesh.reshape(-1, r - 1)[1:]  # drop the origin; lexicographic order kept
    lhs = skl_edge_capacity(r, lam, pts)
    rhs = np.sum(pts * np.arctanh(pts), axis=1)
    gap = lhs - lam**2 * rhs
    k = int(np.argmax(gap))
    return SklGridReport(r, float(lam), float(grid_step), float(gap[k]), pts[k].tolist())
