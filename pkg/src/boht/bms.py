"""Binary memoryless symmetric channels as finite mixtures of BSCs.

A BMS channel is stored through the law of its theta-component: a BSC with
crossover ``delta`` has ``theta = 1 - 2 * delta``.  Every information measure
used in this package is an expectation of an even function of theta, so a
finite list of ``(weight, theta)`` atoms is enough.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

MERGE_TOL = 1e-12
_WEIGHT_TOL = 1e-12

__all__ = [
    "BmsChannel",
    "make_bsc",
    "trivial",
    "identity",
    "chi2_capacity",
    "skl_capacity",
    "capacity",
    "star_convolve",
    "star_power",
    "quantize",
    "draw_tilted",
    "mixture",
]


def _frozen(a):
    a = np.array(a, dtype=float, copy=True).reshape(-1)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class BmsChannel:
    """Finite BSC mixture ``sum_i weights[i] * BSC(theta = thetas[i])``.

    Instances built through :meth:`from_atoms` are normalized: atoms are sorted
    by theta, atoms closer than ``MERGE_TOL`` are merged and the weights are
    rescaled to sum to one.
    """

    weights: np.ndarray
    thetas: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        t = _frozen(self.thetas)
        if w.shape != t.shape or w.size == 0:
            raise DomainError("weights and thetas must be non-empty and of equal length")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite and non-negative")
        if abs(w.sum() - 1.0) > _WEIGHT_TOL * max(1, w.size):
            raise DomainError(f"weights sum to {w.sum()!r}, expected 1")
        if np.any(t < 0) or np.any(t > 1) or not np.all(np.isfinite(t)):
            raise DomainError("thetas must lie in [0, 1]")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "thetas", t)

    @classmethod
    def from_atoms(cls, weights, thetas, tol: float = MERGE_TOL) -> "BmsChannel":
        """Build a normalized channel from raw (possibly unsorted) atoms.

        Zero-weight atoms are dropped, thetas are clipped into ``[0, 1]`` to
        absorb rounding, and the total weight is rescaled to one.
        """
        w = np.asarray(weights, dtype=float).reshape(-1)
        t = np.abs(np.asarray(thetas, dtype=float).reshape(-1))
        if w.shape != t.shape:
            raise DomainError("weights and thetas must have equal length")
        if np.any(w < 0):
            raise DomainError("weights must be non-negative")
        keep = w > 0
        w, t = w[keep], np.clip(t[keep], 0.0, 1.0)
        total = w.sum()
        if total <= 0:
            raise DomainError("channel has no mass")
        order = np.argsort(t, kind="stable")
        w, t = w[order] / total, t[order]
        if t.size > 1:
            new_group = np.empty(t.size, dtype=bool)
            new_group[0] = True
            new_group[1:] = np.diff(t) > tol
            starts = np.flatnonzero(new_group)
            if starts.size < t.size:
                gw = np.add.reduceat(w, starts)
                gt = np.add.reduceat(w * t, starts) / gw
                w, t = gw, np.clip(gt, 0.0, 1.0)
        return cls(w / w.sum(), t)

    @property
    def deltas(self) -> np.ndarray:
        """Crossover probabilities of the component BSCs."""
        return (1.0 - self.thetas) / 2.0

    def __len__(self):
        return self.weights.size

    def atoms(self):
        return list(zip(self.weights.tolist(), self.thetas.tolist()))

    def allclose(self, other: "BmsChannel", atol: float = 1e-10) -> bool:
        """Atom-for-atom comparison of two normalized channels."""
        return (
            len(self) == len(other)
            and np.allclose(self.weights, other.weights, rtol=0, atol=atol)
            and np.allclose(self.thetas, other.thetas, rtol=0, atol=atol)
        )

    def __repr__(self):
        if len(self) <= 6:
            body = ", ".join(f"({w:.6g}, {t:.6g})" for w, t in self.atoms())
        else:
            body = f"{len(self)} atoms"
        return f"BmsChannel({body})"


def make_bsc(theta: float) -> BmsChannel:
    """BSC with theta-component ``theta`` (crossover ``(1 - theta) / 2``)."""
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0, 1], got {theta}")
    return BmsChannel(np.array([1.0]), np.array([theta]))


def trivial() -> BmsChannel:
    return make_bsc(0.0)


def identity() -> BmsChannel:
    return make_bsc(1.0)


def mixture(channels, probs) -> BmsChannel:
    """Convex combination of channels (the channel that picks one at random)."""
    probs = np.asarray(probs, dtype=float)
    w = np.concatenate([p * c.weights for p, c in zip(probs, channels)])
    t = np.concatenate([c.thetas for c in channels])
    return BmsChannel.from_atoms(w, t)


def chi2_capacity(P: BmsChannel) -> float:
    return float(np.dot(P.weights, P.thetas**2))


def _theta_arctanh(t):
    with np.errstate(divide="ignore"):
        return t * np.arctanh(t)


def skl_capacity(P: BmsChannel) -> float:
    """``E[theta * arctanh(theta)]``; infinite when a theta-one atom has mass."""
    if np.any((P.thetas >= 1.0) & (P.weights > 0)):
        return float("inf")
    return float(np.dot(P.weights, _theta_arctanh(P.thetas)))


def _binary_entropy_gap(delta):
    # log 2 + d log d + (1 - d) log(1 - d), with 0 log 0 = 0
    d = np.asarray(delta, dtype=float)
    out = np.full(d.shape, np.log(2.0))
    out += np.where(d > 0, d * np.log(np.where(d > 0, d, 1.0)), 0.0)
    e = 1.0 - d
    out += np.where(e > 0, e * np.log(np.where(e > 0, e, 1.0)), 0.0)
    return out


def capacity(P: BmsChannel) -> float:
    """Shannon capacity in nats."""
    return float(np.dot(P.weights, _binary_entropy_gap(P.deltas)))


def _star_atoms(wp, tp, wq, tq):
    w = np.multiply.outer(wp, wq).ravel()
    prod = np.multiply.outer(tp, tq).ravel()
    s = np.add.outer(tp, tq).ravel()
    diff = np.abs(np.subtract.outer(tp, tq)).ravel()
    w_plus = w * (1.0 + prod) / 2.0
    w_minus = w * (1.0 - prod) / 2.0
    t_plus = s / (1.0 + prod)
    ok = w_minus > 0
    t_minus = np.zeros_like(diff)
    t_minus[ok] = diff[ok] / (1.0 - prod[ok])
    return np.concatenate([w_plus, w_minus[ok]]), np.concatenate([t_plus, t_minus[ok]])


def star_convolve(P: BmsChannel, Q: BmsChannel) -> BmsChannel:
    """Channel observing the same input through independent copies of P and Q."""
    w, t = _star_atoms(P.weights, P.thetas, Q.weights, Q.thetas)
    return BmsChannel.from_atoms(w, t)


def star_power(P: BmsChannel, n: int, bins: int | None = None) -> BmsChannel:
    """``P`` star-convolved with itself ``n`` times (``n = 0`` gives the trivial channel).

    With ``bins`` set, every intermediate product is quantized.
    """
    if n < 0:
        raise DomainError("star power must be non-negative")
    out = trivial()
    for _ in range(n):
        out = star_convolve(out, P)
        if bins is not None:
            out = quantize(out, bins)
    return out


def _bin_index(thetas, bins):
    return np.minimum((np.asarray(thetas) * bins).astype(np.int64), bins - 1)


def _bin_accumulate(weights, thetas, bins, acc_w, acc_wt):
    idx = _bin_index(thetas, bins)
    acc_w += np.bincount(idx, weights=weights, minlength=bins)
    acc_wt += np.bincount(idx, weights=weights * thetas, minlength=bins)


def _from_bins(acc_w, acc_wt) -> BmsChannel:
    keep = acc_w > 0
    w = acc_w[keep]
    t = np.clip(acc_wt[keep] / w, 0.0, 1.0)
    return BmsChannel.from_atoms(w, t)


def quantize(P: BmsChannel, bins: int) -> BmsChannel:
    """Collapse atoms onto a uniform theta grid of ``bins`` cells.

    Each occupied cell becomes one atom at the weighted mean theta of its
    contents, which is a degradation of ``P`` and preserves ``E theta``.
    """
    bins = int(bins)
    if bins < 1:
        raise DomainError("bins must be at least 1")
    acc_w = np.zeros(bins)
    acc_wt = np.zeros(bins)
    _bin_accumulate(P.weights, P.thetas, bins, acc_w, acc_wt)
    return _from_bins(acc_w, acc_wt)


def draw_tilted(P: BmsChannel, rng: np.random.Generator, size=None):
    """Sample the signed posterior tilt seen at the output when the input is ``+``.

    An atom is picked with probability equal to its weight, then ``+theta`` is
    returned with probability ``(1 + theta) / 2`` and ``-theta`` otherwise.
    """
    n = 1 if size is None else int(np.prod(size))
    idx = rng.choice(len(P), size=n, p=P.weights)
    t = P.thetas[idx]
    sign = np.where(rng.random(n) < (1.0 + t) / 2.0, 1.0, -1.0)
    out = sign * t
    if size is None:
        return float(out[0])
    return out.reshape(size)
