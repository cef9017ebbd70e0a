"""Broadcast kernels, the per-hyperedge BP update and HSBM parameter algebra."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bms
from .bms import BmsChannel
from .errors import DomainError, ResourceError

MAX_TABLE_R = 16
DEFAULT_MAX_ATOMS = 2**20

__all__ = [
    "HyperedgeKernel",
    "ModelParams",
    "b_r_lambda",
    "hyperedge_bp",
    "hyperedge_atoms",
    "hsbm_params",
    "params_to_ab",
    "load_kernel",
    "save_kernel",
    "sign_patterns",
]


def sign_patterns(n: int) -> np.ndarray:
    """All of ``{+1, -1}^n`` in lexicographic order with ``+`` before ``-``.

    Row ``k`` has ``-1`` in column ``j`` iff bit ``n - 1 - j`` of ``k`` is set,
    so the first coordinate is the most significant bit.
    """
    k = np.arange(2**n)[:, None]
    bits = (k >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return 1 - 2 * bits


@dataclass(frozen=True, eq=False)
class HyperedgeKernel:
    """Binary-symmetric one-to-(r-1) broadcast kernel.

    ``row_plus[k]`` is ``B(x | +)`` for the k-th pattern of
    :func:`sign_patterns`; ``B(x | -)`` is ``B(-x | +)``.  ``lam`` is set when
    the kernel is the special ``B_{r, lambda}`` and enables the closed-form
    hyperedge update.
    """

    r: int
    row_plus: np.ndarray | None
    lam: float | None = None

    def __post_init__(self):
        if self.r < 2:
            raise DomainError("hyperedge size r must be at least 2")
        if self.row_plus is None:
            if self.lam is None:
                raise DomainError("a kernel needs a table or a lambda")
            return
        if self.r > MAX_TABLE_R:
            raise ResourceError(f"table kernels are limited to r <= {MAX_TABLE_R}")
        row = np.array(self.row_plus, dtype=float).reshape(-1)
        if row.size != 2 ** (self.r - 1):
            raise DomainError(f"row_plus must have 2^(r-1) = {2 ** (self.r - 1)} entries")
        if np.any(row < 0) or abs(row.sum() - 1.0) > 1e-12:
            raise DomainError("row_plus must be a probability vector")
        # coordinate marginals under a uniform root must be uniform
        x = sign_patterns(self.r - 1)
        both = (row + row[::-1]) / 2.0  # row[::-1] is B(-x|+) = B(x|-)
        marg = both @ (x == 1)
        if np.any(np.abs(marg - 0.5) > 1e-12):
            raise DomainError("kernel violates the uniform-marginal condition")
        row.flags.writeable = False
        object.__setattr__(self, "row_plus", row)

    @property
    def table(self) -> np.ndarray:
        """``B(x | +)`` as a dense vector, materialized for B_{r, lambda} on demand."""
        if self.row_plus is not None:
            return self.row_plus
        if self.r > MAX_TABLE_R:
            raise ResourceError(f"table kernels are limited to r <= {MAX_TABLE_R}")
        row = np.full(2 ** (self.r - 1), (1.0 - self.lam) / 2 ** (self.r - 1))
        row[0] += self.lam
        return row

    def prob(self, x, y: int = 1) -> float:
        """``B(x | y)`` for a sign vector ``x`` and root sign ``y``."""
        x = np.asarray(x) * y
        k = int("".join("1" if v < 0 else "0" for v in x), 2)
        return float(self.table[k])


def b_r_lambda(r: int, lam: float) -> HyperedgeKernel:
    """The special kernel: copy the root to all r-1 children w.p. lambda, else uniform."""
    if int(r) != r or r < 2:
        raise DomainError(f"r must be an integer >= 2, got {r}")
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    r = int(r)
    if r <= MAX_TABLE_R:
        row = np.full(2 ** (r - 1), (1.0 - lam) / 2 ** (r - 1))
        row[0] += lam
        return HyperedgeKernel(r, row, lam)
    return HyperedgeKernel(r, None, lam)


def _atom_product(inputs):
    """Weights and theta matrix over the Cartesian product of input atoms."""
    grids_t = np.meshgrid(*[c.thetas for c in inputs], indexing="ij")
    grids_w = np.meshgrid(*[c.weights for c in inputs], indexing="ij")
    thetas = np.stack([g.ravel() for g in grids_t], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in grids_w], axis=1), axis=1)
    return weights, thetas


def _special_atoms(lam, r, weights, thetas):
    """Closed-form atoms of ``(BSC x ... x BSC) o B_{r, lambda}``.

    One atom per folded sign pattern ``x`` with ``x_1 = +``.  Output is ordered
    pattern-major to match :func:`_bayes_atoms`.
    """
    xs = sign_patterns(r - 2)
    xs = np.hstack([np.ones((xs.shape[0], 1), dtype=int), xs])
    tx = thetas[None, :, :] * xs[:, None, :]  # (pattern, atom, coordinate)
    p_plus = np.prod(1.0 + tx, axis=2)
    p_minus = np.prod(1.0 - tx, axis=2)
    pw = lam * (p_plus + p_minus) / 2 ** (r - 1) + (1.0 - lam) / 2 ** (r - 2)
    num = lam * (p_plus - p_minus)
    den = lam * (p_plus + p_minus) + 2.0 * (1.0 - lam)
    with np.errstate(invalid="ignore", divide="ignore"):
        th = np.where(den > 0, np.abs(num / den), 0.0)
    return (pw * weights[None, :]).ravel(), th.ravel()


def _bayes_atoms(kernel, weights, thetas):
    """Generic Bayes update for an arbitrary binary-symmetric kernel table.

    ``m_+(x) = sum_y B(y|+) prod_j (1 + theta_j x_j y_j) / 2`` and
    ``m_-(x) = m_+(-x)``.  Sign products become XOR on the bit encoding, so the
    sum over ``y`` is a product with the matrix ``K[z, x] = B(x xor z | +)``.
    """
    n = kernel.r - 1
    size = 2**n
    z = sign_patterns(n)
    lik = np.prod((1.0 + thetas[:, None, :] * z[None, :, :]) / 2.0, axis=2)  # (atom, z)
    idx = np.arange(size)
    kmat = kernel.table[np.bitwise_xor.outer(idx, idx)]
    m_plus = lik @ kmat  # (atom, x)
    half = size // 2  # patterns with x_1 = + are the first half
    mp = m_plus[:, :half]
    mm = m_plus[:, size - 1 - np.arange(half)]  # m_+(-x)
    tot = mp + mm
    with np.errstate(invalid="ignore", divide="ignore"):
        th = np.where(tot > 0, np.abs(mp - mm) / tot, 0.0)
    return (tot * weights[:, None]).T.ravel(), th.T.ravel()


def hyperedge_atoms(kernel: HyperedgeKernel, inputs, method: str = "auto"):
    """Raw (unnormalized, unmerged) atoms of ``(P_1 x ... x P_{r-1}) o B``.

    ``method`` is ``"closed_form"`` (requires B_{r, lambda}), ``"bayes"`` or
    ``"auto"``.  Atoms are ordered pattern-major, then by input-atom product.
    """
    weights, thetas = _atom_product(inputs)
    if method == "auto":
        method = "closed_form" if kernel.lam is not None else "bayes"
    if method == "closed_form":
        if kernel.lam is None:
            raise DomainError("closed form requires a B_{r, lambda} kernel")
        return _special_atoms(kernel.lam, kernel.r, weights, thetas)
    if method == "bayes":
        return _bayes_atoms(kernel, weights, thetas)
    raise DomainError(f"unknown method {method!r}")


def hyperedge_bp(
    kernel: HyperedgeKernel,
    inputs,
    *,
    bins: int | None = None,
    max_atoms: int = DEFAULT_MAX_ATOMS,
    method: str = "auto",
) -> BmsChannel:
    """BMS channel from the hyperedge root to the observations of its r-1 children.

    ``inputs[j]`` is the channel through which child ``j`` is observed.  When the
    projected atom count exceeds ``max_atoms`` the product is enumerated in
    chunks and quantized to ``bins`` cells, which must then be supplied.
    """
    inputs = list(inputs)
    if len(inputs) != kernel.r - 1:
        raise DomainError(f"expected {kernel.r - 1} input channels, got {len(inputs)}")
    n_patterns = 2 ** (kernel.r - 2)
    projected = n_patterns * math.prod(len(c) for c in inputs)
    if projected <= max_atoms:
        w, t = hyperedge_atoms(kernel, inputs, method)
        out = BmsChannel.from_atoms(w, t)
        return bms.quantize(out, bins) if bins is not None else out
    if bins is None:
        raise ResourceError(
            f"hyperedge update would produce {projected} atoms (> {max_atoms}); pass bins"
        )
    # chunk over the atoms of the first input, accumulating straight into bins
    first, rest = inputs[0], inputs[1:]
    per_atom = projected // len(first)
    step = max(1, max_atoms // per_atom)
    acc_w = np.zeros(bins)
    acc_wt = np.zeros(bins)
    for s in range(0, len(first), step):
        mass = first.weights[s : s + step].sum()
        if mass <= 0:
            continue
        part = BmsChannel(first.weights[s : s + step] / mass, first.thetas[s : s + step])
        w, t = hyperedge_atoms(kernel, [part] + rest, method)
        bms._bin_accumulate(w * mass, t, bins, acc_w, acc_wt)
    return bms._from_bins(acc_w, acc_wt)


@dataclass(frozen=True)
class ModelParams:
    """Two-community HSBM rates and the matching BOHT parameters."""

    r: int
    a: float
    b: float
    d: float
    alpha: float
    beta: float
    lam: float
    snr: float

    @property
    def ks_ratio(self) -> float:
        """``(r - 1) d lambda^2``; the Kesten-Stigum line is at 1."""
        return self.snr


def hsbm_params(r: int, a: float, b: float) -> ModelParams:
    if r < 2 or int(r) != r:
        raise DomainError("r must be an integer >= 2")
    if b < 0 or a < b:
        raise DomainError(f"need a >= b >= 0, got a={a}, b={b}")
    r = int(r)
    scale = 2.0 ** (r - 1)
    d = ((a - b) + scale * b) / scale
    alpha = (r - 1) * d
    beta = (r - 1) * (a - b) / scale
    lam = beta / alpha if alpha > 0 else 0.0
    return ModelParams(r, float(a), float(b), d, alpha, beta, lam, alpha * lam**2)


def params_to_ab(r: int, d: float, lam: float) -> tuple[float, float]:
    """Invert :func:`hsbm_params`: rates ``(a, b)`` giving mean degree d and strength lambda."""
    if d < 0 or not 0.0 <= lam <= 1.0:
        raise DomainError("need d >= 0 and lambda in [0, 1]")
    scale = 2.0 ** (r - 1)
    b = d * (1.0 - lam)
    return b + lam * scale * d, b


def load_kernel(source) -> HyperedgeKernel:
    """Read a kernel from a JSON document ``{"r": int, "row_plus": [...]}``.

    ``source`` may be a path or an already parsed mapping.
    """
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text())
    else:
        doc = dict(source)
    if set(doc) != {"r", "row_plus"}:
        raise DomainError(f"kernel document must have exactly keys r, row_plus; got {sorted(doc)}")
    r = doc["r"]
    if not isinstance(r, int) or isinstance(r, bool):
        raise DomainError("r must be an integer")
    return HyperedgeKernel(r, np.asarray(doc["row_plus"], dtype=float))


def save_kernel(kernel: HyperedgeKernel, path) -> None:
    doc = {"r": kernel.r, "row_plus": [float(v) for v in kernel.table]}
    Path(path).write_text(json.dumps(doc))
