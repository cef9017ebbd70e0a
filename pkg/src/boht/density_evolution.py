"""Density evolution for broadcasting on Galton-Watson hypertrees.

Three independent routes to ``C_chi2(M_k)``, the chi^2 capacity of the channel
from the root label to the depth-k leaf labels:

* population dynamics (``monte_carlo``): a cloud of signed posterior tilts,
  conditioned on the root being ``+``, pushed through the BP operator;
* exact propagation of quantized BSC mixtures (``exact_quantized``);
* direct simulation of labeled hypertrees followed by exact upward BP.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numba as nb
import numpy as np
from scipy import stats

from . import _rng, bms
from .bms import BmsChannel
from .errors import DomainError, ResourceError
from .kernels import HyperedgeKernel, b_r_lambda, hyperedge_bp, sign_patterns

if "NUMBA_THREADING_LAYER" not in os.environ:
    # skip probing an incompatible TBB runtime; OpenMP and workqueue both suit
    # the single parallel loop used here
    nb.config.THREADING_LAYER = "omp"

ATANH_CLAMP = 38.0
EXACT_FLOOR = 1e-9
EXACT_PLATEAU = 1e-6
POISSON_TAIL = 1e-10
TREE_BUDGET = 10**8

__all__ = [
    "OffspringSpec",
    "DeConfig",
    "Trajectory",
    "Verdict",
    "de_step",
    "run_de",
    "exact_de",
    "decide_reconstruction",
    "tree_mc_estimate",
    "find_threshold",
    "sample_patterns",
    "pattern_weights",
]


class Verdict(str, Enum):
    RECONSTRUCTION = "reconstruction"
    NON_RECONSTRUCTION = "non_reconstruction"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class OffspringSpec:
    """Law of the number of downward hyperedges per vertex."""

    kind: str
    d: float

    def __post_init__(self):
        if self.kind not in ("fixed", "poisson"):
            raise DomainError(f"offspring kind must be 'fixed' or 'poisson', got {self.kind!r}")
        if self.d < 0:
            raise DomainError("offspring mean must be non-negative")
        if self.kind == "fixed" and int(self.d) != self.d:
            raise DomainError("fixed offspring needs an integer d")

    @property
    def mean(self) -> float:
        return float(self.d)

    def truncated_pmf(self, tail: float = POISSON_TAIL):
        """Support and probabilities; Poisson tail beyond ``t_max`` folded into ``t_max``."""
        if self.kind == "fixed":
            return np.array([int(self.d)]), np.array([1.0])
        if self.d == 0:
            return np.array([0]), np.array([1.0])
        ts = np.arange(int(self.d + 30.0 * math.sqrt(self.d) + 60.0))
        # smallest t whose upper tail P(T > t) is below ``tail``
        t_max = int(np.argmax(stats.poisson.sf(ts, self.d) < tail))
        ts = ts[: t_max + 1]
        p = stats.poisson.pmf(ts, self.d)
        p[-1] += 1.0 - p.sum()
        return ts, p

    def sample(self, rng: np.random.Generator, size):
        if self.kind == "fixed":
            return np.full(size, int(self.d), dtype=np.int64)
        return rng.poisson(self.d, size)

    def _cdf_table(self):
        if self.kind == "fixed":
            return np.ones(1)
        _, p = self.truncated_pmf(1e-17)
        c = np.cumsum(p)
        c[-1] = 1.0
        return c


@dataclass(frozen=True)
class DeConfig:
    """Settings for one density-evolution run.

    Give either ``lam`` (the special kernel B_{r, lambda}) or a general
    ``kernel``.  ``bins`` is only used in ``exact_quantized`` mode.
    """

    r: int
    offspring: OffspringSpec
    lam: float | None = None
    kernel: HyperedgeKernel | None = None
    pop_size: int = 100_000
    max_iters: int = 50
    seed: int = 0
    mode: str = "monte_carlo"
    bins: int = 256
    floor_coeff: float = 5.0
    threads: int | None = None

    def __post_init__(self):
        if (self.lam is None) == (self.kernel is None):
            raise DomainError("give exactly one of lam or kernel")
        if self.kernel is not None and self.kernel.r != self.r:
            raise DomainError("kernel hyperedge size does not match r")
        if self.lam is not None and not 0.0 <= self.lam <= 1.0:
            raise DomainError("lambda must lie in [0, 1]")
        if self.mode not in ("monte_carlo", "exact_quantized"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.mode == "monte_carlo" and self.pop_size < 1000:
            raise DomainError("monte_carlo mode needs pop_size >= 1000")
        if self.mode == "exact_quantized" and self.bins < 64:
            raise DomainError("exact_quantized mode needs bins >= 64")
        if self.max_iters < 1:
            raise DomainError("max_iters must be positive")

    def broadcast_kernel(self) -> HyperedgeKernel:
        return self.kernel if self.kernel is not None else b_r_lambda(self.r, self.lam)

    @property
    def noise_floor(self) -> float:
        if self.mode == "exact_quantized":
            return EXACT_FLOOR
        return self.floor_coeff / math.sqrt(self.pop_size)

    @property
    def plateau_width(self) -> float:
        if self.mode == "exact_quantized":
            return EXACT_PLATEAU
        return self.noise_floor

    @property
    def ks_ratio(self) -> float | None:
        if self.lam is None:
            return None
        return (self.r - 1) * self.offspring.mean * self.lam**2

    def echo(self) -> dict:
        doc = asdict(self)
        if self.kernel is not None:
            doc["kernel"] = {"r": self.kernel.r, "row_plus": self.kernel.table.tolist()}
        return doc


@dataclass
class Trajectory:
    """Per-iteration statistics of a density-evolution run (row 0 is the identity channel)."""

    iters: list = field(default_factory=list)
    chi2: list = field(default_factory=list)
    skl: list = field(default_factory=list)
    capacity: list = field(default_factory=list)
    count: list = field(default_factory=list)
    verdict: Verdict | None = None
    config: DeConfig | None = None
    wall_time_s: float = 0.0

    def append(self, k, chi2, skl, cap, count):
        self.iters.append(int(k))
        self.chi2.append(float(chi2))
        self.skl.append(float(skl))
        self.capacity.append(float(cap))
        self.count.append(int(count))

    def __len__(self):
        return len(self.iters)

    def to_csv(self, path) -> None:
        lines = ["iter,chi2,skl,capacity,count"]
        for row in zip(self.iters, self.chi2, self.skl, self.capacity, self.count):
            k, c, s, cap, n = row
            lines.append(f"{k},{c!r},{s!r},{cap!r},{n}")
        Path(path).write_text("\n".join(lines) + "\n")

    def sidecar(self) -> dict:
        return {
            "verdict": None if self.verdict is None else self.verdict.value,
            "config": None if self.config is None else self.config.echo(),
            "wall_time_s": self.wall_time_s,
        }

    def write(self, csv_path) -> Path:
        """Write the CSV and a ``<name>.json`` sidecar next to it; returns the sidecar path."""
        csv_path = Path(csv_path)
        self.to_csv(csv_path)
        side = csv_path.with_suffix(".json")
        side.write_text(json.dumps(self.sidecar()))
        return side


# ---------------------------------------------------------------------------
# numba kernels


@nb.njit(inline="always", cache=True)
def _atanh_clamped(x):
    if x >= 1.0:
        return ATANH_CLAMP
    if x <= -1.0:
        return -ATANH_CLAMP
    v = np.arctanh(x)
    if v > ATANH_CLAMP:
        return ATANH_CLAMP
    if v < -ATANH_CLAMP:
        return -ATANH_CLAMP
    return v


@nb.njit(inline="always", cache=True)
def _draw_offspring(st, fixed, d_int, cdf):
    if fixed:
        return st, d_int
    st, u = _rng.next_uniform(st)
    lo = 0
    hi = cdf.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return st, lo


@nb.njit(inline="always", cache=True)
def _special_pattern(st, thetas, n, lam, xs):
    """Folded sign pattern of a B_{r, lambda} hyperedge; writes signs into ``xs``.

    With probability lambda the children copy the root and each child's
    observation agrees with it with probability (1 + theta_j) / 2; otherwise
    every pattern is equally likely.  Returns the pattern code (bit j set when
    child j reads ``-``, most significant bit first, first bit always 0).
    """
    st, u = _rng.next_uniform(st)
    code = 0
    if u < lam:
        for j in range(n):
            st, v = _rng.next_uniform(st)
            xs[j] = 1.0 if v < 0.5 * (1.0 + thetas[j]) else -1.0
        if xs[0] < 0:
            for j in range(n):
                xs[j] = -xs[j]
    else:
        st, bits = _rng.next_u64(st)
        xs[0] = 1.0
        for j in range(1, n):
            xs[j] = 1.0 - 2.0 * np.float64((bits >> np.uint64(j)) & np.uint64(1))
    for j in range(n):
        code = 2 * code + (1 if xs[j] < 0 else 0)
    return st, code


@nb.njit(inline="always", cache=True)
def _special_theta(thetas, xs, n, lam):
    pp = 1.0
    pm = 1.0
    for j in range(n):
        pp *= 1.0 + thetas[j] * xs[j]
        pm *= 1.0 - thetas[j] * xs[j]
    den = lam * (pp + pm) + 2.0 * (1.0 - lam)
    if den <= 0.0:
        return 0.0
    return abs(lam * (pp - pm) / den)


@nb.njit(cache=True)
def _general_masses(thetas, n, kmat, lik, mplus):
    size = 1 << n
    for z in range(size):
        p = 1.0
        for j in range(n):
            sgn = -1.0 if (z >> (n - 1 - j)) & 1 else 1.0
            p *= 0.5 * (1.0 + thetas[j] * sgn)
        lik[z] = p
    for x in range(size):
        acc = 0.0
        for z in range(size):
            acc += lik[z] * kmat[z, x]
        mplus[x] = acc


@nb.njit(cache=True)
def _general_pattern(st, thetas, n, kmat, lik, mplus):
    """Inverse-CDF draw of a folded pattern with weight m_+(x) + m_+(-x); returns (st, code, theta)."""
    _general_masses(thetas, n, kmat, lik, mplus)
    size = 1 << n
    half = size >> 1
    st, u = _rng.next_uniform(st)
    total = 0.0
    for x in range(half):
        total += mplus[x] + mplus[size - 1 - x]
    target = u * total
    acc = 0.0
    pick = half - 1
    for x in range(half):
        acc += mplus[x] + mplus[size - 1 - x]
        if target < acc:
            pick = x
            break
    a = mplus[pick]
    b = mplus[size - 1 - pick]
    th = 0.0
    if a + b > 0:
        th = abs(a - b) / (a + b)
    return st, pick, th


@nb.njit(parallel=True, cache=True)
def _step_kernel(pop_abs, out, n, lam, general, kmat, fixed, d_int, cdf, seed, iteration):
    n_pop = pop_abs.size
    for i in nb.prange(out.size):
        st = _rng.stream_state(seed, _rng.STREAM_DE, iteration, i)
        st, t = _draw_offspring(st, fixed, d_int, cdf)
        buf = np.empty(n)
        xs = np.empty(n)
        lik = np.empty(1 << n if general else 1)
        mplus = np.empty(1 << n if general else 1)
        acc = 0.0
        for _ in range(t):
            for j in range(0, n - 1, 2):
                st, k1, k2 = _rng.next_index_pair(st, n_pop)
                buf[j] = pop_abs[k1]
                buf[j + 1] = pop_abs[k2]
            if n % 2:
                st, k1 = _rng.next_index(st, n_pop)
                buf[n - 1] = pop_abs[k1]
            if general:
                st, code, te = _general_pattern(st, buf, n, kmat, lik, mplus)
            else:
                st, code = _special_pattern(st, buf, n, lam, xs)
                te = _special_theta(buf, xs, n, lam)
            st, v = _rng.next_uniform(st)
            acc += _atanh_clamped(te - 2.0 * te * (v >= 0.5 * (1.0 + te)))
        out[i] = np.tanh(acc)


@nb.njit(cache=True)
def _pattern_kernel(thetas, lam, general, kmat, seed, draws):
    n = thetas.size
    counts = np.zeros(1 << (n - 1), dtype=np.int64)
    xs = np.empty(n)
    lik = np.empty(1 << n if general else 1)
    mplus = np.empty(1 << n if general else 1)
    for i in range(draws):
        st = _rng.stream_state(seed, _rng.STREAM_PATTERN, 0, i)
        if general:
            st, code, te = _general_pattern(st, thetas, n, kmat, lik, mplus)
        else:
            st, code = _special_pattern(st, thetas, n, lam, xs)
        counts[code] += 1
    return counts


def _xor_matrix(kernel):
    size = 2 ** (kernel.r - 1)
    idx = np.arange(size)
    return np.ascontiguousarray(kernel.table[np.bitwise_xor.outer(idx, idx)])


def _kernel_args(kernel: HyperedgeKernel):
    if kernel.lam is not None:
        return float(kernel.lam), False, np.zeros((1, 1))
    return 0.0, True, _xor_matrix(kernel)


def sample_patterns(kernel: HyperedgeKernel, thetas, draws: int, seed: int = 0) -> np.ndarray:
    """Counts of folded sign patterns drawn by the population sampler for fixed child thetas."""
    thetas = np.ascontiguousarray(thetas, dtype=float)
    if thetas.size != kernel.r - 1:
        raise DomainError(f"need {kernel.r - 1} thetas")
    lam, general, kmat = _kernel_args(kernel)
    return _pattern_kernel(thetas, lam, general, kmat, np.uint64(seed), int(draws))


def pattern_weights(kernel: HyperedgeKernel, thetas) -> np.ndarray:
    """Exact probabilities of the folded sign patterns (enumerated Bayes weights)."""
    chans = [bms.make_bsc(t) for t in thetas]
    from .kernels import hyperedge_atoms

    w, _ = hyperedge_atoms(kernel, chans, method="bayes")
    return w


def _set_threads(threads):
    if threads is None:
        import os

        env = os.environ.get("HT_THREADS")
        threads = int(env) if env else None
    if threads is not None:
        nb.set_num_threads(max(1, min(int(threads), nb.config.NUMBA_NUM_THREADS)))


def de_step(pop: np.ndarray, cfg: DeConfig, iteration: int = 1) -> np.ndarray:
    """One application of the BP operator to a population of signed tilts.

    Randomness for output sample ``i`` comes from the stream
    ``(cfg.seed, iteration, i)``, so the result does not depend on the thread count.
    """
    pop = np.asarray(pop, dtype=float)
    if pop.size == 0:
        raise DomainError("population is empty")
    kernel = cfg.broadcast_kernel()
    lam, general, kmat = _kernel_args(kernel)
    off = cfg.offspring
    fixed = off.kind == "fixed"
    out = np.empty(cfg.pop_size)
    _step_kernel(
        np.ascontiguousarray(np.abs(pop)),
        out,
        cfg.r - 1,
        lam,
        general,
        kmat,
        fixed,
        int(off.d) if fixed else 0,
        off._cdf_table(),
        np.uint64(cfg.seed),
        np.uint64(iteration),
    )
    return out


def _sample_stats(pop):
    a = np.abs(pop)
    chi2 = float(np.mean(a * a))
    if np.any(a >= 1.0):
        skl = math.inf
    else:
        skl = float(np.mean(a * np.arctanh(a)))
    cap = float(np.mean(bms._binary_entropy_gap((1.0 - a) / 2.0)))
    return chi2, skl, cap


def decide_reconstruction(traj: Trajectory, cfg: DeConfig) -> Verdict:
    """Finite-iteration verdict from the tail of a chi^2 trajectory.

    Uses the last ``min(10, len(traj))`` rows.  Non-reconstruction: the final
    value is under the noise floor and the window never rises by more than two
    floors.  Reconstruction: the window sits above four floors with spread below
    the plateau width.  Anything else is inconclusive.
    """
    if len(traj) < 2:
        raise DomainError("need at least two trajectory rows")
    floor = cfg.noise_floor
    win = np.asarray(traj.chi2[-10:])
    rises = np.diff(win)
    if win[-1] < floor and np.all(rises <= 2 * floor):
        return Verdict.NON_RECONSTRUCTION
    if np.all(win > 4 * floor) and np.ptp(win) < cfg.plateau_width:
        return Verdict.RECONSTRUCTION
    return Verdict.INCONCLUSIVE


def run_de(cfg: DeConfig, callback=None) -> Trajectory:
    """Iterate the BP operator from the identity channel for ``cfg.max_iters`` steps."""
    if cfg.mode == "exact_quantized":
        return exact_de(cfg, callback)
    _set_threads(cfg.threads)
    start = time.perf_counter()
    traj = Trajectory(config=cfg)
    pop = np.ones(cfg.pop_size)
    traj.append(0, *_sample_stats(pop), pop.size)
    for k in range(1, cfg.max_iters + 1):
        pop = de_step(pop, cfg, k)
        traj.append(k, *_sample_stats(pop), pop.size)
        if callback is not None:
            callback(k, pop)
    traj.verdict = decide_reconstruction(traj, cfg)
    traj.wall_time_s = time.perf_counter() - start
    return traj


def _exact_budget(cfg: DeConfig):
    ts, p = cfg.offspring.truncated_pmf()
    n = cfg.r - 1
    if n * cfg.offspring.mean > 12:
        raise ResourceError("exact mode needs (r - 1) * d <= 12")
    if ts[-1] > 64:
        raise ResourceError("exact mode needs a truncated offspring support of at most 64")
    if n > 1 and cfg.bins ** n * 2 ** (n - 1) > 2**34:
        raise ResourceError("exact mode hyperedge enumeration exceeds 2^34 atoms")
    return ts, p


def bp_exact(P: BmsChannel, kernel: HyperedgeKernel, ts, probs, bins: int | None) -> BmsChannel:
    """One exact BP step: hyperedge update, then star powers mixed over the offspring law."""
    edge = hyperedge_bp(kernel, [P] * (kernel.r - 1), bins=bins)
    acc_w = np.zeros(0)
    acc_t = np.zeros(0)
    power = bms.trivial()
    parts_w, parts_t = [], []
    for t in range(int(ts[-1]) + 1):
        if t > 0:
            power = bms.star_convolve(power, edge)
            if bins is not None:
                power = bms.quantize(power, bins)
        k = np.searchsorted(ts, t)
        if k < ts.size and ts[k] == t and probs[k] > 0:
            parts_w.append(probs[k] * power.weights)
            parts_t.append(power.thetas)
    acc_w = np.concatenate(parts_w)
    acc_t = np.concatenate(parts_t)
    out = BmsChannel.from_atoms(acc_w, acc_t)
    return bms.quantize(out, bins) if bins is not None else out


def exact_de(cfg: DeConfig, callback=None) -> Trajectory:
    """Deterministic density evolution on quantized BSC mixtures."""
    if cfg.mode != "exact_quantized":
        raise DomainError("exact_de needs mode='exact_quantized'")
    ts, p = _exact_budget(cfg)
    kernel = cfg.broadcast_kernel()
    start = time.perf_counter()
    traj = Trajectory(config=cfg)
    P = bms.identity()
    traj.append(0, bms.chi2_capacity(P), bms.skl_capacity(P), bms.capacity(P), len(P))
    for k in range(1, cfg.max_iters + 1):
        P = bp_exact(P, kernel, ts, p, cfg.bins)
        traj.append(k, bms.chi2_capacity(P), bms.skl_capacity(P), bms.capacity(P), len(P))
        if callback is not None:
            callback(k, P)
    traj.verdict = decide_reconstruction(traj, cfg)
    traj.wall_time_s = time.perf_counter() - start
    return traj


def _edge_tilts(kernel: HyperedgeKernel, u: np.ndarray) -> np.ndarray:
    """Signed posterior tilt of a hyperedge given its children's signed tilts (rows of ``u``)."""
    if kernel.lam is not None:
        lam = kernel.lam
        pp = np.prod(1.0 + u, axis=1)
        pm = np.prod(1.0 - u, axis=1)
        den = lam * (pp + pm) + 2.0 * (1.0 - lam)
        return np.where(den > 0, lam * (pp - pm) / np.where(den > 0, den, 1.0), 0.0)
    y = sign_patterns(kernel.r - 1)
    lik = np.prod((1.0 + u[:, None, :] * y[None, :, :]) / 2.0, axis=2)
    m_plus = lik @ kernel.table
    m_minus = lik @ kernel.table[::-1]
    tot = m_plus + m_minus
    return np.where(tot > 0, (m_plus - m_minus) / np.where(tot > 0, tot, 1.0), 0.0)


def _tree_batch(kernel, offspring, depth, n_trees, rng):
    n = kernel.r - 1
    labels = [np.ones(n_trees)]
    parents = []
    table = kernel.table if kernel.lam is None else None
    patterns = sign_patterns(n) if table is not None else None
    for _ in range(depth):
        sig = labels[-1]
        t = offspring.sample(rng, sig.size)
        par = np.repeat(np.arange(sig.size), t)
        s = sig[par]
        m = par.size
        if table is None:
            copy = rng.random(m) < kernel.lam
            kids = np.where(rng.random((m, n)) < 0.5, 1.0, -1.0)
            kids[copy] = 1.0
        else:
            kids = patterns[rng.choice(table.size, size=m, p=table)].astype(float)
        kids *= s[:, None]
        parents.append(par)
        labels.append(kids.ravel())
    tilt = labels[-1]
    for level in range(depth - 1, -1, -1):
        par = parents[level]
        e = _edge_tilts(kernel, tilt.reshape(-1, n)) if par.size else np.zeros(0)
        with np.errstate(divide="ignore"):
            a = np.clip(np.arctanh(np.clip(e, -1.0, 1.0)), -ATANH_CLAMP, ATANH_CLAMP)
        tilt = np.tanh(np.bincount(par, weights=a, minlength=labels[level].size))
    return tilt


def tree_mc_estimate(
    r: int,
    lam: float | None,
    offspring: OffspringSpec,
    depth: int,
    n_trees: int,
    seed: int = 0,
    kernel: HyperedgeKernel | None = None,
    batch: int = 20_000,
):
    """Estimate ``C_chi2(M_depth)`` by sampling labeled hypertrees rooted at ``+``.

    Each tree is explored to ``depth`` with leaves observed exactly, BP is run
    upward, and the root's signed posterior tilt is averaged.  Returns
    ``(estimate, standard_error)``.
    """
    if kernel is None:
        kernel = b_r_lambda(r, lam)
    if depth < 0:
        raise DomainError("depth must be non-negative")
    if depth == 0:
        return 1.0, 0.0
    expected = ((r - 1) * offspring.mean) ** depth * n_trees
    if expected > TREE_BUDGET:
        raise ResourceError(f"expected tree size {expected:.3g} exceeds {TREE_BUDGET:.0e}")
    rng = np.random.default_rng(seed)
    tilts = [
        _tree_batch(kernel, offspring, depth, min(batch, n_trees - s), rng)
        for s in range(0, n_trees, batch)
    ]
    tilts = np.concatenate(tilts)
    return float(tilts.mean()), float(tilts.std(ddof=1) / math.sqrt(tilts.size))


def _classify(traj: Trajectory, cfg: DeConfig) -> bool:
    """True when a run counts as reconstruction for bisection purposes."""
    if traj.verdict == Verdict.RECONSTRUCTION:
        return True
    if traj.verdict == Verdict.NON_RECONSTRUCTION:
        return False
    return traj.chi2[-1] >= cfg.noise_floor


def find_threshold(
    r: int,
    d: float,
    kind: str = "poisson",
    tol: float = 2e-3,
    pop_size: int = 200_000,
    max_iters: int = 100,
    seed: int = 0,
    floor_coeff: float = 5.0,
    threads: int | None = None,
    callback=None,
) -> dict:
    """Bisect on lambda for the reconstruction threshold of B_{r, lambda} at fixed offspring.

    Inconclusive runs are classified by whether their last chi^2 value clears
    the noise floor.  Returns the estimate, the Kesten-Stigum value
    ``1 / sqrt((r - 1) d)`` and the list of runs.
    """
    off = OffspringSpec(kind, d)

    def probe(lam):
        cfg = DeConfig(
            r=r, offspring=off, lam=lam, pop_size=pop_size, max_iters=max_iters,
            seed=seed, floor_coeff=floor_coeff, threads=threads,
        )
        traj = run_de(cfg)
        rec = _classify(traj, cfg)
        runs.append({"lambda": lam, "verdict": traj.verdict.value, "chi2": traj.chi2[-1], "recon": rec})
        if callback is not None:
            callback(runs[-1])
        return rec

    runs: list = []
    lam_ks = 1.0 / math.sqrt((r - 1) * d) if (r - 1) * d > 0 else math.inf
    lo, hi = 0.0, 1.0
    if not probe(hi):
        return {"lambda_star": None, "lambda_ks": lam_ks, "runs": runs}
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            hi = mid
        else:
            lo = mid
    return {"lambda_star": 0.5 * (lo + hi), "lambda_ks": lam_ks, "runs": runs}
