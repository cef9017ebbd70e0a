"""Hypergraph stochastic block models: sampling and local-structure statistics.

Each r-subset ``S`` of ``[n]`` is a hyperedge independently with probability
``A[labels of S] / C(n, r - 1)``.  Sampling goes class by class: for every
multiset of labels the number of present hyperedges among the subsets of that
class is Binomial, and the hyperedges themselves are a uniform sample without
replacement from the class.  This has the same law as flipping one coin per
subset, at cost proportional to the number of hyperedges.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import DomainError, ResourceError
from .kernels import ModelParams, hsbm_params

EDGE_BUDGET = 10**8
ENUM_LIMIT = 2**16

__all__ = [
    "HsbmParams",
    "HsbmGraph",
    "Neighborhood",
    "CouplingReport",
    "two_community",
    "sample_hsbm",
    "degree_profile",
    "neighborhood",
    "coupling_stats",
    "write_graph",
    "read_graph",
]


@dataclass(frozen=True, eq=False)
class HsbmParams:
    """``n`` vertices, ``q`` labels with prior ``pi`` and a symmetric rate tensor ``A`` of shape ``(q,) * r``."""

    n: int
    q: int
    r: int
    pi: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        if self.q < 2 or self.r < 2 or self.n < self.r:
            raise DomainError("need q >= 2, r >= 2 and n >= r")
        pi = np.asarray(self.pi, dtype=float)
        A = np.asarray(self.A, dtype=float)
        if pi.shape != (self.q,) or np.any(pi <= 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise DomainError("pi must be a full-support probability vector of length q")
        if A.shape != (self.q,) * self.r:
            raise DomainError(f"A must have shape {(self.q,) * self.r}")
        if np.any(A < 0) or not np.all(np.isfinite(A)):
            raise DomainError("A must be finite and non-negative")
        for perm in itertools.permutations(range(self.r)):
            if not np.allclose(A, A.transpose(perm), rtol=0, atol=1e-12):
                raise DomainError("A is not invariant under index permutations")
        if A.max() / math.comb(self.n - 1, self.r - 1) > 1.0:
            raise DomainError("a hyperedge probability exceeds 1")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "A", A)

    @property
    def scale(self) -> int:
        """``C(n, r - 1)``, the normalizer turning rates into probabilities."""
        return math.comb(self.n - 1, self.r - 1)

    def edge_probability(self, labels) -> float:
        return float(self.A[tuple(labels)] / self.scale)


def two_community(n: int, r: int, a: float, b: float) -> HsbmParams:
    """Symmetric two-label model: rate ``a`` for monochromatic hyperedges, ``b`` otherwise."""
    if b < 0 or a < 0:
        raise DomainError("rates must be non-negative")
    A = np.full((2,) * r, float(b))
    A[(0,) * r] = a
    A[(1,) * r] = a
    return HsbmParams(n, 2, r, np.array([0.5, 0.5]), A)


@dataclass(eq=False)
class HsbmGraph:
    """Vertex labels and hyperedges (rows of sorted vertex ids, lexicographically ordered)."""

    n: int
    r: int
    labels: np.ndarray
    hyperedges: np.ndarray
    _incidence: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.hyperedges = np.asarray(self.hyperedges, dtype=np.int64).reshape(-1, self.r)
        if self.labels.shape != (self.n,):
            raise DomainError("labels must have length n")

    @property
    def n_edges(self) -> int:
        return self.hyperedges.shape[0]

    def incidence(self):
        """CSR arrays ``(offsets, edge_ids)`` listing the hyperedges at each vertex."""
        if self._incidence is None:
            flat = self.hyperedges.ravel()
            owner = np.repeat(np.arange(self.n_edges), self.r)
            order = np.argsort(flat, kind="stable")
            offsets = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(np.bincount(flat, minlength=self.n), out=offsets[1:])
            self._incidence = (offsets, owner[order])
        return self._incidence

    def degrees(self) -> np.ndarray:
        offsets, _ = self.incidence()
        return np.diff(offsets)


def _class_size(group_sizes, mult):
    return math.prod(math.comb(g, m) for g, m in zip(group_sizes, mult))


def _enumerate_class(groups, mult):
    per_label = [list(itertools.combinations(g.tolist(), m)) for g, m in zip(groups, mult) if m]
    return per_label


def _draw_class_subsets(rng, groups, mult, count, size):
    """``count`` distinct subsets drawn uniformly from the class ``prod_i C(groups[i], mult[i])``."""
    if count == 0:
        return np.zeros((0, sum(mult)), dtype=np.int64)
    if size <= ENUM_LIMIT:
        per_label = _enumerate_class(groups, mult)
        radices = [len(p) for p in per_label]
        picks = rng.choice(size, size=count, replace=False)
        rows = []
        for idx in picks.tolist():
            members = []
            for rad, combos in zip(reversed(radices), reversed(per_label)):
                idx, k = divmod(idx, rad)
                members.extend(combos[k])
            rows.append(sorted(members))
        return np.array(rows, dtype=np.int64)
    if count > size // 4:
        raise ResourceError("class too dense for rejection sampling and too large to enumerate")
    chosen: set = set()
    out = []
    while len(out) < count:
        batch = int(1.2 * (count - len(out))) + 8
        parts = [g[rng.integers(0, g.size, (batch, m))] for g, m in zip(groups, mult) if m]
        cand = np.sort(np.hstack(parts), axis=1)
        ok = np.all(np.diff(cand, axis=1) > 0, axis=1)
        for row in cand[ok]:
            key = tuple(row.tolist())
            if key not in chosen:
                chosen.add(key)
                out.append(row)
                if len(out) == count:
                    break
    return np.array(out, dtype=np.int64)


def _class_rng(seed, idx):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(idx)]))


def sample_hsbm(params: HsbmParams, seed: int = 0) -> HsbmGraph:
    """Draw labels i.i.d. from ``pi`` and hyperedges class by class.

    The label stream and each class's stream are keyed by ``(seed, index)``,
    so the graph is a deterministic function of ``seed``.
    """
    n, q, r = params.n, params.q, params.r
    labels = _class_rng(seed, 0).choice(q, size=n, p=params.pi)
    groups = [np.flatnonzero(labels == i) for i in range(q)]
    sizes = [g.size for g in groups]
    classes = list(itertools.combinations_with_replacement(range(q), r))
    plan = []
    expected = 0.0
    for combo in classes:
        mult = [combo.count(i) for i in range(q)]
        size = _class_size(sizes, mult)
        p = params.edge_probability(combo)
        expected += size * p
        plan.append((mult, size, p))
    if r * expected > EDGE_BUDGET:
        raise ResourceError(f"expected n * degree {r * expected:.3g} exceeds {EDGE_BUDGET:.0e}")
    blocks = []
    for k, (mult, size, p) in enumerate(plan, start=1):
        if size == 0 or p == 0:
            continue
        rng = _class_rng(seed, k)
        count = int(rng.binomial(size, p)) if size < 2**62 else int(rng.poisson(size * p))
        blocks.append(_draw_class_subsets(rng, groups, mult, count, size))
    edges = np.vstack(blocks) if blocks else np.zeros((0, r), dtype=np.int64)
    if edges.shape[0]:
        edges = edges[np.lexsort(edges.T[::-1])]
    return HsbmGraph(n, r, labels, edges)


def degree_profile(params: HsbmParams):
    """Expected degree per label, ``d_i = sum A[i, i_1..i_{r-1}] prod pi[i_j]``, and the indistinguishability flag."""
    t = params.A
    for _ in range(params.r - 1):
        t = t @ params.pi
    d = np.asarray(t, dtype=float)
    return d, bool(d.max() - d.min() < 1e-9)


@dataclass
class Neighborhood:
    """Depth-k ball around ``root``: vertices with distances and the hyperedges explored from them."""

    root: int
    depth: int
    vertices: np.ndarray
    dist: np.ndarray
    labels: np.ndarray
    hyperedges: np.ndarray
    is_hypertree: bool

    def level_counts(self) -> np.ndarray:
        return np.bincount(self.dist, minlength=self.depth + 1)


def neighborhood(G: HsbmGraph, v: int, k: int) -> Neighborhood:
    """Breadth-first ball of radius ``k`` (vertices sharing a hyperedge are at distance 1).

    Hyperedges incident to vertices at distance ``< k`` are explored.  The
    flag tells whether the explored hypergraph is a linear hypertree, i.e. its
    vertex-hyperedge incidence graph is a tree.
    """
    if not 0 <= v < G.n or k < 0:
        raise DomainError("need 0 <= v < n and k >= 0")
    offsets, eids = G.incidence()
    dist = {v: 0}
    frontier = [v]
    seen_edges: dict = {}
    for level in range(k):
        nxt = []
        for u in frontier:
            for e in eids[offsets[u] : offsets[u + 1]].tolist():
                if e in seen_edges:
                    continue
                seen_edges[e] = None
                for w in G.hyperedges[e].tolist():
                    if w not in dist:
                        dist[w] = level + 1
                        nxt.append(w)
        frontier = nxt
    verts = np.fromiter(dist.keys(), dtype=np.int64, count=len(dist))
    dists = np.fromiter(dist.values(), dtype=np.int64, count=len(dist))
    edges = G.hyperedges[np.fromiter(seen_edges.keys(), dtype=np.int64, count=len(seen_edges))]
    # connected by construction: a tree iff incidences = vertices + hyperedges - 1
    tree = edges.shape[0] * G.r == verts.size + edges.shape[0] - 1
    return Neighborhood(v, k, verts, dists, G.labels[verts], edges, bool(tree))


def _downward_mono(nb: Neighborhood, labels):
    """Count explored hyperedges whose non-parent members all share the parent's label."""
    dist = dict(zip(nb.vertices.tolist(), nb.dist.tolist()))
    mono = 0
    for e in nb.hyperedges.tolist():
        parent = min(e, key=lambda w: dist[w])
        kids = [w for w in e if w != parent]
        mono += all(labels[w] == labels[parent] for w in kids)
    return mono, nb.hyperedges.shape[0]


def _boht_samples(r, lam, d, k, n_samples, rng):
    """Root degree, monochromatic downward hyperedges and depth-k size for BOHT(2, r, lambda, Pois(d)) trees."""
    deg = np.zeros(n_samples, dtype=np.int64)
    mono = 0
    total = 0
    last = np.zeros(n_samples, dtype=np.int64)
    for s in range(n_samples):
        level = np.ones(1)
        for depth in range(k):
            t = rng.poisson(d, level.size)
            if depth == 0:
                deg[s] = t[0]
            m = int(t.sum())
            copy = rng.random(m) < lam
            kids = np.where(rng.random((m, r - 1)) < 0.5, 1.0, -1.0)
            kids[copy] = 1.0
            mono += int(np.all(kids == 1.0, axis=1).sum())
            total += m
            level = (kids * np.repeat(level, t)[:, None]).ravel()
        last[s] = level.size if k > 0 else 1
    return deg, mono, total, last


def _tv(x, y):
    top = int(max(x.max(initial=0), y.max(initial=0))) + 1
    px = np.bincount(x, minlength=top) / max(x.size, 1)
    py = np.bincount(y, minlength=top) / max(y.size, 1)
    return 0.5 * float(np.abs(px - py).sum())


def _discrete_two_sample_p(x, y, min_expected=5.0):
    """Chi-square homogeneity test on value counts, pooling sparse upper values."""
    top = int(max(x.max(initial=0), y.max(initial=0))) + 1
    table = np.vstack([np.bincount(x, minlength=top), np.bincount(y, minlength=top)]).astype(float)
    # pool from the right until every column has enough expected mass
    cols = []
    acc = np.zeros(2)
    for j in range(top - 1, -1, -1):
        acc = acc + table[:, j]
        exp_min = acc.sum() * min(table.sum(axis=1)) / table.sum()
        if exp_min >= min_expected:
            cols.append(acc)
            acc = np.zeros(2)
    if cols:
        cols[-1] = cols[-1] + acc
    if len(cols) < 2:
        return 1.0
    return float(stats.chi2_contingency(np.array(cols).T)[1])


def _proportion_p(k1, n1, k2, n2):
    if n1 == 0 or n2 == 0:
        return 1.0
    p = (k1 + k2) / (n1 + n2)
    if p in (0.0, 1.0):
        return 1.0
    z = (k1 / n1 - k2 / n2) / math.sqrt(p * (1 - p) * (1 / n1 + 1 / n2))
    return float(2 * stats.norm.sf(abs(z)))


@dataclass
class CouplingReport:
    """HSBM neighborhoods versus BOHT trees at matched parameters."""

    model: ModelParams
    k: int
    n_samples: int
    tv_root_degree: float
    tv_root_degree_poisson: float
    p_root_degree: float
    mono_fraction_hsbm: float | None
    mono_fraction_boht: float | None
    mono_fraction_expected: float
    p_mono: float
    tv_depth_count: float
    p_depth_count: float
    hypertree_fraction: float

    def to_dict(self) -> dict:
        doc = dict(self.__dict__)
        doc["model"] = dict(self.model.__dict__)
        return doc


def coupling_stats(n: int, r: int, a: float, b: float, k: int, n_samples: int, seed: int = 0) -> CouplingReport:
    """Compare depth-k HSBM neighborhoods with BOHT trees of matching ``(r, lambda, Pois(d))``."""
    if not 0 <= k <= 3:
        raise DomainError("coupling statistics support 0 <= k <= 3")
    if n_samples < 1 or n_samples > n:
        raise DomainError("need 1 <= n_samples <= n")
    model = hsbm_params(r, a, b)
    G = sample_hsbm(two_community(n, r, a, b), seed)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 10**6]))
    roots = rng.choice(n, size=n_samples, replace=False)
    deg = G.degrees()[roots]
    mono_h = tot_h = 0
    last_h = np.zeros(n_samples, dtype=np.int64)
    trees = 0
    for i, v in enumerate(roots.tolist()):
        nb = neighborhood(G, v, k)
        m, t = _downward_mono(nb, G.labels)
        mono_h += m
        tot_h += t
        last_h[i] = int(np.sum(nb.dist == k))
        trees += nb.is_hypertree
    deg_b, mono_b, tot_b, last_b = _boht_samples(r, model.lam, model.d, k, n_samples, rng)
    top = int(deg.max(initial=0)) + 1
    pois = stats.poisson.pmf(np.arange(top), model.d) if model.d > 0 else np.eye(1, top)[0]
    emp = np.bincount(deg, minlength=top) / n_samples
    tv_pois = 0.5 * float(np.abs(emp - pois).sum() + max(0.0, 1.0 - pois.sum()))
    return CouplingReport(
        model=model,
        k=k,
        n_samples=n_samples,
        tv_root_degree=_tv(deg, deg_b),
        tv_root_degree_poisson=tv_pois,
        p_root_degree=_discrete_two_sample_p(deg, deg_b),
        mono_fraction_hsbm=mono_h / tot_h if tot_h else None,
        mono_fraction_boht=mono_b / tot_b if tot_b else None,
        mono_fraction_expected=model.lam + (1 - model.lam) * 2.0 ** (1 - r),
        p_mono=_proportion_p(mono_h, tot_h, mono_b, tot_b),
        tv_depth_count=_tv(last_h, last_b),
        p_depth_count=_discrete_two_sample_p(last_h, last_b),
        hypertree_fraction=trees / n_samples,
    )


def write_graph(G: HsbmGraph, path) -> None:
    lines = [f"{G.n} {G.r}", " ".join(map(str, G.labels.tolist()))]
    lines += [" ".join(map(str, e)) for e in G.hyperedges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path) -> HsbmGraph:
    text = Path(path).read_text().splitlines()
    n, r = map(int, text[0].split())
    labels = np.array(text[1].split(), dtype=np.int64) if n else np.zeros(0, dtype=np.int64)
    edges = [list(map(int, line.split())) for line in text[2:] if line.strip()]
    edges = np.array(edges, dtype=np.int64).reshape(-1, r)
    if edges.size and np.any(np.diff(edges, axis=1) <= 0):
        raise DomainError("hyperedges must be sorted vertex lists")
    return HsbmGraph(n, r, labels, edges)
