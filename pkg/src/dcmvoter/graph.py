"""Sampling directed configuration model graphs by uniform stub matching."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .degseq import DegreeSequence


class NonErgodicError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Digraph:
    """Directed multigraph realized from a tail -> head matching.

    Tail slots are numbered vertex by vertex, so the out-edges of ``x`` are
    ``targets[offsets[x]:offsets[x + 1]]`` in tail-index order.  Self-loops and
    parallel edges are kept.
    """

    degree_seq: DegreeSequence
    matching: np.ndarray  # tail slot -> head slot
    offsets: np.ndarray
    targets: np.ndarray
    seed: int | None = None
    retries: int = 0

    @property
    def n(self) -> int:
        return self.degree_seq.n

    @property
    def m(self) -> int:
        return self.degree_seq.m

    @property
    def out_degrees(self) -> np.ndarray:
        return self.degree_seq.out_degrees

    def out_neighbors(self, x: int) -> np.ndarray:
        return self.targets[self.offsets[x] : self.offsets[x + 1]]

    def sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), np.diff(self.offsets))

    def adjacency(self) -> sp.csr_matrix:
        """``A[x, y]`` = number of edges x -> y."""
        a = sp.csr_matrix(
            (np.ones(self.m), (self.sources(), self.targets)), shape=(self.n, self.n)
        )
        a.sum_duplicates()
        return a

    def transition_matrix(self) -> sp.csr_matrix:
        """Row-stochastic ``P(x, y) = A(x, y) / d+_x``."""
        a = self.adjacency()
        inv = 1.0 / self.out_degrees.astype(float)
        return sp.csr_matrix(sp.diags(inv) @ a)

    def edge_list(self) -> list[tuple[int, int, int]]:
        a = self.adjacency().tocoo()
        rows = sorted(zip(a.row.tolist(), a.col.tolist(), a.data.astype(int).tolist()))
        return rows

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["src", "dst", "multiplicity"])
            w.writerows(self.edge_list())

    def manifest(self) -> dict:
        return {"n": self.n, "m": self.m, "family": self.degree_seq.label, "seed": self.seed, "retries": self.retries}


def _slot_owners(degrees: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(degrees.size), degrees)


def from_matching(seq: DegreeSequence, matching: np.ndarray, seed=None, retries: int = 0) -> Digraph:
    matching = np.asarray(matching, dtype=np.int64)
    if matching.size != seq.m or not np.array_equal(np.sort(matching), np.arange(seq.m)):
        raise ValueError("matching must be a permutation of the m head slots")
    head_owner = _slot_owners(seq.in_degrees)
    offsets = np.concatenate([[0], np.cumsum(seq.out_degrees)]).astype(np.int64)
    targets = head_owner[matching].astype(np.int64)
    for arr in (matching, offsets, targets):
        arr.setflags(write=False)
    return Digraph(seq, matching, offsets, targets, seed, retries)


def from_edges(n: int, edges) -> Digraph:
    """Build a graph from ``(src, dst[, multiplicity])`` triples with a canonical matching."""
    src, dst = [], []
    for e in edges:
        k = e[2] if len(e) > 2 else 1
        src.extend([e[0]] * k)
        dst.extend([e[1]] * k)
    src, dst = np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64)
    seq = DegreeSequence(np.bincount(src, minlength=n), np.bincount(dst, minlength=n), "edges")
    order = np.lexsort((dst, src))
    dst_sorted = dst[order]
    # head slots of each vertex handed out in order of appearance
    head_start = np.concatenate([[0], np.cumsum(seq.in_degrees)])
    used = np.zeros(n, dtype=np.int64)
    matching = np.empty(seq.m, dtype=np.int64)
    for i, y in enumerate(dst_sorted):
        matching[i] = head_start[y] + used[y]
        used[y] += 1
    return from_matching(seq, matching)


def read_edge_csv(path, n: int | None = None) -> Digraph:
    edges = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            edges.append((int(row["src"]), int(row["dst"]), int(row["multiplicity"])))
    if n is None:
        n = 1 + max(max(e[0], e[1]) for e in edges)
    return from_edges(n, edges)


def sample_dcm(seq: DegreeSequence, rng_seed: int) -> Digraph:
    """Uniform matching of tails to heads (Fisher-Yates shuffle of head slots)."""
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    return from_matching(seq, rng.permutation(seq.m), seed=rng_seed)


def sample_ergodic(
    seq: DegreeSequence, rng_seed: int, policy: str = "resample", max_retries: int = 100
) -> Digraph:
    """Sample until ergodic; attempt ``k`` uses the seed stream ``(rng_seed, k)``."""
    for attempt in range(max_retries + 1):
        s = rng_seed if attempt == 0 else _retry_seed(rng_seed, attempt)
        g = sample_dcm(seq, s)
        if ergodicity(g).is_ergodic:
            return Digraph(g.degree_seq, g.matching, g.offsets, g.targets, rng_seed, attempt)
        if policy == "fail":
            raise NonErgodicError(f"sample with seed {rng_seed} is not ergodic")
    raise NonErgodicError(f"no ergodic sample after {max_retries} retries (seed {rng_seed})")


def _retry_seed(seed: int, attempt: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(0x5EED, attempt))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------


@dataclass
class ErgodicityReport:
    is_ergodic: bool
    giant_scc: np.ndarray
    support: np.ndarray
    reason: str
    n_recurrent: int = 0
    labels: np.ndarray = field(default=None, repr=False)


def ergodicity(g: Digraph) -> ErgodicityReport:
    """Strong components, recurrent (closed) classes and the support of pi."""
    a = g.adjacency()
    ncomp, labels = connected_components(a, directed=True, connection="strong")
    src = g.sources()
    leaving = labels[src] != labels[g.targets]
    closed = np.ones(ncomp, dtype=bool)
    closed[np.unique(labels[src[leaving]])] = False
    recurrent = np.flatnonzero(closed)
    sizes = np.bincount(labels, minlength=ncomp)
    giant = np.flatnonzero(labels == int(np.argmax(sizes)))
    if recurrent.size == 1:
        support = np.flatnonzero(labels == recurrent[0])
        reason = "unique recurrent class"
        if support.size < g.n:
            reason += f" of size {support.size} < n"
        return ErgodicityReport(True, giant, support, reason, 1, labels)
    return ErgodicityReport(
        False, giant, np.array([], dtype=np.int64), f"{recurrent.size} recurrent classes", int(recurrent.size), labels
    )


# ---------------------------------------------------------------------------


@dataclass
class TreeReport:
    hbar: int
    v_star: np.ndarray
    fraction: float


def default_depth(g: Digraph) -> int:
    dmax = int(g.out_degrees.max())
    if dmax <= 1:
        return 1
    return max(1, math.floor(math.log(g.n) / (5.0 * math.log(dmax))))


def is_tree_like(g: Digraph, v: int, depth: int) -> bool:
    seen = {v}
    frontier = [v]
    for _ in range(depth):
        nxt = []
        for x in frontier:
            for y in g.out_neighbors(x).tolist():
                if y in seen:
                    return False
                seen.add(y)
                nxt.append(y)
        frontier = nxt
    return True


def tree_neighborhoods(g: Digraph, depth: int | None = None) -> TreeReport:
    """Vertices whose out-ball of radius ``depth`` is a tree (no vertex reached twice)."""
    h = default_depth(g) if depth is None else int(depth)
    star = np.array([v for v in range(g.n) if is_tree_like(g, v, h)], dtype=np.int64)
    return TreeReport(h, star, star.size / g.n)


def write_manifest(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
