"""Limit laws, Wasserstein-1 distances and empirical summaries."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

DEFAULT_K_MAX = 2000


@dataclass(frozen=True)
class ReferenceDist:
    """``exp1``, ``kingman_sum`` (sum_{k>=2} Exp(k(k-1)/2)) or ``consensus_sum`` (needs u).

    ``consensus_sum`` draws ``K = U A + (1 - U) B`` with U ~ Bernoulli(u),
    A ~ Geometric(1 - u) and B ~ Geometric(u) on {1, 2, ...}, then sums the
    Kingman terms with ``k > K``.
    """

    kind: str
    u: float | None = None
    k_max: int = DEFAULT_K_MAX

    def __post_init__(self):
        if self.kind not in ("exp1", "kingman_sum", "consensus_sum"):
            raise ValueError(f"unknown reference {self.kind!r}")
        if self.k_max < 2:
            raise ValueError("k_max must be >= 2")
        if self.kind == "consensus_sum" and (self.u is None or not 0.0 < self.u < 1.0):
            raise ValueError("consensus_sum needs u in (0, 1)")


def reference_mean(ref: ReferenceDist) -> float:
    """Exact mean of the (truncated) reference law."""
    if ref.kind == "exp1":
        return 1.0
    if ref.kind == "kingman_sum":
        return 2.0 - 2.0 / ref.k_max
    # E[2/K - 2/k_max ; K < k_max], summed over the two geometric branches
    u = ref.u
    total = 0.0
    for w, p in ((u, 1.0 - u), (1.0 - u, u)):
        j = np.arange(1, ref.k_max)
        pj = np.exp((j - 1) * math.log1p(-p) + math.log(p))
        total += w * math.fsum(pj * (2.0 / j - 2.0 / ref.k_max))
    return total


def sample_reference(ref: ReferenceDist, trials: int, rng_seed: int) -> np.ndarray:
    rng = np.random.default_rng(rng_seed)
    if ref.kind == "exp1":
        return rng.exponential(1.0, size=trials)
    if ref.kind == "kingman_sum":
        K = np.ones(trials, dtype=np.int64)
    else:
        u = ref.u
        U = rng.random(trials) < u
        A = rng.geometric(1.0 - u, size=trials)
        B = rng.geometric(u, size=trials)
        K = np.where(U, A, B)
    out = np.zeros(trials)
    for k in range(2, ref.k_max + 1):
        z = rng.exponential(2.0 / (k * (k - 1)), size=trials)
        out += np.where(k > K, z, 0.0)
    return out


def wasserstein1(a, b, rng_seed: int = 0) -> float:
    """L1 Wasserstein distance between two samples, or a sample and a reference law.

    Equal sizes use the sorted-difference formula; otherwise the two
    quantile functions are integrated on the merged grid of levels.
    """
    a = np.sort(np.asarray(a, dtype=float))
    if isinstance(b, ReferenceDist):
        b = sample_reference(b, a.size, rng_seed)
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    if a.size == b.size:
        return float(np.abs(a - b).mean())
    grid = np.union1d(np.arange(1, a.size + 1) / a.size, np.arange(1, b.size + 1) / b.size)
    widths = np.diff(np.concatenate([[0.0], grid]))
    mid = grid - 0.5 * widths
    ia = np.minimum((mid * a.size).astype(np.int64), a.size - 1)
    ib = np.minimum((mid * b.size).astype(np.int64), b.size - 1)
    return float(np.dot(widths, np.abs(a[ia] - b[ib])))


QUANTILE_LEVELS = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)


@dataclass
class EmpiricalSummary:
    mean: float
    se: float
    quantiles: dict
    bin_edges: np.ndarray
    masses: np.ndarray
    trials: int
    censored: int

    def histogram_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_left", "bin_right", "mass"])
            for lo, hi, m in zip(self.bin_edges[:-1], self.bin_edges[1:], self.masses):
                w.writerow([repr(float(lo)), repr(float(hi)), repr(float(m))])


def empirical_summary(values, bins=50, censored=None) -> EmpiricalSummary:
    """Mean, standard error, quantiles and a histogram of the uncensored values.

    Histogram masses are normalized by the total trial count, so they sum to
    the uncensored fraction.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty sample")
    mask = np.zeros(values.size, dtype=bool) if censored is None else np.asarray(censored, dtype=bool)
    v = values[~mask]
    if v.size == 0:
        raise ValueError("every value is censored")
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    q = dict(zip(QUANTILE_LEVELS, np.quantile(v, QUANTILE_LEVELS).tolist()))
    counts, edges = np.histogram(v, bins=bins)
    return EmpiricalSummary(float(v.mean()), se, q, edges, counts / values.size, int(values.size), int(mask.sum()))
