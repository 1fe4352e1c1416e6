"""Event-driven simulators for meeting, coalescence, voter and forest processes.

Every trial ``i`` draws from its own ``PCG64`` stream seeded by
``SeedSequence(seed, spawn_key=(i,))``.  Trials are split into chunks that
run on a thread pool (the compiled kernels release the GIL) and are
reassembled in trial order, so results do not depend on the worker count.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _backend
from .degseq import DegreeSequence
from .graph import Digraph, NonErgodicError, ergodicity
from .stationary import StationaryDist
from .theory import DomainError, theory_constants

log = logging.getLogger(__name__)

DEFAULT_HORIZON_FACTOR = 10**6


def trial_bitgen(seed: int, trial: int) -> np.random.PCG64:
    return np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _chunks(trials: int, workers: int) -> list[range]:
    size = max(1, min(4096, math.ceil(trials / max(1, 4 * workers))))
    return [range(a, min(a + size, trials)) for a in range(0, trials, size)]


def run_trials(fn: Callable[[list], tuple], seed: int, trials: int, workers: int = 1) -> tuple:
    """Apply ``fn`` to per-chunk lists of trial bit generators and concatenate outputs."""
    if trials <= 0:
        raise ValueError("trials must be positive")

    def work(r: range):
        return fn([trial_bitgen(seed, i) for i in r])

    chunks = _chunks(trials, workers)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(work, chunks))
    else:
        parts = [work(r) for r in chunks]
    return tuple(np.concatenate(cols) for cols in zip(*parts))


def _cdf(p: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(p, dtype=float)
    cdf /= cdf[-1]
    last = int(np.flatnonzero(p > 0)[-1])
    cdf[last:] = 1.0
    return cdf


def _require_ergodic(g: Digraph) -> None:
    rep = ergodicity(g)
    if not rep.is_ergodic:
        raise NonErgodicError(rep.reason)


def _theta(g: Digraph) -> float | None:
    try:
        return theory_constants(g.degree_seq).theta
    except DomainError:
        return None


# ---------------------------------------------------------------------------


@dataclass
class StoppingTimeSample:
    values: np.ndarray
    kind: str
    params: dict
    censored: np.ndarray
    events: np.ndarray
    winners: np.ndarray | None = None
    rescale_divisor: float | None = None

    @property
    def trials(self) -> int:
        return int(self.values.size)

    @property
    def censored_count(self) -> int:
        return int(self.censored.sum())

    @property
    def valid(self) -> np.ndarray:
        """Uncensored values."""
        return self.values[~self.censored.astype(bool)]

    def rescaled(self) -> np.ndarray:
        if self.rescale_divisor is None:
            raise ValueError("no rescaling attached")
        return self.values / self.rescale_divisor

    def to_csv(self, path, rescaled: bool = False) -> None:
        vals = self.rescaled() if rescaled else self.values
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "value", "censored"])
            for i, (v, c) in enumerate(zip(vals.tolist(), self.censored.tolist())):
                w.writerow([i, repr(v), int(c)])


def simulate_meeting(
    g: Digraph,
    dist: StationaryDist,
    trials: int,
    rng_seed: int,
    workers: int = 1,
    max_events: int | None = None,
    backend: str | None = None,
) -> StoppingTimeSample:
    """Meeting time of two independent continuous-time walks started i.i.d. from pi."""
    _require_ergodic(g)
    k = _backend.get_kernels(backend)
    cap = DEFAULT_HORIZON_FACTOR * g.n if max_events is None else int(max_events)
    cdf = _cdf(dist.pi)
    t, ev, cens = run_trials(lambda bgs: k.meeting(bgs, g.offsets, g.targets, cdf, cap), rng_seed, trials, workers)
    theta = _theta(g)
    return StoppingTimeSample(
        t,
        "meeting",
        {"n": g.n, "family": g.degree_seq.label, "seed": rng_seed},
        cens,
        ev,
        rescale_divisor=None if theta is None else 0.5 * theta * g.n,
    )


def simulate_coalescence(
    g: Digraph,
    trials: int,
    rng_seed: int,
    workers: int = 1,
    max_events: int | None = None,
    backend: str | None = None,
) -> StoppingTimeSample:
    """Time until one walker per vertex has coalesced into a single walker."""
    _require_ergodic(g)
    k = _backend.get_kernels(backend)
    cap = DEFAULT_HORIZON_FACTOR * g.n if max_events is None else int(max_events)
    t, ev, cens = run_trials(lambda bgs: k.coalescence(bgs, g.offsets, g.targets, cap), rng_seed, trials, workers)
    theta = _theta(g)
    return StoppingTimeSample(
        t,
        "coalescence",
        {"n": g.n, "family": g.degree_seq.label, "seed": rng_seed},
        cens,
        ev,
        rescale_divisor=None if theta is None else 0.5 * theta * g.n,
    )


def simulate_voter(
    g: Digraph,
    u: float,
    trials: int,
    rng_seed: int,
    workers: int = 1,
    init=None,
    max_events: int | None = None,
    backend: str | None = None,
) -> StoppingTimeSample:
    """Consensus time of the voter model from i.i.d. Bernoulli(u) opinions (or ``init``).

    The total event rate is the constant ``n``, so the event count is drawn
    by the kernel and the elapsed time is Gamma(count, 1) / n, sampled from
    the same per-trial stream afterwards.
    """
    _require_ergodic(g)
    if init is None and not 0.0 < u < 1.0:
        raise ValueError("u must lie in (0, 1)")
    k = _backend.get_kernels(backend)
    cap = DEFAULT_HORIZON_FACTOR * g.n if max_events is None else int(max_events)
    use_init = init is not None
    init_arr = np.asarray(init if use_init else [], dtype=np.uint8)
    if use_init and init_arr.shape != (g.n,):
        raise ValueError("init must have one opinion per vertex")
    n = g.n

    def fn(bgs):
        ev, win, cens = k.voter(bgs, g.offsets, g.targets, float(u), init_arr, use_init, cap)
        t = np.array(
            [np.random.Generator(bg).standard_gamma(e) / n if e > 0 else 0.0 for bg, e in zip(bgs, ev.tolist())]
        )
        return t, ev, win, cens

    t, ev, win, cens = run_trials(fn, rng_seed, trials, workers)
    theta = _theta(g)
    return StoppingTimeSample(
        t,
        "consensus",
        {"n": n, "family": g.degree_seq.label, "u": u, "seed": rng_seed},
        cens,
        ev,
        winners=win,
        rescale_divisor=None if theta is None else 0.5 * theta * n,
    )


# ---------------------------------------------------------------------------
# graphical representation


@dataclass
class GraphicalRep:
    """Poisson arrows on ``[0, horizon]``: each edge rings at rate 1/d+ of its source.

    Stored as one time-sorted event list; ``vertices[k]`` copies from
    ``heads[k]`` through its out-slot ``slots[k]`` at ``times[k]``.
    """

    horizon: float
    times: np.ndarray
    vertices: np.ndarray
    slots: np.ndarray
    heads: np.ndarray

    @classmethod
    def sample(cls, g: Digraph, horizon: float, rng: np.random.Generator) -> "GraphicalRep":
        k = int(rng.poisson(g.n * horizon)) if horizon > 0 else 0
        times = np.sort(rng.uniform(0.0, horizon, size=k))
        verts = rng.integers(0, g.n, size=k)
        slots = rng.integers(0, g.out_degrees[verts]) if k else np.zeros(0, dtype=np.int64)
        heads = g.targets[g.offsets[verts] + slots]
        return cls(float(horizon), times, verts, slots, heads)

    def edge_events(self) -> dict[tuple[int, int], np.ndarray]:
        """Event times per directed edge, keyed by ``(vertex, out-slot)``."""
        out: dict[tuple[int, int], list] = {}
        for t, v, s in zip(self.times.tolist(), self.vertices.tolist(), self.slots.tolist()):
            out.setdefault((v, s), []).append(t)
        return {k: np.asarray(v) for k, v in out.items()}


def voter_forward(rep: GraphicalRep, eta0: list[int]) -> list[int]:
    eta = list(eta0)
    for v, y in zip(rep.vertices.tolist(), rep.heads.tolist()):
        eta[v] = eta[y]
    return eta


def walks_backward(rep: GraphicalRep, n: int) -> tuple[list[int], int]:
    """Coalescing walks started at every vertex at the horizon, run back to time 0.

    Returns the endpoint of each walk and the number of distinct walkers left.
    """
    groups: dict[int, list[int]] = {x: [x] for x in range(n)}
    for v, y in zip(reversed(rep.vertices.tolist()), reversed(rep.heads.tolist())):
        if v in groups and v != y:
            moving = groups.pop(v)
            if y in groups:
                groups[y].extend(moving)
            else:
                groups[y] = moving
    end = [0] * n
    for pos, starts in groups.items():
        for x in starts:
            end[x] = pos
    return end, len(groups)


@dataclass
class DualityReport:
    trials: int
    violations: int
    coalesced: int
    counterexample: dict | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.violations == 0


def graphical_duality_check(g: Digraph, horizon: float, trials: int, rng_seed: int) -> DualityReport:
    """Pathwise check that the voter state at the horizon equals the initial
    opinions read off at the endpoints of the backward coalescing walks."""
    violations = coalesced = 0
    example = None
    for i in range(trials):
        rng = np.random.Generator(trial_bitgen(rng_seed, i))
        eta0 = rng.integers(0, 2, size=g.n).tolist()
        rep = GraphicalRep.sample(g, horizon, rng)
        eta_h = voter_forward(rep, eta0)
        end, left = walks_backward(rep, g.n)
        bad = any(eta_h[x] != eta0[end[x]] for x in range(g.n))
        if left == 1:
            coalesced += 1
            bad = bad or len(set(eta_h)) != 1
        if bad:
            violations += 1
            if example is None:
                example = {
                    "trial": i,
                    "eta0": eta0,
                    "eta_h": eta_h,
                    "endpoints": end,
                    "events": list(zip(rep.times.tolist(), rep.vertices.tolist(), rep.heads.tolist())),
                }
    return DualityReport(trials, violations, coalesced, example)


# ---------------------------------------------------------------------------
# collapsed chain by simulation


@dataclass
class MCEstimate:
    mean: float
    se: float
    trials: int

    def __float__(self):
        return self.mean


def estimate_rt_quenched(
    g: Digraph, dist: StationaryDist, T: int, trials: int, rng_seed: int, workers: int = 1, backend: str | None = None
) -> MCEstimate:
    """Monte Carlo ``R_T(∂)``: visits to ∂ in steps ``0..T`` of the collapsed chain
    with ``mu_tilde`` reset, started at ∂."""
    k = _backend.get_kernels(backend)
    cdf = _cdf(dist.mu_tilde)
    (visits,) = run_trials(
        lambda bgs: (k.collapsed_visits(bgs, g.offsets, g.targets, cdf, int(T)),), rng_seed, trials, workers
    )
    se = float(visits.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MCEstimate(float(visits.mean()), se, trials)


# ---------------------------------------------------------------------------
# forest process


def biased_law(seq: DegreeSequence) -> tuple[np.ndarray, np.ndarray]:
    """Out-degree of the head of a uniform edge: ``k -> sum_x d-_x/m 1(d+_x = k)``."""
    vals = np.unique(seq.out_degrees)
    w = np.array([seq.in_degrees[seq.out_degrees == k].sum() for k in vals], dtype=float) / seq.m
    keep = w > 0
    return vals[keep], w[keep]


@dataclass
class ForestRunStats:
    reset_count_mean: float
    reset_count_se: float
    first_return_histogram: np.ndarray  # mass at each time 0..T
    trials: int
    q_in: float
    rho: float
    T: int

    def first_return_mass(self, time: int) -> float:
        return float(self.first_return_histogram[time])

    def first_return_se(self, time: int) -> float:
        p = self.first_return_mass(time)
        return math.sqrt(p * (1.0 - p) / self.trials)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mass"])
            for t, m in enumerate(self.first_return_histogram.tolist()):
                w.writerow([t, repr(m)])


def simulate_forest(
    seq: DegreeSequence,
    reset="mu_in",
    T: int = 500,
    trials: int = 10**5,
    rng_seed: int = 0,
    workers: int = 1,
    backend: str | None = None,
) -> ForestRunStats:
    """Red/blue chase on the marked tree, in distance coordinates.

    ``reset`` is ``"mu_in"`` or a mapping ``{out_degree: probability}`` for
    the root law.  Counts visits to ∂ in steps ``0..T`` (restarting after
    each meeting) and records the first return time.
    """
    if T < 2:
        raise ValueError("T must be >= 2")
    bias_vals, bias_w = biased_law(seq)
    if isinstance(reset, str):
        if reset != "mu_in":
            raise ValueError(f"unknown reset source {reset!r}")
        root_vals, root_w = bias_vals, bias_w
    else:
        items = sorted((int(d), float(p)) for d, p in reset.items() if p > 0)
        root_vals = np.array([d for d, _ in items], dtype=np.int64)
        root_w = np.array([p for _, p in items])
        if abs(root_w.sum() - 1.0) > 1e-12 or (root_vals < 1).any():
            raise ValueError("root law must be a probability over positive degrees")
    q = float(np.dot(root_w, 1.0 / root_vals))
    rho = float(np.dot(bias_w, 1.0 / bias_vals))
    k = _backend.get_kernels(backend)
    rv, rc = root_vals.astype(np.int64), _cdf(root_w)
    bv, bc = bias_vals.astype(np.int64), _cdf(bias_w)
    visits, first = run_trials(lambda bgs: k.forest(bgs, rv, rc, bv, bc, int(T)), rng_seed, trials, workers)
    hist = np.bincount(first[first >= 0], minlength=T + 1).astype(float) / trials
    se = float(visits.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return ForestRunStats(float(visits.mean()), se, hist, trials, q, rho, int(T))
