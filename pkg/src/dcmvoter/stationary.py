"""Stationary distribution of the walk, pi^2 statistics and mixing diagnostics."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .degseq import DegreeSequence
from .graph import Digraph, NonErgodicError, ergodicity

log = logging.getLogger(__name__)

CESARO_WINDOW = 32


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


@dataclass(frozen=True)
class StationaryDist:
    pi: np.ndarray
    support: np.ndarray  # boolean mask
    pi_max: float
    pi_min_support: float
    pi2_sum: float
    mu_tilde: np.ndarray
    residual: float
    iterations: int = 0
    linear_check: float | None = None

    @classmethod
    def from_vector(cls, pi, residual=0.0, iterations=0, linear_check=None) -> "StationaryDist":
        pi = np.asarray(pi, dtype=float)
        support = pi > 0
        pi2 = float(np.dot(pi, pi))
        return cls(
            pi,
            support,
            float(pi.max()),
            float(pi[support].min()),
            pi2,
            pi * pi / pi2,
            residual,
            iterations,
            linear_check,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["v", "pi"])
            for v, p in enumerate(self.pi):
                w.writerow([v, repr(float(p))])


def _linear_solve(P: sp.csr_matrix, support: np.ndarray) -> np.ndarray:
    """Solve pi (P - I) = 0, sum pi = 1 on the recurrent class by a dense solve."""
    Ps = P[support][:, support].toarray()
    k = Ps.shape[0]
    A = Ps.T - np.eye(k)
    A[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    x = scipy.linalg.solve(A, b)
    pi = np.zeros(P.shape[0])
    pi[support] = x
    return pi


def stationary(g: Digraph, tol: float = 1e-12, max_iters: int = 100_000, check_below: int = 200) -> StationaryDist:
    """Power iteration on ``P`` started from the uniform law.

    When the L1 residual fails to shrink over a window of ``CESARO_WINDOW``
    steps the iterate is replaced by the window average, which kills
    periodic oscillation.  For ``n <= check_below`` the result is compared
    against a direct linear solve.
    """
    rep = ergodicity(g)
    if not rep.is_ergodic:
        raise NonErgodicError(f"stationary distribution needs an ergodic graph: {rep.reason}")
    support = np.zeros(g.n, dtype=bool)
    support[rep.support] = True
    P = g.transition_matrix()
    PT = P.T.tocsr()
    x = np.full(g.n, 1.0 / g.n)
    window_sum = np.zeros(g.n)
    window_start_res = math.inf
    res = math.inf
    it = 0
    while it < max_iters:
        y = PT @ x
        res = float(np.abs(y - x).sum())
        x = y
        it += 1
        if res <= tol:
            break
        window_sum += x
        if it % CESARO_WINDOW == 0:
            if res > 0.5 * window_start_res:
                x = window_sum / CESARO_WINDOW
            window_start_res = res
            window_sum[:] = 0.0
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iters} steps (residual {res:.3e})", res)
    x[~support] = 0.0
    x /= x.sum()
    res = float(np.abs(PT @ x - x).sum())
    check = None
    if g.n <= check_below:
        exact = _linear_solve(P, support)
        check = float(np.abs(exact - x).sum())
        if check > 1e-8:
            log.warning("power iteration and linear solve disagree by %.3e (L1)", check)
    return StationaryDist.from_vector(x, res, it, check)


def stationary_linear(g: Digraph) -> StationaryDist:
    """Direct linear-solve route (dense; small graphs only)."""
    rep = ergodicity(g)
    if not rep.is_ergodic:
        raise NonErgodicError(rep.reason)
    support = np.zeros(g.n, dtype=bool)
    support[rep.support] = True
    P = g.transition_matrix()
    pi = _linear_solve(P, support)
    pi[~support] = 0.0
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    res = float(np.abs(P.T @ pi - pi).sum())
    return StationaryDist.from_vector(pi, res)


# ---------------------------------------------------------------------------
# pi^2 statistics


def pi_diag_stats(dist: StationaryDist, seq: DegreeSequence) -> tuple[float, float]:
    """Empirical ``p`` and ``q``: ``n <pi^2>`` and ``sum pi^2 / d+ / <pi^2>``."""
    n_pi2 = seq.n * dist.pi2_sum
    q_hat = float(np.dot(dist.pi**2, 1.0 / seq.out_degrees) / dist.pi2_sum)
    return n_pi2, q_hat


def general_formula_check(
    dist: StationaryDist, seq: DegreeSequence, f: Callable[[int, int], float]
) -> tuple[float, float]:
    """``n sum_x pi(x)^2 f(d-_x, d+_x)`` against ``n sum g(d-, d+) f(d-, d+)``."""
    from .theory import g_table

    fx = np.array([f(int(a), int(b)) for a, b in zip(seq.in_degrees, seq.out_degrees)])
    lhs = seq.n * float(np.dot(dist.pi**2, fx))
    rhs = seq.n * math.fsum(w * f(dm, dp) for (dm, dp), w in g_table(seq).items())
    return lhs, rhs


def extremal_check(dist: StationaryDist, n: int) -> dict:
    """Polylog envelope for pi_max and polynomial floor for pi_min; logged, never raised."""
    envelope = math.log(n) ** 3
    out = {
        "n_pi_max": n * dist.pi_max,
        "envelope": envelope,
        "pi_min_support": dist.pi_min_support,
        "floor": n**-10.0,
    }
    out["ok"] = out["n_pi_max"] <= envelope and dist.pi_min_support >= out["floor"]
    if not out["ok"]:
        log.warning("extremal values of pi outside envelope: %s", out)
    return out


# ---------------------------------------------------------------------------
# mixing


def mu_T(g: Digraph, T: int) -> np.ndarray:
    """Law at time T of the walk started uniformly: ``(1/n) sum_y P^T(y, .)``."""
    PT = g.transition_matrix().T.tocsr()
    x = np.full(g.n, 1.0 / g.n)
    for _ in range(int(T)):
        x = PT @ x
    return x


def entropy_rate(seq: DegreeSequence) -> float:
    m = float(seq.m)
    return math.fsum((seq.in_degrees / m) * np.log(seq.out_degrees))


def entropic_time(seq: DegreeSequence) -> float:
    return math.log(seq.n) / entropy_rate(seq)


@dataclass
class MixingProfile:
    times: list[int]
    tv_values: list[float]
    t_ent: float
    H: float
    epsilons: list[float]
    starts: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "tv"])
            for t, v in zip(self.times, self.tv_values):
                w.writerow([t, repr(v)])


class CostGuardError(ValueError):
    pass


def tv_profile(
    g: Digraph,
    dist: StationaryDist,
    epsilons: Sequence[float],
    starts="all",
    seed: int = 0,
) -> MixingProfile:
    """Worst TV distance over a start set at times ``floor(eps * t_ent)``.

    ``starts`` is ``"all"`` (requires n <= 5000) or an integer k for a
    seeded sample of k start vertices without replacement.
    """
    if isinstance(starts, str):
        if starts != "all":
            raise ValueError("starts must be 'all' or an integer")
        if g.n > 5000:
            raise CostGuardError(f"all-start TV profile limited to n <= 5000 (n={g.n}); use a sample of starts")
        xs = np.arange(g.n)
    else:
        rng = np.random.default_rng(seed)
        xs = np.sort(rng.choice(g.n, size=min(int(starts), g.n), replace=False))
    H = entropy_rate(g.degree_seq)
    t_ent = math.log(g.n) / H
    times = [int(math.floor(e * t_ent)) for e in epsilons]
    P = g.transition_matrix()
    rows = np.zeros((xs.size, g.n))
    rows[np.arange(xs.size), xs] = 1.0
    tv_at = {}
    t = 0
    for target in sorted(set(times)):
        while t < target:
            rows = (P.T @ rows.T).T
            t += 1
        tv_at[target] = float(0.5 * np.abs(rows - dist.pi).sum(axis=1).max())
    return MixingProfile(times, [tv_at[t] for t in times], t_ent, H, list(epsilons), xs)
