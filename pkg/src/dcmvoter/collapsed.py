"""The collapsed two-walk chain: product chain with the diagonal merged into ``∂``.

States are ordered off-diagonal pairs ``(x, y)`` plus ``∂``.  Off the
diagonal the chain moves one uniformly chosen coordinate by ``P``; hitting
the diagonal sends it to ``∂``; from ``∂`` it resets to a pair drawn from
the reset law ``mu`` followed by one product-chain step.

Two representations are used:

* a pair matrix ``M`` (``n x n``, zero diagonal) plus the scalar mass at
  ``∂``, advanced in ``O(n * nnz(P))`` per step (used for ``R_T`` and the
  hitting-time tail, up to n = 2000);
* an explicit sparse matrix on ``n(n-1) + 1`` states (small n only), used
  as an independent construction in the exact checks.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import Digraph, NonErgodicError, ergodicity
from .stationary import StationaryDist

MAX_N = 2000
MAX_N_EXPLICIT = 200


class StateSpaceError(ValueError):
    pass


def pair_index(x, y, n: int):
    """Index of the ordered off-diagonal pair ``(x, y)``; ``∂`` is ``n (n - 1)``."""
    return x * (n - 1) + np.where(y < x, y, y - 1)


@dataclass(frozen=True, eq=False)
class CollapsedChain:
    n: int
    P: sp.csr_matrix
    mu: np.ndarray
    reset_is_mu_tilde: bool

    @property
    def n_states(self) -> int:
        return self.n * (self.n - 1) + 1

    @property
    def partial(self) -> int:
        return self.n * (self.n - 1)

    def step(self, M: np.ndarray, s: float) -> tuple[np.ndarray, float]:
        """One step of the law ``(M, s)``; returns the new pair matrix and ∂ mass."""
        N = M.copy()
        N[np.diag_indices(self.n)] += s * self.mu
        PT = self.P.T
        out = 0.5 * (PT @ N + (PT @ N.T).T)
        s_new = float(np.trace(out))
        out[np.diag_indices(self.n)] = 0.0
        return out, s_new

    def explicit(self) -> sp.csr_matrix:
        """The full transition matrix on ``n(n-1) + 1`` states."""
        n = self.n
        if n > MAX_N_EXPLICIT:
            raise StateSpaceError(f"explicit collapsed matrix limited to n <= {MAX_N_EXPLICIT}")
        d = self.partial
        coo = self.P.tocoo()
        rows, cols, vals = [], [], []
        others = np.arange(n)
        for i, j, w in zip(coo.row, coo.col, coo.data):
            z = others[others != i]
            # first coordinate moves i -> j, second stays at z
            rows.append(pair_index(i, z, n))
            cols.append(np.where(z == j, d, pair_index(np.full_like(z, j), z, n)))
            vals.append(np.full(z.size, 0.5 * w))
            # second coordinate moves i -> j, first stays at z
            rows.append(pair_index(z, np.full_like(z, i), n))
            cols.append(np.where(z == j, d, pair_index(z, np.full_like(z, j), n)))
            vals.append(np.full(z.size, 0.5 * w))
            # reset from ∂ through z = i
            if self.mu[i] > 0:
                if i == j:
                    rows.append(np.array([d]))
                    cols.append(np.array([d]))
                    vals.append(np.array([self.mu[i] * w]))
                else:
                    rows.append(np.array([d, d]))
                    cols.append(pair_index(np.array([i, j]), np.array([j, i]), n))
                    vals.append(np.full(2, 0.5 * self.mu[i] * w))
        if n == 1:
            return sp.csr_matrix(np.ones((1, 1)))
        m = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(d + 1, d + 1),
        )
        m.sum_duplicates()
        return m


def build_collapsed(g: Digraph, reset="mu_tilde", dist: StationaryDist | None = None) -> CollapsedChain:
    """Collapsed chain of ``g`` with reset law ``mu_tilde`` (needs ``dist``) or an explicit vector."""
    if g.n > MAX_N:
        raise StateSpaceError(f"collapsed chain limited to n <= {MAX_N} (n={g.n})")
    rep = ergodicity(g)
    if not rep.is_ergodic:
        raise NonErgodicError(rep.reason)
    if isinstance(reset, str):
        if reset != "mu_tilde":
            raise ValueError(f"unknown reset {reset!r}")
        if dist is None:
            from .stationary import stationary

            dist = stationary(g)
        mu, tilde = dist.mu_tilde.copy(), True
    else:
        mu, tilde = np.asarray(reset, dtype=float).copy(), False
        if mu.shape != (g.n,) or (mu < 0).any() or abs(mu.sum() - 1.0) > 1e-12:
            raise ValueError("reset must be a probability vector of length n")
    mu.setflags(write=False)
    return CollapsedChain(g.n, g.transition_matrix(), mu, tilde)


# ---------------------------------------------------------------------------
# exact checks


@dataclass
class CollapsedReport:
    row_sum_dev: float
    cond12_dev: float
    cond3_partial_dev: float | None
    cond3_pair_dev: float | None
    pi_tilde_partial: float
    tol: float = 1e-10

    @property
    def ok(self) -> bool:
        devs = [self.row_sum_dev, self.cond12_dev, self.cond3_partial_dev, self.cond3_pair_dev]
        return all(d is None or d <= self.tol for d in devs)


def product_chain(P: sp.csr_matrix) -> sp.csr_matrix:
    """``P2 = (P ⊗ I + I ⊗ P) / 2`` on ``[n]^2`` with index ``x * n + y``."""
    eye = sp.identity(P.shape[0], format="csr")
    return sp.csr_matrix(0.5 * (sp.kron(P, eye) + sp.kron(eye, P)))


def collapsed_stationary_solve(Pt: sp.csr_matrix) -> np.ndarray:
    """Stationary law of an explicit chain by a sparse linear solve."""
    N = Pt.shape[0]
    if N == 1:
        return np.ones(1)
    A = (Pt.T - sp.identity(N)).tolil()
    A[N - 1, :] = np.ones(N)
    b = np.zeros(N)
    b[-1] = 1.0
    return spla.spsolve(A.tocsc(), b)


def stationary_collapsed(c: CollapsedChain, dist: StationaryDist, tol: float = 1e-10) -> CollapsedReport:
    """Check stochasticity, the off-∂ agreement with the product chain and, for the
    ``mu_tilde`` reset, ``pi~(∂) = <pi^2>`` and ``pi~((x, y)) = pi(x) pi(y)``."""
    n = c.n
    Pt = c.explicit()
    row_dev = float(np.abs(np.asarray(Pt.sum(axis=1)).ravel() - 1.0).max())
    if n == 1:
        return CollapsedReport(row_dev, 0.0, 0.0 if c.reset_is_mu_tilde else None, None, 1.0, tol)
    K = product_chain(c.P)
    xs, ys = np.nonzero(~np.eye(n, dtype=bool))
    full = xs * n + ys
    off = pair_index(xs, ys, n)
    diag = np.arange(n) * (n + 1)
    K_off = K[full][:, full].toarray()
    Pt_dense = Pt.toarray()
    dev_off = np.abs(Pt_dense[np.ix_(off, off)] - K_off).max()
    to_diag = np.asarray(K[full][:, diag].sum(axis=1)).ravel()
    dev_diag = np.abs(Pt_dense[off, c.partial] - to_diag).max()
    pt = collapsed_stationary_solve(Pt)
    p3 = q3 = None
    if c.reset_is_mu_tilde:
        p3 = abs(pt[c.partial] - dist.pi2_sum)
        q3 = float(np.abs(pt[off] - dist.pi[xs] * dist.pi[ys]).max())
    return CollapsedReport(row_dev, float(max(dev_off, dev_diag)), p3, q3, float(pt[c.partial]), tol)


def expected_hitting_collapsed(c: CollapsedChain) -> float:
    """``E_{pi~}[tau_∂]`` from the explicit matrix and its brute-force stationary law."""
    if c.n == 1:
        return 0.0
    Pt = c.explicit()
    pt = collapsed_stationary_solve(Pt)
    d = c.partial
    Q = Pt[:d][:, :d]
    h = spla.spsolve((sp.identity(d) - Q).tocsc(), np.ones(d))
    return float(np.dot(pt[:d], h))


def exact_meeting_expectation(g: Digraph, dist: StationaryDist) -> tuple[float, float]:
    """``E_{pi⊗pi}[tau_meet]`` for the asynchronous discrete product chain, and half of it."""
    n = g.n
    if n > MAX_N_EXPLICIT:
        raise StateSpaceError(f"exact meeting expectation limited to n <= {MAX_N_EXPLICIT}")
    if n == 1:
        return 0.0, 0.0
    K = product_chain(g.transition_matrix())
    xs, ys = np.nonzero(~np.eye(n, dtype=bool))
    off = xs * n + ys
    Q = K[off][:, off]
    h = spla.spsolve((sp.identity(off.size) - Q).tocsc(), np.ones(off.size))
    disc = float(np.dot(dist.pi[xs] * dist.pi[ys], h))
    return disc, disc / 2.0


# ---------------------------------------------------------------------------
# returns to ∂


def default_T(n: int) -> int:
    return int(math.floor(math.log(n) ** 5))


@dataclass
class ReturnCurve:
    R: np.ndarray  # R[t] = sum_{s <= t} P~^s(∂, ∂)
    converged_at: int | None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["T", "R_T"])
            for t, r in enumerate(self.R):
                w.writerow([t, repr(float(r))])


def return_curve(c: CollapsedChain, T: int, tol: float = 1e-14) -> ReturnCurve:
    """``R_t`` for ``t = 0..T``.

    Once the law stops moving (L1 change below ``tol``) the remaining
    return probabilities equal the current ∂ mass, so the tail is filled in
    arithmetically instead of iterated.
    """
    T = int(T)
    if T < 0:
        raise ValueError("T must be >= 0")
    R = np.empty(T + 1)
    R[0] = 1.0
    M = np.zeros((c.n, c.n))
    s = 1.0
    conv = None
    for t in range(1, T + 1):
        M_new, s_new = c.step(M, s)
        change = float(np.abs(M_new - M).sum()) + abs(s_new - s)
        M, s = M_new, s_new
        R[t] = R[t - 1] + s
        if change < tol:
            conv = t
            R[t + 1 :] = R[t] + s * np.arange(1, T - t + 1)
            break
    return ReturnCurve(R, conv)


def r_t(c: CollapsedChain, T: int, tol: float = 1e-14) -> float:
    """Truncated Green function ``R_T(∂) = sum_{t<=T} P~^t(∂, ∂)``."""
    return float(return_curve(c, T, tol).R[-1])


def centred_green(c: CollapsedChain, pi_partial: float, tol: float = 1e-14, max_steps: int = 100_000) -> float:
    """``sum_t (P~^t(∂, ∂) - pi~(∂))``, summed until the law stops moving."""
    M = np.zeros((c.n, c.n))
    s = 1.0
    total = 1.0 - pi_partial
    for _ in range(max_steps):
        M_new, s_new = c.step(M, s)
        change = float(np.abs(M_new - M).sum()) + abs(s_new - s)
        M, s = M_new, s_new
        total += s - pi_partial
        if change < tol:
            return total
    raise RuntimeError("centred Green function did not converge")


# ---------------------------------------------------------------------------
# first visit time fit


@dataclass
class TailFit:
    lam: float
    sup_error: float
    t_max: int
    T: int
    R_T: float
    pi_partial: float

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)


def hitting_tail(c: CollapsedChain, dist: StationaryDist, t_max: int) -> np.ndarray:
    """``P_{pi~}(tau_∂ > t)`` for ``t = 0..t_max`` by the absorbed recursion."""
    M = np.outer(dist.pi, dist.pi)
    M[np.diag_indices(c.n)] = 0.0
    out = np.empty(t_max + 1)
    out[0] = M.sum()
    for t in range(1, t_max + 1):
        M, _ = c.step(M, 0.0)
        out[t] = M.sum()
    return out


def fvtl_lambda(c: CollapsedChain, dist: StationaryDist, T: int, horizon: float = 5.0) -> tuple[float, TailFit]:
    """``lambda = pi~(∂) / R_T(∂)`` and the sup relative error of the geometric tail
    ``|P(tau_∂ > t) / (1 - lambda)^t - 1|`` over ``t <= horizon / lambda``."""
    if c.n > MAX_N_EXPLICIT:
        raise StateSpaceError(f"exact tail fit limited to n <= {MAX_N_EXPLICIT}")
    if not c.reset_is_mu_tilde:
        raise ValueError("the tail fit needs the mu_tilde reset")
    if dist.pi2_sum >= 1.0 - 1e-15:
        raise ValueError("pi~ is concentrated on ∂; no off-diagonal support to hit from")
    RT = r_t(c, T)
    lam = dist.pi2_sum / RT
    t_max = int(math.ceil(horizon / lam))
    tail = hitting_tail(c, dist, t_max)
    t = np.arange(t_max + 1)
    err = float(np.abs(tail / np.exp(t * math.log1p(-lam)) - 1.0).max())
    return lam, TailFit(lam, err, t_max, int(T), RT, dist.pi2_sum)
