"""Closed-form constants of the meeting-time asymptotics.

Everything here is a deterministic function of the degree statistics
``(delta, beta, rho, gamma)``:

* ``p_frak = (alpha + beta - 1) / delta`` -- limit of ``n <pi^2>``
* ``q_frak = alpha / (alpha + beta - 1)`` -- limit of the pi^2-weighted mean of 1/d+
* ``r_frak = rho / (rho - q_frak (1 - sqrt(1 - rho)))`` -- expected returns to the diagonal
* ``theta = r_frak / p_frak`` -- ``E[tau_meet] ~ theta n / 2``

with ``alpha = (gamma - rho) / (1 - rho)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .degseq import DegreeSequence, DegreeStats, degree_stats


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class TheoryConstants:
    p_frak: float
    q_frak: float
    r_frak: float
    theta: float
    phi: float

    def as_dict(self):
        return {"p": self.p_frak, "q": self.q_frak, "r": self.r_frak, "theta": self.theta, "phi": self.phi}


def _stats_of(obj) -> DegreeStats:
    if isinstance(obj, DegreeSequence):
        return degree_stats(obj)
    return obj


def constants_from_tuple(delta: float, beta: float, rho: float, gamma: float) -> TheoryConstants:
    if not 0.0 < rho <= 0.5:
        raise DomainError(f"rho must lie in (0, 1/2], got {rho!r}")
    if gamma < 1.0 - 1e-12 or beta < 1.0 or delta <= 0.0:
        raise DomainError(f"need gamma >= 1, beta >= 1, delta > 0; got {gamma}, {beta}, {delta}")
    alpha = (gamma - rho) / (1.0 - rho)
    p = (alpha + beta - 1.0) / delta
    q = (gamma - rho) / (gamma - rho + (beta - 1.0) * (1.0 - rho))
    r = rho / (rho - q * (1.0 - math.sqrt(1.0 - rho)))
    return TheoryConstants(p, q, r, r / p, r - 1.0)


def theory_constants(stats) -> TheoryConstants:
    """All five constants from a :class:`DegreeStats` (or a raw :class:`DegreeSequence`)."""
    s = _stats_of(stats)
    return constants_from_tuple(s.delta, s.beta, s.rho, s.gamma)


def theta_design_form(delta: float, beta: float, rho: float, gamma: float) -> float:
    """``theta = delta / ((1 - eps(rho)) alpha + beta - 1)``; algebraically equal to r/p."""
    alpha = (gamma - rho) / (1.0 - rho)
    return delta / ((1.0 - epsilon_fn(rho)) * alpha + beta - 1.0)


def epsilon_fn(x: float) -> float:
    """``(1 - sqrt(1 - x)) / x`` on [0, 1/2], continuously extended by 1/2 at 0."""
    if not 0.0 <= x <= 0.5:
        raise DomainError(f"epsilon_fn defined on [0, 1/2], got {x!r}")
    if x == 0.0:
        return 0.5
    # rationalized form avoids cancellation for small x
    return 1.0 / (1.0 + math.sqrt(1.0 - x))


def closed_form_theta(family: str, **params) -> float:
    """Per-family closed forms of theta.

    ``regular(d)``, ``out_regular(d, beta)``, ``in_regular(d, rho)``,
    ``eulerian(delta, beta)``, ``undirected_regular(d)``.
    """
    if family == "regular":
        d = params["d"]
        if d < 2:
            raise DomainError("regular needs d >= 2")
        return math.sqrt(d / (d - 1.0))
    if family == "out_regular":
        d, beta = params["d"], params["beta"]
        return math.sqrt(d * (d - 1.0)) / (beta - 1.0)
    if family == "in_regular":
        d = params["d"]
        if d == 2:
            return math.sqrt(2.0)
        if d < 2:
            raise DomainError("in_regular needs d >= 2")
        rho = params["rho"]
        return d * math.sqrt(1.0 - rho) / (d - 1.0)
    if family == "eulerian":
        delta, beta = params["delta"], params["beta"]
        return 1.0 / (beta / delta - 1.0 + math.sqrt(1.0 - 1.0 / delta))
    if family == "undirected_regular":
        d = params["d"]
        if d < 3:
            raise DomainError("undirected_regular needs d >= 3")
        return (d - 1.0) / (d - 2.0)
    raise DomainError(f"no closed form for family {family!r}")


# ---------------------------------------------------------------------------
# forest-process laws


def _scaled_catalan_log(s: np.ndarray) -> np.ndarray:
    """log(C_s / 4^s) via log-gamma."""
    from scipy.special import gammaln

    return gammaln(2 * s + 1) - 2 * gammaln(s + 1) - np.log(s + 1) - s * math.log(4.0)


def return_law(t, rho: float, q: float):
    """P(first return to the diagonal at time 2t) = 2^(1-2t) C_(t-1) rho^(t-1) q.

    Accepts a scalar or an array of positive integers ``t``.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=np.int64))
    if (ts < 1).any():
        raise DomainError("t must be >= 1")
    if not 0.0 < rho <= 0.5 or not 0.0 <= q <= 1.0:
        raise DomainError(f"need rho in (0,1/2] and q in [0,1]; got {rho}, {q}")
    out = np.empty(ts.shape, dtype=float)
    small = ts <= 500
    if small.any():
        tmax = int(ts[small].max())
        # c_s = C_s / 4^s by the multiplicative recurrence c_{s+1} = c_s (2s+1) / (2(s+2))
        c = np.empty(tmax)
        c[0] = 1.0
        for s in range(tmax - 1):
            c[s + 1] = c[s] * (2 * s + 1) / (2.0 * (s + 2))
        s = ts[small] - 1
        out[small] = 0.5 * c[s] * rho ** s.astype(float) * q
    big = ~small
    if big.any():
        s = (ts[big] - 1).astype(float)
        if q == 0.0:
            out[big] = 0.0
        else:
            out[big] = np.exp(math.log(0.5) + _scaled_catalan_log(s) + s * math.log(rho) + math.log(q))
    if np.ndim(t) == 0:
        return float(out[0])
    return out


def phi(rho: float, q: float) -> float:
    """``rho / (rho - q (1 - sqrt(1 - rho))) - 1``; expected number of returns minus one."""
    den = rho - q * (1.0 - math.sqrt(1.0 - rho))
    if den <= 0.0:
        raise DomainError(f"non-positive denominator {den!r} for rho={rho}, q={q}")
    return rho / den - 1.0


# ---------------------------------------------------------------------------
# pi^2 weights


def g_weight(d_minus: int, d_plus: int, seq: DegreeSequence, stats: DegreeStats | None = None) -> float:
    """``g(d-, d+) = d- |V_{d-,d+}| / m^2 * (d- + alpha - 1)``."""
    s = stats or degree_stats(seq)
    count = int(np.count_nonzero((seq.in_degrees == d_minus) & (seq.out_degrees == d_plus)))
    if count == 0:
        return 0.0
    m = float(seq.m)
    return d_minus * count / m**2 * (d_minus + s.alpha - 1.0)


def g_table(seq: DegreeSequence) -> dict[tuple[int, int], float]:
    """``g`` on every realized ``(d-, d+)`` pair."""
    s = degree_stats(seq)
    pairs = set(zip(seq.in_degrees.tolist(), seq.out_degrees.tolist()))
    return {pr: g_weight(pr[0], pr[1], seq, s) for pr in sorted(pairs)}


# ---------------------------------------------------------------------------
# mean-field scalings


def consensus_factor(u: float) -> float:
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must lie in (0,1), got {u!r}")
    return -2.0 * ((1.0 - u) * math.log1p(-u) + u * math.log(u))


def limit_scalings(u: float) -> tuple[float, float]:
    """Limits of E[tau_coal] / E[tau_meet] and E[tau_cons] / E[tau_meet]."""
    return 2.0, consensus_factor(u)


# ---------------------------------------------------------------------------
# Figure-1-style table


FIGURE1_MODELS = [
    # (name, out-degrees by half, in-degrees by half)
    ("Model 1 regular", (3, 3), (3, 3)),
    ("Model 2 out-regular", (3, 3), (4, 2)),
    ("Model 3 in-regular", (4, 2), (3, 3)),
    ("Model 4 eulerian", (2, 4), (2, 4)),
    ("Model 5 alternate", (2, 4), (4, 2)),
]

TABLE_COLUMNS = ["family", "delta", "beta", "rho", "gamma", "alpha", "p", "q", "r", "theta"]


def table_row(seq: DegreeSequence, name: str | None = None) -> dict:
    s = degree_stats(seq)
    c = theory_constants(s)
    return {
        "family": name or seq.label,
        "delta": s.delta,
        "beta": s.beta,
        "rho": s.rho,
        "gamma": s.gamma,
        "alpha": s.alpha,
        "p": c.p_frak,
        "q": c.q_frak,
        "r": c.r_frak,
        "theta": c.theta,
    }


def figure1_sequences(n: int = 1000) -> list[tuple[str, DegreeSequence]]:
    from .degseq import DegreeSequence as DS

    out = []
    h = n // 2
    for name, dp, dm in FIGURE1_MODELS:
        out.append(
            (
                name,
                DS(np.repeat(dp, [h, n - h]), np.repeat(dm, [h, n - h]), name),
            )
        )
    return out
