"""Degree sequences for the directed configuration model.

A degree sequence is a pair of integer vectors ``(d_plus, d_minus)`` of the
same length ``n`` with equal sums ``m``.  This module builds the deterministic
families used throughout the package, validates sequences against the bounded
(``strict``) and heavy-tailed (``relaxed``) degree assumptions, and evaluates
the scalar statistics ``delta, beta, rho, gamma, alpha`` that drive every
closed-form constant in :mod:`dcmvoter.theory`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DegreeSequenceError(ValueError):
    """Raised for unbalanced or otherwise malformed degree sequences."""


class BalanceError(DegreeSequenceError):
    pass


class ParityError(DegreeSequenceError):
    pass


@dataclass(frozen=True)
class DegreeSequence:
    out_degrees: np.ndarray
    in_degrees: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        dp = np.asarray(self.out_degrees, dtype=np.int64)
        dm = np.asarray(self.in_degrees, dtype=np.int64)
        if dp.ndim != 1 or dm.ndim != 1 or dp.shape != dm.shape:
            raise DegreeSequenceError("out and in degree vectors must be 1-d of equal length")
        if dp.size == 0:
            raise DegreeSequenceError("empty degree sequence")
        if (dp < 0).any() or (dm < 0).any():
            raise DegreeSequenceError("negative degree")
        if dp.sum() != dm.sum():
            raise BalanceError(
                f"unbalanced sequence: sum(d+)={int(dp.sum())} != sum(d-)={int(dm.sum())}"
            )
        dp.setflags(write=False)
        dm.setflags(write=False)
        object.__setattr__(self, "out_degrees", dp)
        object.__setattr__(self, "in_degrees", dm)

    @property
    def n(self) -> int:
        return int(self.out_degrees.size)

    @property
    def m(self) -> int:
        return int(self.out_degrees.sum())

    def is_eulerian(self) -> bool:
        return bool(np.array_equal(self.out_degrees, self.in_degrees))

    def permuted(self, perm: Sequence[int]) -> "DegreeSequence":
        perm = np.asarray(perm)
        return DegreeSequence(self.out_degrees[perm], self.in_degrees[perm], self.label)

    # -- serialization -------------------------------------------------
    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["v", "dplus", "dminus"])
            for v, (a, b) in enumerate(zip(self.out_degrees, self.in_degrees)):
                w.writerow([v, int(a), int(b)])

    @classmethod
    def from_csv(cls, path, label: str | None = None) -> "DegreeSequence":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["v", "dplus", "dminus"]:
                raise DegreeSequenceError("degree CSV must have header v,dplus,dminus")
            for row in reader:
                rows.append((int(row["v"]), int(row["dplus"]), int(row["dminus"])))
        rows.sort()
        if [r[0] for r in rows] != list(range(len(rows))):
            raise DegreeSequenceError("vertex ids must be 0..n-1")
        return cls(
            np.array([r[1] for r in rows]),
            np.array([r[2] for r in rows]),
            label or Path(path).stem,
        )


# ---------------------------------------------------------------------------
# families


def _blocks(n: int, k: int) -> list[int]:
    """Split ``n`` vertices into ``k`` consecutive blocks; remainders go first."""
    base, rem = divmod(n, k)
    return [base + (1 if i < rem else 0) for i in range(k)]


def _expand(values: Sequence[int], n: int) -> np.ndarray:
    sizes = _blocks(n, len(values))
    return np.repeat(np.asarray(values, dtype=np.int64), sizes)


def regular(d: int, n: int) -> DegreeSequence:
    return DegreeSequence(np.full(n, d), np.full(n, d), f"regular({d})")


def out_regular(d: int, in_spec: Sequence[int], n: int) -> DegreeSequence:
    """Out-degree ``d`` everywhere; in-degrees ``in_spec`` laid out in equal blocks."""
    return DegreeSequence(np.full(n, d), _expand(in_spec, n), f"out_regular({d},{list(in_spec)})")


def in_regular(out_spec: Sequence[int], d: int, n: int) -> DegreeSequence:
    """In-degree ``d`` everywhere; out-degrees ``out_spec`` laid out in equal blocks."""
    return DegreeSequence(_expand(out_spec, n), np.full(n, d), f"in_regular({list(out_spec)},{d})")


def eulerian(degrees: Sequence[int], n: int) -> DegreeSequence:
    """``d+ = d-`` at every vertex, degree values laid out in equal blocks."""
    deg = _expand(degrees, n)
    return DegreeSequence(deg, deg.copy(), f"eulerian({list(degrees)})")


def alternate(a: int, b: int, n: int) -> DegreeSequence:
    """First half ``(d+, d-) = (a, b)``, second half ``(b, a)``."""
    if n % 2:
        raise ParityError(f"alternate family needs even n, got {n}")
    h = n // 2
    dp = np.concatenate([np.full(h, a), np.full(h, b)])
    dm = np.concatenate([np.full(h, b), np.full(h, a)])
    return DegreeSequence(dp, dm, f"alternate({a},{b})")


def custom(out: Sequence[int], inn: Sequence[int]) -> DegreeSequence:
    return DegreeSequence(np.asarray(out), np.asarray(inn), "custom")


_FAMILIES = {
    "regular": regular,
    "out_regular": out_regular,
    "in_regular": in_regular,
    "eulerian": eulerian,
    "alternate": alternate,
    "custom": custom,
}


def build_family(family: str, n: int | None = None, **params) -> DegreeSequence:
    """Build a degree sequence by family name.

    >>> build_family("regular", n=4, d=3).m
    12
    >>> build_family("alternate", n=6, a=2, b=4).out_degrees.tolist()
    [2, 2, 2, 4, 4, 4]
    """
    if family not in _FAMILIES:
        raise DegreeSequenceError(f"unknown family {family!r}; choose from {sorted(_FAMILIES)}")
    if family == "custom":
        return custom(params["out"], params["in"])
    if n is None:
        raise DegreeSequenceError(f"family {family!r} needs n")
    if family == "regular":
        return regular(int(params["d"]), n)
    if family == "out_regular":
        return out_regular(int(params["d"]), params["in_spec"], n)
    if family == "in_regular":
        return in_regular(params["out_spec"], int(params["d"]), n)
    if family == "eulerian":
        return eulerian(params["degrees"], n)
    return alternate(int(params["a"]), int(params["b"]), n)


# ---------------------------------------------------------------------------
# validation


@dataclass
class Condition:
    name: str
    passed: bool
    detail: str
    witness: int | None = None


@dataclass
class ValidationReport:
    mode: str
    conditions: list[Condition] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self):
        lines = [f"validation ({self.mode}): {'PASS' if self.ok else 'FAIL'}"]
        for c in self.conditions:
            w = "" if c.witness is None else f" [witness v={c.witness}]"
            lines.append(f"  ({c.name}) {'pass' if c.passed else 'FAIL'}: {c.detail}{w}")
        return "\n".join(lines)


def validate(seq: DegreeSequence, mode: str = "strict", *, C: float = 2.0, eps: float = 0.1) -> ValidationReport:
    """Check the bounded-degree or the relaxed (heavy-tailed in-degree) conditions.

    ``strict``: (a) d+_min >= 2, (b) d+_max <= C, (c) d-_max <= C.
    ``relaxed``: (a), (b), (c') sum (d-)^(2+eps) <= C n and (d) d-_max <= C n^(1/3 - eps).
    Each condition carries the extremal vertex as a witness.
    """
    dp, dm, n = seq.out_degrees, seq.in_degrees, seq.n
    rep = ValidationReport(mode)
    vmin = int(np.argmin(dp))
    rep.conditions.append(Condition("a", bool(dp[vmin] >= 2), f"d+_min = {int(dp[vmin])} >= 2", vmin))
    vmax = int(np.argmax(dp))
    rep.conditions.append(Condition("b", bool(dp[vmax] <= C), f"d+_max = {int(dp[vmax])} <= C = {C:g}", vmax))
    wmax = int(np.argmax(dm))
    if mode == "strict":
        rep.conditions.append(Condition("c", bool(dm[wmax] <= C), f"d-_max = {int(dm[wmax])} <= C = {C:g}", wmax))
    elif mode == "relaxed":
        s = math.fsum(float(k) ** (2.0 + eps) for k in dm)
        rep.conditions.append(
            Condition("c'", s <= C * n, f"sum (d-)^{2 + eps:g} = {s:.6g} <= C n = {C * n:.6g}", wmax)
        )
        cap = C * n ** (1.0 / 3.0 - eps)
        rep.conditions.append(Condition("d", bool(dm[wmax] <= cap), f"d-_max = {int(dm[wmax])} <= {cap:.6g}", wmax))
    else:
        raise ValueError(f"mode must be 'strict' or 'relaxed', got {mode!r}")
    return rep


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class DegreeStats:
    delta: float
    beta: float
    rho: float
    gamma: float
    alpha: float
    mu_in: np.ndarray

    def as_tuple(self):
        return (self.delta, self.beta, self.rho, self.gamma, self.alpha)


def degree_stats(seq: DegreeSequence) -> DegreeStats:
    """delta = m/n, beta = sum (d-)^2 / m, rho = E_in[1/d+], gamma = E_in[d-/d+], alpha = (gamma-rho)/(1-rho)."""
    dp = seq.out_degrees.astype(float)
    dm = seq.in_degrees.astype(float)
    if (dp < 1).any():
        raise DegreeSequenceError("every vertex needs out-degree >= 1")
    m = float(seq.m)
    mu_in = dm / m
    delta = m / seq.n
    beta = math.fsum(dm * dm) / m
    rho = math.fsum(mu_in / dp)
    gamma = math.fsum(mu_in * dm / dp)
    # rho = 1 only when every vertex with in-degree has out-degree 1
    alpha = (gamma - rho) / (1.0 - rho) if rho < 1.0 else math.nan
    return DegreeStats(delta, beta, rho, gamma, alpha, mu_in)
