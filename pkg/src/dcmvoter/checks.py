"""Acceptance checks shared by the ``check`` subcommand and the test suite.

Each check returns a :class:`CheckResult` with the measured values, the
tolerance it was judged against, the seed and the wall time.  A check whose
runtime exceeds its budget fails.
"""
from __future__ import annotations

import hashlib
import io
import math
import tempfile
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import collapsed, dynamics, stationary, stats, theory
from .degseq import DegreeSequence, alternate, eulerian, in_regular, out_regular, regular, validate
from .graph import Digraph, from_edges, sample_ergodic


@dataclass
class CheckResult:
    id: int
    name: str
    passed: bool
    measured: dict
    tolerance: str
    seed: int
    seconds: float = 0.0
    budget: float = math.inf
    warning: str | None = None

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        extra = f" [warn: {self.warning}]" if self.warning else ""
        return f"criterion {self.id:2d} {verdict}  {self.name}  ({self.seconds:.1f}s){extra}"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["budget"] = None if math.isinf(self.budget) else self.budget
        return d


def k3() -> Digraph:
    """Complete digraph on three vertices, no loops."""
    return from_edges(3, [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)])


def _timed(cid, name, budget, seed, fn) -> CheckResult:
    t0 = time.perf_counter()
    passed, measured, tol, warn = fn()
    dt = time.perf_counter() - t0
    if dt > budget:
        passed = False
        warn = (warn + "; " if warn else "") + f"runtime {dt:.1f}s over budget {budget:.0f}s"
    return CheckResult(cid, name, bool(passed), measured, tol, seed, dt, budget, warn)


@dataclass
class Context:
    """Shared state across checks: the quenched graph of criteria 7-8 and its meeting sample."""

    seed: int = 20240607
    n_mc: int = 2000
    workers: int = 1
    _cache: dict = field(default_factory=dict)

    def quenched(self):
        if "q" not in self._cache:
            g = sample_ergodic(regular(3, self.n_mc), self.seed)
            self._cache["q"] = (g, stationary.stationary(g))
        return self._cache["q"]

    def meeting(self):
        if "meet" not in self._cache:
            g, d = self.quenched()
            self._cache["meet"] = dynamics.simulate_meeting(g, d, 10**4, self.seed + 1, workers=self.workers)
        return self._cache["meet"]


# ---------------------------------------------------------------------------


def random_strict_instance(rng: np.random.Generator, C: int = 4) -> DegreeSequence:
    n = int(rng.integers(2, 9))
    while True:
        dp = rng.integers(2, C + 1, size=n)
        dm = np.bincount(rng.integers(0, n, size=int(dp.sum())), minlength=n)
        if dm.max() <= C:
            seq = DegreeSequence(dp, dm, "random")
            if validate(seq, "strict", C=C).ok:
                return seq


def check_exact_identities(ctx: Context, instances: int = 200) -> CheckResult:
    def run():
        rng = np.random.default_rng(ctx.seed)
        worst_cond = worst_id = 0.0
        failures = 0
        for i in range(instances):
            seq = random_strict_instance(rng)
            g = sample_ergodic(seq, int(rng.integers(2**63)))
            d = stationary.stationary(g)
            c = collapsed.build_collapsed(g, dist=d)
            rep = collapsed.stationary_collapsed(c, d)
            lhs = collapsed.expected_hitting_collapsed(c)
            rhs = collapsed.exact_meeting_expectation(g, d)[0]
            devs = [rep.row_sum_dev, rep.cond12_dev, rep.cond3_partial_dev, rep.cond3_pair_dev]
            worst_cond = max(worst_cond, *devs)
            worst_id = max(worst_id, abs(lhs - rhs))
            failures += (not rep.ok) or abs(lhs - rhs) > 1e-8
        m = {"instances": instances, "max_condition_dev": worst_cond, "max_identity_dev": worst_id, "failures": failures}
        return failures == 0, m, "conditions <= 1e-10, identity <= 1e-8", None

    return _timed(1, "exact identity suite (n <= 8)", 60, ctx.seed, run)


def check_k3(ctx: Context) -> CheckResult:
    def run():
        g = k3()
        d = stationary.stationary(g)
        disc, cont = collapsed.exact_meeting_expectation(g, d)
        s = dynamics.simulate_meeting(g, d, 10**5, ctx.seed, workers=ctx.workers)
        mean = float(s.values.mean())
        se = float(s.values.std(ddof=1) / math.sqrt(s.trials))
        ok = abs(cont - 2 / 3) <= 1e-12 and abs(mean - 2 / 3) <= 3 * se
        return ok, {"exact_discrete": disc, "exact_continuous": cont, "mc_mean": mean, "mc_se": se}, "exact 1e-12, MC 3 SE", None

    return _timed(2, "K3 meeting oracle", 10, ctx.seed, run)


def check_catalan(ctx: Context) -> CheckResult:
    def run():
        t = np.arange(1, 4001)
        worst = 0.0
        for rho in np.linspace(0.01, 0.5, 50):
            s = math.fsum(theory.return_law(t, float(rho), 1.0))
            worst = max(worst, abs(s - (1.0 - math.sqrt(1.0 - rho)) / rho))
        return worst <= 1e-12, {"max_abs_dev": worst, "grid": 50, "t_max": 4000}, "1e-12", None

    return _timed(3, "Catalan identity", 1, ctx.seed, run)


def check_forest(ctx: Context, trials: int = 10**5, T: int = 500) -> CheckResult:
    def run():
        f = dynamics.simulate_forest(regular(3, 12), "mu_in", T, trials, ctx.seed, workers=ctx.workers)
        m = {"reset_mean": f.reset_count_mean, "reset_se": f.reset_count_se, "target_reset": math.sqrt(1.5)}
        ok = abs(f.reset_count_mean - math.sqrt(1.5)) <= 3 * f.reset_count_se
        for t in (1, 2, 3):
            p = theory.return_law(t, 1 / 3, 1 / 3)
            mass, se = f.first_return_mass(2 * t), f.first_return_se(2 * t)
            m[f"mass_{2 * t}"], m[f"target_{2 * t}"], m[f"se_{2 * t}"] = mass, p, se
            ok = ok and abs(mass - p) <= 3 * se
        m["odd_mass"] = float(f.first_return_histogram[1::2].sum())
        ok = ok and m["odd_mass"] == 0.0
        return ok, m, "3 SE", None

    return _timed(4, "forest process vs return law", 30, ctx.seed, run)


def check_rt(ctx: Context, sizes=(500, 1000, 2000), seeds: int = 10) -> CheckResult:
    def run():
        r = math.sqrt(1.5)
        m = {}
        devs = []
        for n in sizes:
            T = collapsed.default_T(n)
            vals, greens = [], []
            for s in range(seeds):
                g = sample_ergodic(regular(3, n), ctx.seed + 1000 * n + s)
                d = stationary.stationary(g)
                c = collapsed.build_collapsed(g, dist=d)
                vals.append(collapsed.r_t(c, T))
                greens.append(collapsed.centred_green(c, d.pi2_sum))
            mean = float(np.mean(vals))
            devs.append(abs(mean / r - 1.0))
            m[f"n{n}"] = {"T": T, "R_T": mean, "rel_dev": devs[-1], "centred_green": float(np.mean(greens))}
        monotone = all(b <= a for a, b in zip(devs, devs[1:]))
        ok = all(dv <= 0.1 for dv in devs) and monotone
        m["monotone"] = monotone
        return ok, m, "within 10% of r, deviation non-increasing in n", None

    return _timed(5, "R_T convergence", 600, ctx.seed, run)


def check_diag_mass(ctx: Context, n: int = 2000, seeds: int = 50) -> CheckResult:
    def run():
        m = {}
        ok = True
        for name, seq in (("regular(3)", regular(3, n)), ("alternate(2,4)", alternate(2, 4, n))):
            c = theory.theory_constants(seq)
            ps, qs = [], []
            for s in range(seeds):
                d = stationary.stationary(sample_ergodic(seq, ctx.seed + s))
                p, q = stationary.pi_diag_stats(d, seq)
                ps.append(p)
                qs.append(q)
            mp, mq = float(np.mean(ps)), float(np.mean(qs))
            m[name] = {"n_pi2": mp, "p": c.p_frak, "q_hat": mq, "q": c.q_frak}
            ok = ok and abs(mp / c.p_frak - 1) <= 0.1 and abs(mq / c.q_frak - 1) <= 0.1
        return ok, m, "10% relative", None

    return _timed(6, "diagonal mass", 600, ctx.seed, run)


def check_meeting_law(ctx: Context) -> CheckResult:
    def run():
        s = ctx.meeting()
        ratio = float(s.values.mean() / s.rescale_divisor)
        w1 = stats.wasserstein1(s.rescaled()[~s.censored.astype(bool)], stats.ReferenceDist("exp1"), ctx.seed)
        ok = 0.9 <= ratio <= 1.1 and w1 <= 0.1
        return ok, {"ratio": ratio, "w1_exp1": w1, "censored": s.censored_count}, "ratio in [0.9,1.1], W1 <= 0.1", None

    return _timed(7, "meeting-time law", 300, ctx.seed, run)


def check_scalings(ctx: Context, trials: int = 2000) -> CheckResult:
    def run():
        g, d = ctx.quenched()
        meet = ctx.meeting()
        mm = float(meet.values.mean())
        coal = dynamics.simulate_coalescence(g, trials, ctx.seed + 2, workers=ctx.workers)
        vot = dynamics.simulate_voter(g, 0.5, trials, ctx.seed + 3, workers=ctx.workers)
        rc = float(coal.values.mean() / mm)
        rv = float(vot.values.mean() / mm)
        target = 2 * math.log(2)
        w_c = stats.wasserstein1(coal.rescaled()[~coal.censored.astype(bool)], stats.ReferenceDist("kingman_sum"), ctx.seed)
        w_v = stats.wasserstein1(
            vot.rescaled()[~vot.censored.astype(bool)], stats.ReferenceDist("consensus_sum", u=0.5), ctx.seed
        )
        ok = 1.8 <= rc <= 2.2 and 0.85 * target <= rv <= 1.15 * target and w_c <= 0.15 and w_v <= 0.15
        m = {
            "coal_over_meet": rc,
            "cons_over_meet": rv,
            "cons_target": target,
            "w1_kingman": w_c,
            "w1_consensus": w_v,
            "consensus_on_one": float(vot.winners.mean()),
        }
        return ok, m, "ratios in stated bands, W1 <= 0.15", None

    return _timed(8, "coalescence/consensus scalings", 1800, ctx.seed, run)


def check_duality(ctx: Context, trials: int = 10**4, horizon: float = 20.0) -> CheckResult:
    def run():
        a = dynamics.graphical_duality_check(k3(), horizon, trials, ctx.seed)
        g = sample_ergodic(regular(3, 50), ctx.seed)
        b = dynamics.graphical_duality_check(g, horizon, trials, ctx.seed + 1)
        m = {"k3_violations": a.violations, "regular50_violations": b.violations, "regular50_coalesced": b.coalesced}
        return a.ok and b.ok, m, "zero violations", None

    return _timed(9, "pathwise duality", 120, ctx.seed, run)


def check_cutoff(ctx: Context, n: int = 5000, starts: int = 100) -> CheckResult:
    def run():
        g = sample_ergodic(regular(3, n), ctx.seed)
        d = stationary.stationary(g)
        prof = stationary.tv_profile(g, d, [0.5, 1.5], starts=starts, seed=ctx.seed)
        lo, hi = prof.tv_values
        short = max(0.5 - lo, hi - 0.25, 0.0)
        warn = None
        if short > 0:
            warn = f"outside thresholds by {short:.3f}"
            warnings.warn(warn)
        m = {"t_ent": prof.t_ent, "times": prof.times, "tv": prof.tv_values}
        return short < 0.1, m, "TV(0.5 t_ent) >= 0.5, TV(1.5 t_ent) <= 0.25 (soft within 0.1)", warn

    return _timed(10, "cutoff sanity", 600, ctx.seed, run)


def family_cases(n: int = 1200) -> list[tuple[str, DegreeSequence, dict]]:
    """Concrete sequences with the parameters of their closed forms."""
    cases = []
    for d in (2, 3, 5):
        cases.append(("regular", regular(d, n), {"d": d}))
    for d, spec in ((3, [2, 4]), (4, [2, 6]), (3, [1, 2, 6])):
        seq = out_regular(d, spec, n)
        cases.append(("out_regular", seq, {"d": d, "beta": float((seq.in_degrees**2).sum() / seq.m)}))
    for spec, d in (([2, 4], 3), ([3, 5], 4), ([2, 3, 4, 7], 4)):
        seq = in_regular(spec, d, n)
        cases.append(("in_regular", seq, {"d": d, "rho": float(np.mean(1.0 / seq.out_degrees))}))
    cases.append(("in_regular", in_regular([2], 2, n), {"d": 2, "rho": 0.5}))
    for spec in ([2, 4], [3, 5, 7], [2, 2, 6]):
        seq = eulerian(spec, n)
        cases.append(
            ("eulerian", seq, {"delta": seq.m / seq.n, "beta": float((seq.in_degrees**2).sum() / seq.m)})
        )
    return cases


def check_theory_routes(ctx: Context, tuples: int = 10**4) -> CheckResult:
    def run():
        rng = np.random.default_rng(ctx.seed)
        worst = 0.0
        for _ in range(tuples):
            delta = rng.uniform(1.0, 20.0)
            rho = rng.uniform(1e-3, 0.5)
            gamma = rng.uniform(1.0, 10.0)
            beta = rng.uniform(1.0, 50.0)
            a = theory.constants_from_tuple(delta, beta, rho, gamma).theta
            b = theory.theta_design_form(delta, beta, rho, gamma)
            worst = max(worst, abs(a - b) / abs(a))
        fam = 0.0
        for family, seq, params in family_cases():
            fam = max(fam, abs(theory.closed_form_theta(family, **params) / theory.theory_constants(seq).theta - 1))
        ok = worst <= 1e-10 and fam <= 1e-10
        return ok, {"route_rel_dev": worst, "family_rel_dev": fam}, "1e-10 relative", None

    return _timed(11, "theory cross-route", 5, ctx.seed, run)


def _digest(sample: dynamics.StoppingTimeSample) -> str:
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "s.csv"
        sample.to_csv(p)
        return hashlib.sha256(p.read_bytes()).hexdigest()


def check_determinism(ctx: Context, n: int = 300, trials: int = 400) -> CheckResult:
    def run():
        g = sample_ergodic(regular(3, n), ctx.seed)
        d = stationary.stationary(g)
        runs = {
            "meeting": lambda w: dynamics.simulate_meeting(g, d, trials, ctx.seed, workers=w),
            "coalescence": lambda w: dynamics.simulate_coalescence(g, trials, ctx.seed, workers=w),
            "voter": lambda w: dynamics.simulate_voter(g, 0.5, trials, ctx.seed, workers=w),
        }
        m = {}
        ok = True
        for name, fn in runs.items():
            digests = {w: _digest(fn(w)) for w in (1, 4, 8)}
            same = len(set(digests.values())) == 1
            m[name] = {"identical": same, "sha256": digests[1][:16]}
            ok = ok and same
        return ok, m, "byte-identical CSV for workers 1, 4, 8", None

    return _timed(12, "determinism across workers", 120, ctx.seed, run)


CHECKS = {
    1: check_exact_identities,
    2: check_k3,
    3: check_catalan,
    4: check_forest,
    5: check_rt,
    6: check_diag_mass,
    7: check_meeting_law,
    8: check_scalings,
    9: check_duality,
    10: check_cutoff,
    11: check_theory_routes,
    12: check_determinism,
}

SUITES = {
    "exact": [1, 2, 9],
    "theory": [3, 11],
    "forest": [4],
    "mc": [5, 6, 7, 8, 10, 12],
    "all": list(range(1, 13)),
}


def run_suite(suite: str, ctx: Context | None = None, **overrides) -> list[CheckResult]:
    ctx = ctx or Context()
    out = []
    for cid in SUITES[suite]:
        out.append(CHECKS[cid](ctx, **overrides.get(cid, {})))
    return out


def format_report(results: list[CheckResult]) -> str:
    buf = io.StringIO()
    for r in results:
        buf.write(r.line() + "\n")
    return buf.getvalue()
