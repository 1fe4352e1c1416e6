"""Command-line batch runner.

Every command that writes files also writes ``manifest.json`` with the
seed (auto-generated seeds included), the materialized parameters and the
wall time.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, checks, collapsed, dynamics, stationary, stats, theory
from ._backend import BACKEND
from .degseq import DegreeSequence, DegreeSequenceError, build_family, validate
from .graph import NonErgodicError, ergodicity, sample_ergodic, write_manifest

FAMILIES = ["regular", "out_regular", "in_regular", "eulerian", "alternate", "custom"]


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def resolve_seed(args) -> tuple[int, str]:
    if args.seed is not None:
        return int(args.seed), "flag"
    env = os.environ.get("DCM_SEED")
    if env:
        return int(env), "DCM_SEED"
    return int(np.random.SeedSequence().entropy % (2**63)), "entropy"


def family_params(args) -> dict:
    f = args.family
    if f == "regular":
        return {"d": args.d}
    if f == "alternate":
        return {"a": args.a, "b": args.b}
    if f == "out_regular":
        return {"d": args.d, "in_spec": _ints(args.in_spec)}
    if f == "in_regular":
        return {"d": args.d, "out_spec": _ints(args.out_spec)}
    if f == "eulerian":
        return {"degrees": _ints(args.degrees)}
    return {"degree_csv": args.degree_csv}


def build_sequence(args) -> DegreeSequence:
    params = family_params(args)
    if args.family == "custom":
        if not args.degree_csv:
            raise DegreeSequenceError("custom family needs --degree-csv")
        return DegreeSequence.from_csv(args.degree_csv)
    return build_family(args.family, n=args.n, **params)


def _out_dir(args) -> Path | None:
    if not args.out:
        return None
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _manifest(args, seed, seed_source, extra: dict) -> dict:
    m = {
        "command": " ".join([args.command] + ([args.dynamic] if getattr(args, "dynamic", None) else [])),
        "argv": getattr(args, "argv", sys.argv[1:]),
        "seed": seed,
        "seed_source": seed_source,
        "n": getattr(args, "n", None),
        "family": getattr(args, "family", None),
        "params": family_params(args) if getattr(args, "family", None) else {},
        "version": __version__,
        "backend": BACKEND,
    }
    m.update(extra)
    return m


def _graph(args, seq, seed):
    gseed = int(args.quenched_seed) if args.quenched_seed is not None else seed
    rep = validate(seq, args.mode, C=args.C)
    if not rep.ok:
        print(str(rep), file=sys.stderr)
    g = sample_ergodic(seq, gseed, policy="resample")
    return g, gseed, rep


# ---------------------------------------------------------------------------
# commands


def cmd_theory(args) -> int:
    if args.preset == "figure1":
        rows = [theory.table_row(seq, name) for name, seq in theory.figure1_sequences(1000)]
    else:
        seq = build_sequence(args)
        rows = [theory.table_row(seq)]
    fh = open(Path(args.out), "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=theory.TABLE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_generate(args) -> int:
    seed, src = resolve_seed(args)
    t0 = time.perf_counter()
    seq = build_sequence(args)
    g, gseed, rep = _graph(args, seq, seed)
    out = _out_dir(args) or Path(".")
    seq.to_csv(out / "degrees.csv")
    g.to_csv(out / "edges.csv")
    erg = ergodicity(g)
    write_manifest(
        out / "manifest.json",
        _manifest(
            args,
            seed,
            src,
            {
                "graph_seed": gseed,
                "retries": g.retries,
                "m": g.m,
                "support_size": int(erg.support.size),
                "validation": {"mode": rep.mode, "ok": rep.ok},
                "wall_seconds": time.perf_counter() - t0,
            },
        ),
    )
    print(f"wrote {out / 'edges.csv'} (n={g.n}, m={g.m}, retries={g.retries})")
    return 0


_REFERENCE = {
    "meeting": lambda u: stats.ReferenceDist("exp1"),
    "coalescence": lambda u: stats.ReferenceDist("kingman_sum"),
    "voter": lambda u: stats.ReferenceDist("consensus_sum", u=u),
}


def cmd_simulate(args) -> int:
    seed, src = resolve_seed(args)
    t0 = time.perf_counter()
    seq = build_sequence(args)
    g, gseed, rep = _graph(args, seq, seed)
    d = stationary.stationary(g)
    if args.dynamic == "meeting":
        s = dynamics.simulate_meeting(g, d, args.trials, seed, workers=args.workers)
    elif args.dynamic == "coalescence":
        s = dynamics.simulate_coalescence(g, args.trials, seed, workers=args.workers)
    else:
        s = dynamics.simulate_voter(g, args.u, args.trials, seed, workers=args.workers)
    wall = time.perf_counter() - t0
    out = _out_dir(args) or Path(".")
    s.to_csv(out / "samples.csv")
    summary = stats.empirical_summary(s.values, bins=args.bins, censored=s.censored)
    result = {"mean": summary.mean, "se": summary.se, "quantiles": summary.quantiles}
    if s.rescale_divisor is not None:
        s.to_csv(out / "samples_rescaled.csv", rescaled=True)
        resc = s.rescaled()[~s.censored.astype(bool)]
        ref = _REFERENCE[args.dynamic](args.u)
        result.update(
            rescale_divisor=s.rescale_divisor,
            rescaled_mean=float(resc.mean()),
            reference=ref.kind,
            reference_mean=stats.reference_mean(ref),
            w1=stats.wasserstein1(resc, ref, seed),
        )
        stats.empirical_summary(resc, bins=args.bins).histogram_csv(out / "histogram_rescaled.csv")
    summary.histogram_csv(out / "histogram.csv")
    if s.winners is not None:
        result["consensus_on_one"] = float(s.winners.mean())
    (out / "summary.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    write_manifest(
        out / "manifest.json",
        _manifest(
            args,
            seed,
            src,
            {
                "graph_seed": gseed,
                "retries": g.retries,
                "trials": args.trials,
                "u": args.u if args.dynamic == "voter" else None,
                "workers": args.workers,
                "censored_count": s.censored_count,
                "wall_seconds": wall,
            },
        ),
    )
    print(json.dumps(result, sort_keys=True))
    return 0


def cmd_collapsed(args) -> int:
    seed, src = resolve_seed(args)
    t0 = time.perf_counter()
    seq = build_sequence(args)
    g, gseed, _ = _graph(args, seq, seed)
    d = stationary.stationary(g)
    c = collapsed.build_collapsed(g, dist=d)
    out = _out_dir(args) or Path(".")
    T = collapsed.default_T(g.n) if args.T is None else int(args.T)
    if args.what == "rt":
        curve = collapsed.return_curve(c, T)
        curve.to_csv(out / "rt.csv")
        res = {
            "T": T,
            "R_T": float(curve.R[-1]),
            "r": theory.theory_constants(seq).r_frak,
            "pi_partial": d.pi2_sum,
            "centred_green": collapsed.centred_green(c, d.pi2_sum),
        }
    elif args.what == "lambda":
        _, fit = collapsed.fvtl_lambda(c, d, T)
        fit.to_json(out / "tail_fit.json")
        res = fit.__dict__
    else:
        disc, cont = collapsed.exact_meeting_expectation(g, d)
        res = {"discrete": disc, "continuous": cont}
    (out / "collapsed.json").write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
    write_manifest(
        out / "manifest.json",
        _manifest(args, seed, src, {"graph_seed": gseed, "retries": g.retries, "T": T, "wall_seconds": time.perf_counter() - t0}),
    )
    print(json.dumps(res, sort_keys=True))
    return 0


def cmd_forest(args) -> int:
    seed, src = resolve_seed(args)
    t0 = time.perf_counter()
    seq = build_sequence(args)
    T = int(args.T) if args.T is not None else int(math.floor(math.log(seq.n) ** 6))
    f = dynamics.simulate_forest(seq, "mu_in", T, args.trials, seed, workers=args.workers)
    out = _out_dir(args) or Path(".")
    f.to_csv(out / "first_return.csv")
    res = {
        "reset_count_mean": f.reset_count_mean,
        "reset_count_se": f.reset_count_se,
        "target": 1.0 + theory.phi(f.rho, f.q_in),
        "rho": f.rho,
        "q": f.q_in,
        "T": T,
    }
    (out / "forest.json").write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
    write_manifest(
        out / "manifest.json",
        _manifest(args, seed, src, {"trials": args.trials, "T": T, "wall_seconds": time.perf_counter() - t0}),
    )
    print(json.dumps(res, sort_keys=True))
    return 0


def cmd_mixing(args) -> int:
    seed, src = resolve_seed(args)
    t0 = time.perf_counter()
    seq = build_sequence(args)
    g, gseed, _ = _graph(args, seq, seed)
    d = stationary.stationary(g)
    starts = "all" if args.starts == "all" else int(args.starts)
    eps = [float(e) for e in args.epsilons.split(",")]
    prof = stationary.tv_profile(g, d, eps, starts=starts, seed=seed)
    out = _out_dir(args) or Path(".")
    d.to_csv(out / "pi.csv")
    prof.to_csv(out / "tv.csv")
    write_manifest(
        out / "manifest.json",
        _manifest(
            args,
            seed,
            src,
            {"graph_seed": gseed, "t_ent": prof.t_ent, "H": prof.H, "wall_seconds": time.perf_counter() - t0},
        ),
    )
    for t, v in zip(prof.times, prof.tv_values):
        print(f"t={t} tv={v:.6f}")
    return 0


def cmd_check(args) -> int:
    seed, _ = resolve_seed(args) if (args.seed is not None or os.environ.get("DCM_SEED")) else (20240607, "default")
    ctx = checks.Context(seed=seed, workers=args.workers)
    overrides = {}
    if args.n is not None:
        ctx.n_mc = int(args.n)
        overrides[6] = {"n": int(args.n)}
    results = checks.run_suite(args.suite, ctx, **overrides)
    sys.stdout.write(checks.format_report(results))
    if args.out:
        out = _out_dir(args)
        (out / "check.json").write_text(json.dumps([r.as_dict() for r in results], indent=2, default=float) + "\n")
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, family=True) -> None:
    if family:
        p.add_argument("--family", choices=FAMILIES, default="regular")
        p.add_argument("--d", type=int, default=3)
        p.add_argument("--a", type=int, default=2)
        p.add_argument("--b", type=int, default=4)
        p.add_argument("--in-spec", default="2,4", help="comma list of in-degrees (out_regular)")
        p.add_argument("--out-spec", default="2,4", help="comma list of out-degrees (in_regular)")
        p.add_argument("--degrees", default="2,4", help="comma list of degrees (eulerian)")
        p.add_argument("--degree-csv", default=None, help="v,dplus,dminus file (custom)")
        p.add_argument("--n", type=int, default=1000)
        p.add_argument("--mode", choices=["strict", "relaxed"], default="strict")
        p.add_argument("--C", type=float, default=10.0, help="degree bound for validation")
        p.add_argument("--quenched-seed", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcmvoter", description=__doc__)
    parser.add_argument("--config", default=None, help="key=value file; flags override it")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="closed-form constants as a CSV table")
    _common(p)
    p.add_argument("--preset", choices=["figure1"], default=None)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("generate", help="sample an ergodic graph and write it as CSV")
    _common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="meeting, coalescence or voter samples on one quenched graph")
    p.add_argument("dynamic", choices=["meeting", "coalescence", "voter"])
    _common(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--u", type=float, default=0.5)
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("collapsed", help="exact collapsed-chain computations")
    p.add_argument("what", choices=["rt", "lambda", "exact-meeting"])
    _common(p)
    p.add_argument("--T", type=int, default=None)
    p.set_defaults(func=cmd_collapsed)

    p = sub.add_parser("forest", help="forest-process returns to the diagonal")
    _common(p)
    p.add_argument("--trials", type=int, default=10**5)
    p.add_argument("--T", type=int, default=None)
    p.set_defaults(func=cmd_forest)

    p = sub.add_parser("mixing", help="stationary law and TV profile")
    _common(p)
    p.add_argument("--starts", default="100", help="'all' or a number of sampled starts")
    p.add_argument("--epsilons", default="0.25,0.5,0.75,1.0,1.25,1.5,2.0")
    p.set_defaults(func=cmd_mixing)

    p = sub.add_parser("check", help="run acceptance checks; exit 1 on failure")
    _common(p, family=False)
    p.add_argument("--suite", choices=sorted(checks.SUITES), default="exact")
    p.add_argument("--n", type=int, default=None)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cfg = read_config(known.config)
        for action in parser._subparsers._group_actions:
            for sp in action.choices.values():
                valid = {a.dest for a in sp._actions}
                sp.set_defaults(**{k: v for k, v in cfg.items() if k in valid})
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except (DegreeSequenceError, NonErgodicError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
