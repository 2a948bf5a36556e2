"""Command-line front end: named experiments plus the verification suite.

Replicates are partitioned into fixed-size chunks, one indexed RNG stream
per chunk, and chunk results are concatenated in index order, so output
files are byte-identical for a given config regardless of ``--jobs``.
Output files carry no timestamps; metric rows carry the config hash and
seed.  Exit codes: 0 all checks in scope passed, 1 a check failed,
2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import chains, limitlaw, sieve, stats, walks
from .randkit import RngStream

SCHEMA_VERSION = 1
CHUNK = 4096


# ----------------------------------------------------------------------
# law descriptor parsing (shared by flags and worker processes)

def parse_wlaw(text: str) -> sieve.WLaw:
    name, _, rest = text.partition(":")
    args = [float(x) for x in rest.split(",") if x] if rest else []
    if name == "uniform" and not args:
        return sieve.UniformW()
    if name == "beta" and len(args) == 2:
        return sieve.BetaW(*args)
    if name == "const" and len(args) == 1:
        return sieve.ConstantW(args[0])
    if name == "mixture" and len(args) in (2, 3):
        return sieve.LogParetoMixtureW(*args)
    raise ValueError(
        f"unknown W law {text!r} (expected uniform, beta:a,b, const:w, mixture:a,b[,p])"
    )


def parse_marginal(text: str) -> walks.MarginalLaw:
    name, _, rest = text.partition(":")
    args = [float(x) for x in rest.split(",") if x] if rest else []
    if name == "pareto" and len(args) == 1:
        return walks.ParetoLaw(args[0])
    if name == "exp" and len(args) <= 1:
        return walks.ExponentialLaw(*args)
    if name == "const" and len(args) == 1:
        return walks.ConstantLaw(args[0])
    if name == "logdecay" and not args:
        return walks.LogDecayLaw()
    raise ValueError(
        f"unknown marginal law {text!r} (expected pareto:a, exp:mean, const:c, logdecay)"
    )


def _config_hash(params: dict) -> str:
    blob = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


# ----------------------------------------------------------------------
# chunked replicate runner (order-stable, jobs-independent)

def _chunk_plan(total: int):
    return [(cid, min(CHUNK, total - cid * CHUNK)) for cid in range((total + CHUNK - 1) // CHUNK)]


def _run_chunks(worker, seed: int, total: int, jobs: int, payload: tuple):
    tasks = [(seed, cid, count, payload) for cid, count in _chunk_plan(total)]
    if jobs <= 1 or len(tasks) == 1:
        parts = [worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(worker, tasks))
    return parts


def _chunk_sample_z(task):
    seed, cid, count, payload = task
    alpha, beta, sampler, grid_step, eps = payload
    rng = RngStream(seed, cid).generator()
    params = limitlaw.AlphaBeta(alpha, beta)
    if sampler == "pathint":
        return limitlaw.sample_z_pathint(params, grid_step, rng, size=count)
    if sampler == "expfunc":
        return limitlaw.sample_z_expfunctional(params, eps, rng, size=count)
    if sampler == "mittag-leffler":
        if beta != 0.0:
            raise ValueError("the direct Mittag-Leffler sampler requires beta = 0")
        return limitlaw.sample_mittag_leffler(alpha, rng, size=count)
    raise ValueError(f"unknown sampler {sampler!r}")


def _chunk_sieve(task):
    seed, cid, count, payload = task
    wlaw_text, balls = payload
    rng = RngStream(seed, cid).generator()
    batch = sieve.sample_occupancy(parse_wlaw(wlaw_text), balls, count, rng)
    return np.stack([batch.occupied, batch.last_occupied, batch.empty_in_range], axis=1)


def _chunk_prw(task):
    seed, cid, count, payload = task
    xi_text, eta_text, multiplier, t, stat, q_exponent = payload
    rng = RngStream(seed, cid).generator()
    xi_law = parse_marginal(xi_text)
    if multiplier is not None:
        law = walks.PrwLaw.coupled(xi_law, multiplier)
    else:
        law = walks.PrwLaw.independent(xi_law, parse_marginal(eta_text))
    horizon = t + 40.0 if stat in ("empty", "busy") else t
    norm = float(np.asarray(law.xi_tail(t)) / np.asarray(law.eta_tail(t))) if stat in ("empty", "busy") else 1.0
    out = np.empty(count)
    for r in range(count):
        path = walks.generate_path(law, horizon, rng)
        if stat == "empty":
            out[r] = norm * walks.empty_box_functional(path, log_t=t)
        elif stat == "busy":
            out[r] = norm * walks.busy_server_count(path, t)
        elif stat == "renewals":
            out[r] = float(np.asarray(law.xi_tail(t))) * walks.renewal_count(path, t)
        elif stat == "window":
            q = lambda x: (1.0 + x) ** -q_exponent
            out[r] = walks.weighted_window_statistic(path, t, q, law.xi_tail)
        else:
            raise ValueError(f"unknown statistic {stat!r}")
    return out


def _chunk_markov(task):
    seed, cid, count, payload = task
    spec_json, n, method = payload
    rng = RngStream(seed, cid).generator()
    spec = chains.chain_from_json(spec_json)
    if method == "direct":
        return chains.sample_zero_decrements(spec, n, count, rng)
    return chains.sample_geometric_rep(spec, n, count, rng)


# ----------------------------------------------------------------------
# output plumbing

def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])


def _write_detail_json(path: Path, header, rows):
    records = [dict(zip(header, row)) for row in rows]
    path.write_text(json.dumps(records, sort_keys=True, indent=2) + "\n")


def _emit(outdir: Path, name: str, fmt: str, header, rows, summary: dict) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        _write_detail_json(outdir / f"{name}.json", header, rows)
    else:
        _write_csv(outdir / f"{name}.csv", header, rows)
    summary_path = outdir / f"{name}.summary.json"
    summary_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return summary_path


def _summary_base(experiment: str, params: dict, seed: int, cfg_hash: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": experiment,
        "params": params,
        "seed": seed,
        "config_hash": cfg_hash,
    }


# ----------------------------------------------------------------------
# experiments

def cmd_moments(args) -> int:
    params = {"alpha": args.alpha, "beta": args.beta, "nmax": args.nmax}
    cfg = _config_hash({"experiment": "moments", "seed": args.seed, **params})
    ab = limitlaw.AlphaBeta(args.alpha, args.beta)
    rows = []
    worst_identity = 0.0
    for n in range(1, args.nmax + 1):
        zm = limitlaw.z_moment(ab, n)
        ml = limitlaw.mittag_leffler_moment(args.alpha, n)
        prod = math.prod(limitlaw.phi_alpha(args.alpha, float(k)) + 1.0 for k in range(1, n + 1))
        from .randkit import gamma_fn

        closed = gamma_fn(1.0 + n * args.alpha) * gamma_fn(1.0 - args.alpha) ** n
        rel = abs(prod - closed) / closed
        worst_identity = max(worst_identity, rel)
        rows.append((cfg, args.seed, n, float(zm), float(ml), float(math.factorial(n)), rel))
    checks = {
        "phi_product_identity": {"value": worst_identity, "tolerance": 1e-10,
                                 "passed": worst_identity <= 1e-10},
    }
    if args.beta == args.alpha:
        rel = max(
            abs(limitlaw.z_moment(ab, n) - math.factorial(n)) / math.factorial(n)
            for n in range(1, args.nmax + 1)
        )
        checks["z_equals_factorial"] = {"value": rel, "tolerance": 1e-10, "passed": rel <= 1e-10}
    if args.beta == 0.0:
        rel = max(
            abs(limitlaw.z_moment(ab, n) - limitlaw.mittag_leffler_moment(args.alpha, n))
            / limitlaw.mittag_leffler_moment(args.alpha, n)
            for n in range(1, args.nmax + 1)
        )
        checks["z_equals_mittag_leffler"] = {"value": rel, "tolerance": 1e-10, "passed": rel <= 1e-10}
    summary = _summary_base("moments", params, args.seed, cfg)
    summary["checks"] = checks
    summary["passed"] = all(c["passed"] for c in checks.values())
    _emit(args.out, f"moments_{cfg}", args.format,
          ["config_hash", "seed", "order", "z_moment", "ml_moment", "factorial",
           "phi_product_rel_err"], rows, summary)
    print(f"moments: {'PASS' if summary['passed'] else 'FAIL'} "
          f"(max identity error {worst_identity:.2e})")
    return 0 if summary["passed"] else 1


def cmd_sample_z(args) -> int:
    params = {
        "alpha": args.alpha, "beta": args.beta, "n": args.n, "sampler": args.sampler,
        "grid_step": args.grid_step, "eps": args.eps,
    }
    cfg = _config_hash({"experiment": "sample-z", "seed": args.seed, **params})
    payload = (args.alpha, args.beta, args.sampler, args.grid_step, args.eps)
    parts = _run_chunks(_chunk_sample_z, args.seed, args.n, args.jobs, payload)
    draws = np.concatenate(parts)
    ab = limitlaw.AlphaBeta(args.alpha, args.beta)
    m1_t, m2_t = limitlaw.z_moment(ab, 1), limitlaw.z_moment(ab, 2)
    est1 = stats.mc_accumulate(draws)
    est2 = stats.mc_accumulate(draws**2)
    tol1 = 3.0 * est1.stderr + 0.02 * m1_t
    tol2 = 3.0 * est2.stderr + 0.02 * m2_t
    ok = abs(est1.mean - m1_t) <= tol1 and abs(est2.mean - m2_t) <= tol2
    rows = [(cfg, args.seed, i, float(v)) for i, v in enumerate(draws)]
    summary = _summary_base("sample-z", params, args.seed, cfg)
    summary["metrics"] = {
        "mean": est1.mean, "mean_stderr": est1.stderr, "target_mean": m1_t,
        "second_moment": est2.mean, "second_moment_stderr": est2.stderr,
        "target_second_moment": m2_t, "mean_tolerance": tol1, "second_moment_tolerance": tol2,
    }
    summary["passed"] = bool(ok)
    _emit(args.out, f"sample-z_{cfg}", args.format,
          ["config_hash", "seed", "replicate", "value"], rows, summary)
    print(f"sample-z: {'PASS' if ok else 'FAIL'} mean {est1.mean:.5f} vs {m1_t:.5f}, "
          f"m2 {est2.mean:.5f} vs {m2_t:.5f}")
    return 0 if ok else 1


def cmd_sieve(args) -> int:
    params = {"wlaw": args.wlaw, "balls": args.balls, "reps": args.reps}
    cfg = _config_hash({"experiment": "sieve", "seed": args.seed, **params})
    wlaw = parse_wlaw(args.wlaw)
    parts = _run_chunks(_chunk_sieve, args.seed, args.reps, args.jobs, (args.wlaw, args.balls))
    table = np.concatenate(parts, axis=0)
    empty = table[:, 2]
    rows = [(cfg, args.seed, i, int(k), int(m), int(l)) for i, (k, m, l) in enumerate(table)]
    summary = _summary_base("sieve", params, args.seed, cfg)
    emp = chains.empirical_pmf(empty)
    summary["metrics"] = {
        "mean_occupied": float(table[:, 0].mean()),
        "mean_empty": float(empty.mean()),
        "empty_pmf": [float(x) for x in emp.masses],
    }
    passed = True
    if wlaw.symmetric:
        tv = stats.tv_distance(emp, chains.geometric_pmf(0.5, emp.masses.size))
        passed = tv <= 0.01
        summary["metrics"]["tv_vs_geometric_half"] = tv
        summary["metrics"]["tv_tolerance"] = 0.01
    summary["passed"] = bool(passed)
    _emit(args.out, f"sieve_{cfg}", args.format,
          ["config_hash", "seed", "replicate", "occupied", "last_occupied", "empty_in_range"],
          rows, summary)
    msg = f"sieve: {'PASS' if passed else 'FAIL'} mean empty {empty.mean():.4f}"
    if wlaw.symmetric:
        msg += f", TV vs geometric(1/2) {summary['metrics']['tv_vs_geometric_half']:.5f}"
    print(msg)
    return 0 if passed else 1


def cmd_prw(args) -> int:
    params = {
        "xi": args.xi, "eta": args.eta, "coupled_multiplier": args.coupled_multiplier,
        "t": args.t, "stat": args.stat, "reps": args.reps, "q_exponent": args.q_exponent,
    }
    cfg = _config_hash({"experiment": "prw", "seed": args.seed, **params})
    payload = (args.xi, args.eta, args.coupled_multiplier, args.t, args.stat, args.q_exponent)
    parts = _run_chunks(_chunk_prw, args.seed, args.reps, args.jobs, payload)
    values = np.concatenate(parts)
    est = stats.mc_accumulate(values)
    rows = [(cfg, args.seed, i, float(v)) for i, v in enumerate(values)]
    summary = _summary_base("prw", params, args.seed, cfg)
    summary["metrics"] = {"mean": est.mean, "stderr": est.stderr}
    summary["passed"] = True
    _emit(args.out, f"prw_{cfg}", args.format,
          ["config_hash", "seed", "replicate", "value"], rows, summary)
    print(f"prw[{args.stat}]: mean {est.mean:.5f} +- {est.stderr:.5f}")
    return 0


def _build_chain(args) -> tuple[chains.ChainSpec, str]:
    if args.spec_json:
        text = Path(args.spec_json).read_text()
        return chains.chain_from_json(text), "custom"
    name, _, rest = args.chain.partition(":")
    if name == "sieve":
        wlaw = parse_wlaw(rest)
        return chains.sieve_chain_spec(wlaw, args.n), args.chain
    if name == "barrier":
        kind, _, param = rest.partition(":")
        if kind == "dyadic":
            p = 2.0 ** -np.arange(1, args.n + 1, dtype=float)
        elif kind == "geom":
            q = float(param)
            p = (1.0 - q) * q ** np.arange(args.n, dtype=float)
        else:
            raise ValueError(f"unknown barrier step law {rest!r}")
        return chains.barrier_chain_spec(p, args.n), args.chain
    raise ValueError(f"unknown chain {args.chain!r}")


def cmd_markov(args) -> int:
    params = {"chain": args.chain, "n": args.n, "reps": args.reps}
    cfg = _config_hash({"experiment": "markov", "seed": args.seed, **params})
    spec, _label = _build_chain(args)
    if args.export_spec:
        Path(args.export_spec).write_text(chains.chain_to_json(spec))
    dp = chains.exact_zero_decrement_pmf(spec, args.n)
    spec_json = chains.chain_to_json(spec)
    sim = np.concatenate(_run_chunks(_chunk_markov, args.seed, args.reps, args.jobs,
                                     (spec_json, args.n, "direct")))
    rep = np.concatenate(_run_chunks(_chunk_markov, args.seed + 1, args.reps, args.jobs,
                                     (spec_json, args.n, "georep")))
    width = max(dp.masses.size, int(sim.max()) + 1, int(rep.max()) + 1)
    sim_pmf = chains.empirical_pmf(sim, width=width)
    rep_pmf = chains.empirical_pmf(rep, width=width)
    tv_sim = stats.tv_distance(sim_pmf, dp)
    tv_rep = stats.tv_distance(rep_pmf, dp)
    passed = tv_sim <= 0.01 and tv_rep <= 0.01
    rows = [
        (cfg, args.seed, m,
         float(dp.masses[m]) if m < dp.masses.size else 0.0,
         float(sim_pmf.masses[m]), float(rep_pmf.masses[m]))
        for m in range(width)
    ]
    summary = _summary_base("markov", params, args.seed, cfg)
    summary["metrics"] = {"tv_sim_vs_dp": tv_sim, "tv_georep_vs_dp": tv_rep,
                          "tv_tolerance": 0.01, "dp_tail_deficit": dp.tail_deficit}
    summary["passed"] = bool(passed)
    _emit(args.out, f"markov_{cfg}", args.format,
          ["config_hash", "seed", "m", "dp_mass", "sim_freq", "georep_freq"], rows, summary)
    print(f"markov: {'PASS' if passed else 'FAIL'} TV sim {tv_sim:.5f}, TV georep {tv_rep:.5f}")
    return 0 if passed else 1


def cmd_verify(args) -> int:
    from . import acceptance

    numbers = acceptance.suite_criteria(args.suite)
    params = {"suite": args.suite}
    cfg = _config_hash({"experiment": "verify", "seed": args.seed, **params})
    rows = []
    results = {}
    all_passed = True
    for num in numbers:
        res = acceptance.run_criterion(num, seed=args.seed, jobs=args.jobs)
        print(res.report_line())
        rows.append((cfg, args.seed, res.number, res.name, res.passed, res.details))
        results[str(res.number)] = {"name": res.name, "passed": res.passed,
                                    "details": res.details, "metrics": res.metrics}
        all_passed &= res.passed
    summary = _summary_base("verify", params, args.seed, cfg)
    summary["criteria"] = results
    summary["passed"] = bool(all_passed)
    _emit(args.out, f"verify_{cfg}", args.format,
          ["config_hash", "seed", "criterion", "name", "passed", "details"], rows, summary)
    print(f"verify[{args.suite}]: {'ALL PASS' if all_passed else 'FAILURES PRESENT'}")
    return 0 if all_passed else 1


# ----------------------------------------------------------------------

def _add_common(sub, reps_default=None):
    sub.add_argument("--seed", type=int, required=True, help="master seed (mandatory)")
    sub.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    sub.add_argument("--format", choices=("csv", "json"), default="csv",
                     help="per-replicate detail format (a JSON summary is always written)")
    sub.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                     help="parallel workers; results do not depend on this")
    if reps_default is not None:
        sub.add_argument("--reps", type=int, default=reps_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sievesim",
        description="Bernoulli sieve / perturbed walk / limit-law experiments",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("moments", help="analytic moment tables and identities")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--nmax", type=int, default=6)
    _add_common(p)
    p.set_defaults(func=cmd_moments)

    p = subs.add_parser("sample-z", help="draw from the limit law and check moments")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, default=100_000, help="number of draws")
    p.add_argument("--sampler", choices=("pathint", "expfunc", "mittag-leffler"),
                   default="pathint")
    p.add_argument("--grid-step", dest="grid_step", type=float, default=1e-4)
    p.add_argument("--eps", type=float, default=1e-4)
    _add_common(p)
    p.set_defaults(func=cmd_sample_z)

    p = subs.add_parser("sieve", help="occupancy statistics of the Bernoulli sieve")
    p.add_argument("--wlaw", required=True, help="uniform | beta:a,b | const:w | mixture:a,b[,p]")
    p.add_argument("--balls", type=int, required=True)
    _add_common(p, reps_default=100_000)
    p.set_defaults(func=cmd_sieve)

    p = subs.add_parser("prw", help="perturbed random walk functionals")
    p.add_argument("--xi", required=True, help="pareto:a | exp:mean | const:c | logdecay")
    p.add_argument("--eta", default="const:0", help="marginal of the perturbation")
    p.add_argument("--coupled-multiplier", dest="coupled_multiplier", type=float, default=None,
                   help="use eta = multiplier * xi instead of an independent eta")
    p.add_argument("--t", type=float, required=True,
                   help="time scale (log scale for the empty-box functional)")
    p.add_argument("--stat", choices=("empty", "busy", "renewals", "window"), default="empty")
    p.add_argument("--q-exponent", dest="q_exponent", type=float, default=0.25,
                   help="exponent of Q(x) = (1+x)^(-q) for the window statistic")
    _add_common(p, reps_default=10_000)
    p.set_defaults(func=cmd_prw)

    p = subs.add_parser("markov", help="zero-decrement law: DP vs samplers")
    p.add_argument("--chain", default="sieve:uniform",
                   help="sieve:<wlaw> | barrier:dyadic | barrier:geom:q")
    p.add_argument("--spec-json", dest="spec_json", default=None,
                   help="load a ChainSpec from a JSON file instead")
    p.add_argument("--n", type=int, default=30, help="start state")
    p.add_argument("--export-spec", dest="export_spec", default=None,
                   help="write the chain spec JSON to this path")
    _add_common(p, reps_default=100_000)
    p.set_defaults(func=cmd_markov)

    p = subs.add_parser("verify", help="run acceptance criteria")
    p.add_argument("--suite", default="all",
                   help="exact | sampler | chain | sieve | walk | trend | determinism | all")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
