"""Command-line entry point: ``hypercore <command> [options]``.

Exit codes: 0 success, 1 failed ``--check`` assertion, 2 usage or input error.
Every report embeds the resolved configuration, including the seed, and
identical inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analytic, branching, census, hypergraph, wp
from .analytic import ModelParams

TREE_KINDS = ("T", "Tt", "Tstar", "truncated", "hatTstar", "hatT", "binary")


class CheckFailed(AssertionError):
    pass


def _dump(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _seed(args) -> int:
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % 2**63)
    return args.seed


def _params(args) -> ModelParams:
    return ModelParams(args.d, args.r, args.k)


def _config(args, *keys) -> dict:
    return {key: getattr(args, key) for key in keys}


def _instance(args) -> tuple[hypergraph.Hypergraph, dict]:
    """Read the instance file, or generate one from ``--n --d --r --seed``."""
    if args.instance:
        h = hypergraph.read_hypergraph(args.instance)
        return h, {"instance": str(args.instance), "n": h.n, "r": h.r, "m": h.m}
    if args.n is None:
        raise ValueError("give an instance file or --n (with --d, --r, --seed) to generate one")
    seed = _seed(args)
    h = hypergraph.sample_hypergraph(args.n, ModelParams(args.d, args.r, max(args.k, 2)), seed)
    return h, {"n": args.n, "d": args.d, "r": args.r, "seed": seed, "m": h.m}


def cmd_analytic(args) -> dict:
    params = _params(args)
    th = analytic.threshold(params.r, params.k)
    fp = analytic.largest_fixed_point(params, tol=args.tol)
    report = {
        "config": _config(args, "d", "r", "k", "tol"),
        "c": params.c,
        "d_threshold": th.d_rk,
        "lambda_min": th.lambda_min,
        "subcritical": analytic.is_subcritical(params),
        "p_star": fp.p_star,
        "iterations": fp.iterations,
        "residual": fp.residual,
        "psi": analytic.core_fraction_law(params),
    }
    if not report["subcritical"]:
        report["lambda"] = analytic.lambda_rk(params)
    co = analytic.coefficients(params, fp.p_star)
    report.update(q=co.q, q_bar=co.q_bar, q_tilde=co.q_tilde)
    return report


def cmd_gen(args) -> dict:
    if args.n is None:
        raise ValueError("--n is required")
    seed = _seed(args)
    h = hypergraph.sample_hypergraph(args.n, ModelParams(args.d, args.r, 2), seed)
    if args.graph_out:
        hypergraph.write_hypergraph(h, args.graph_out)
    return {"config": _config(args, "n", "d", "r", "seed", "graph_out"), "m": h.m}


def cmd_core(args) -> dict:
    h, inst = _instance(args)
    f = hypergraph.to_factor_graph(h)
    marking = hypergraph.peel_core(f, args.k)
    report = {
        "config": {**inst, "k": args.k},
        "core_size": marking.size,
        "core_factors": int(marking.fac_mark.sum()),
        "fraction": hypergraph.core_fraction(marking),
        "rounds": marking.rounds,
    }
    if args.marks_out:
        Path(args.marks_out).write_text(
            json.dumps({"var_mark": marking.var_mark.astype(int).tolist(),
                        "fac_mark": marking.fac_mark.astype(int).tolist()}) + "\n"
        )
    return report


def cmd_wp(args) -> dict | str:
    h, inst = _instance(args)
    f = hypergraph.to_factor_graph(h)
    if args.t is not None:
        if args.t < 0:
            raise ValueError("--t must be >= 0")
        state = wp.wp_init(f)
        marks = wp.wp_marks(state, f, args.k)
        trace = [wp.trace_row(state, marks)]
        for _ in range(args.t):
            state = wp.wp_step(state, f, args.k, check=args.check)
            marks = wp.wp_marks(state, f, args.k)
            trace.append(wp.trace_row(state, marks))
        result = None
    else:
        # every round before the fixed point switches off at least one of the 2*m*r bits
        max_t = args.max_t if args.max_t is not None else 2 * f.m * f.r + 1
        result = wp.wp_run(f, args.k, max_t=max_t, check=args.check)
        marks, trace = result.marks, result.trace
    if args.check:
        core = hypergraph.peel_core(f, args.k)
        if result is not None and not (
            np.array_equal(marks.var_mark, core.var_mark) and np.array_equal(marks.fac_mark, core.fac_mark)
        ):
            raise CheckFailed("Warning Propagation fixed point differs from the peeled core")
        for a, b in zip(trace, trace[1:]):
            if any(y > x for x, y in zip(a[1:], b[1:])):
                raise CheckFailed(f"trace counts increased between t={a[0]} and t={b[0]}")
    if args.format == "csv":
        return wp.trace_csv(trace)
    report = {
        "config": {**inst, "k": args.k, "t": args.t, "max_t": args.max_t, "check": args.check},
        "t": marks.t,
        "var_marks": int(marks.var_mark.sum()),
        "fac_marks": int(marks.fac_mark.sum()),
        "trace": [dict(zip(wp.TRACE_HEADER.split(","), row)) for row in trace],
    }
    if result is not None:
        report.update(t_fix=result.t_fix, converged=result.converged)
    return report


def tree_sampler(kind: str, params: ModelParams, s: int, t: int | None = None):
    """``(seed, n_trees) -> Forest`` for the named tree process, exact to depth ``s``."""
    p_star = analytic.largest_fixed_point(params).p_star
    if kind == "T":
        return lambda ss, n: branching.sample_T(params, s, ss, n)
    if kind == "Tt":
        if t is None or t < 0:
            raise ValueError("kind Tt needs --t >= 0")
        return lambda ss, n: branching.sample_Tt(params, t, s, ss, n)
    if kind == "Tstar":
        return lambda ss, n: branching.sample_T_star(params, p_star, s, ss, n)
    if kind == "truncated":
        return lambda ss, n: branching.sample_truncated(params, p_star, s, ss, n)
    if kind == "hatTstar":
        return lambda ss, n: branching.sample_hatT_star(params, p_star, s, ss, n)
    if kind == "hatT":
        return lambda ss, n: branching.sample_hatT(params, p_star, s, ss, n)
    if kind == "binary":
        return lambda ss, n: branching.project_to_binary(branching.sample_hatT(params, p_star, s, ss, n))
    raise ValueError(f"unknown tree kind {kind!r}")


def _dist_report(dist: census.NeighborhoodDistribution, config: dict) -> dict:
    return {**dist.to_json(), "config": config}


def cmd_sample_tree(args) -> dict:
    if args.samples is None or args.samples < 1:
        raise census.DomainError("--samples must be >= 1")
    params = _params(args)
    seed = _seed(args)
    sampler = tree_sampler(args.kind, params, args.s, args.t)
    dist = census.mc_distribution(sampler, args.s, args.samples, seed)
    return _dist_report(dist, _config(args, "kind", "d", "r", "k", "s", "t", "samples", "seed"))


def cmd_compare(args) -> dict:
    a = census.NeighborhoodDistribution.load(args.dist_a)
    b = census.NeighborhoodDistribution.load(args.dist_b)
    rep = census.compare(a, b, top=args.top)
    return {**rep.to_json(), "config": {"a": str(args.dist_a), "b": str(args.dist_b), "s": a.s}}


def cmd_census(args) -> dict:
    h, inst = _instance(args)
    f = hypergraph.to_factor_graph(h)
    if args.marks == "none":
        var_marks = fac_marks = None
    elif args.marks == "core":
        m = hypergraph.peel_core(f, args.k)
        var_marks, fac_marks = m.var_mark, m.fac_mark
    else:
        if args.t is None:
            raise ValueError("--marks wp needs --t")
        m = wp.wp_run_t(f, args.k, args.t)
        var_marks, fac_marks = m.var_mark, m.fac_mark
    dist = census.empirical_distribution(f, args.s, var_marks, fac_marks)
    nontree = dist.weights.get(census.nontree_code(args.s), 0.0)
    report = _dist_report(dist, {**inst, "k": args.k, "s": args.s, "marks": args.marks, "t": args.t})
    report["nontree_fraction"] = nontree / f.n if f.n else 0.0
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypercore", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def model(p, d=6.0, r=3, k=2):
        p.add_argument("--d", type=float, default=d)
        p.add_argument("--r", type=int, default=r)
        p.add_argument("--k", type=int, default=k)

    def output(p):
        p.add_argument("--out", help="write the report here instead of stdout")

    def instance(p):
        p.add_argument("instance", nargs="?", help="hypergraph file ('n r m' header, one edge per line)")
        p.add_argument("--n", type=int, help="generate an instance with this many vertices")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("analytic", help="threshold, fixed point, core fraction and coefficients")
    model(p)
    p.add_argument("--tol", type=float, default=analytic.DEFAULT_TOL)
    output(p)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("gen", help="sample a random r-uniform hypergraph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=float, default=6.0)
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="graph_out", help="hypergraph file to write")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("core", help="k-core by peeling")
    instance(p)
    model(p)
    p.add_argument("--marks-out", help="dump the core marking as JSON")
    output(p)
    p.set_defaults(func=cmd_core)

    p = sub.add_parser("wp", help="Warning Propagation with a per-step trace")
    instance(p)
    model(p)
    p.add_argument("--t", type=int, help="stop after exactly this many rounds (default: run to the fixed point)")
    p.add_argument("--max-t", type=int, help="round limit when running to the fixed point (default: enough to converge)")
    p.add_argument("--check", action="store_true", help="assert monotonicity and equality with the peeled core")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    output(p)
    p.set_defaults(func=cmd_wp)

    p = sub.add_parser("sample-tree", help="Monte Carlo census of a tree process")
    p.add_argument("kind", choices=TREE_KINDS)
    model(p)
    p.add_argument("--s", type=int, default=2, help="census depth")
    p.add_argument("--t", type=int, help="WP rounds for kind Tt")
    p.add_argument("--samples", type=int, default=10**4)
    p.add_argument("--seed", type=int)
    output(p)
    p.set_defaults(func=cmd_sample_tree)

    p = sub.add_parser("compare", help="total variation between two distribution files")
    p.add_argument("dist_a")
    p.add_argument("dist_b")
    p.add_argument("--top", type=int, default=10)
    output(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("census", help="empirical depth-s neighbourhood census of an instance")
    instance(p)
    model(p)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--marks", choices=("core", "wp", "none"), default="core")
    p.add_argument("--t", type=int, help="WP rounds for --marks wp")
    output(p)
    p.set_defaults(func=cmd_census)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = getattr(args, "out", None)
    if isinstance(result, str):
        if out:
            Path(out).write_text(result)
        else:
            sys.stdout.write(result)
    else:
        _dump(result, out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
