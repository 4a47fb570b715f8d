"""Command-line interface: build sketches, combine them, run experiments.

Exit codes: 0 success, 2 usage error (argparse), 3 data or invariant error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import experiments, goodness, oracles
from .errors import ThetaSketchError
from .experiments import Estimator, StreamSpec
from .io import read_sketch, read_stream, write_sketch
from .samplers import SamplerConfig, make_sampler
from .setops import theta_a_not_b, theta_intersect, theta_union
from .sketch import Predicate, TcfKind, estimate_subpopulation

_BASE_KIND_NAMES = ("kmv", "adaptive", "pkmv", "fixed", "alpha")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _parse_seed(text: str) -> int:
    return int(text, 0)


def _parse_predicate(text: str) -> Predicate:
    if text == "all":
        return Predicate.all()
    if text.startswith("set:"):
        return Predicate.member_set(read_stream(text[4:]))
    if text.startswith("prefix:"):
        return Predicate.prefix_of(text[7:].encode())
    raise argparse.ArgumentTypeError(
        f"predicate must be 'all', 'set:FILE', or 'prefix:STR', got {text!r}"
    )


def _sampler_config(args, retain_ids: bool) -> SamplerConfig:
    kind = TcfKind(args.tcf)
    kwargs = dict(kind=kind, k=args.k, seed=args.seed, retain_ids=retain_ids)
    if kind is TcfKind.ADAPTIVE:
        kwargs["beta"] = args.beta
    if kind in (TcfKind.PKMV, TcfKind.FIXED):
        kwargs["p"] = args.p
    return SamplerConfig(**kwargs)


def _cmd_sketch_build(args) -> int:
    cfg = _sampler_config(args, retain_ids=args.ids)
    sampler = make_sampler(cfg)
    sampler.update_many(read_stream(args.input))
    write_sketch(sampler.finalize(), args.output)
    return 0


def _cmd_sketch_setop(args) -> int:
    sketches = [read_sketch(path) for path in args.sketches]
    if args.op == "union":
        result = theta_union(sketches)
    elif args.op == "intersect":
        result = theta_intersect(sketches)
    else:
        if len(sketches) != 2:
            print("diff takes exactly two sketches", file=sys.stderr)
            return 2
        result = theta_a_not_b(sketches[0], sketches[1])
    write_sketch(result, args.output)
    return 0


def _cmd_sketch_estimate(args) -> int:
    sk = read_sketch(args.sketch)
    print(_fmt(estimate_subpopulation(sk, args.pred)))
    return 0


def _cmd_dist_alpha(args) -> int:
    dist = oracles.alpha_level_distribution(args.k, args.u)
    print("i,probability")
    for i, prob in enumerate(dist.probs):
        print(f"{i},{_fmt(prob)}")
    mean_s, var_s = oracles.alpha_sample_size_moments(args.k, args.u)
    n = args.k + args.u
    hip_mean, hip_var = oracles.hip_mean_var(args.k, n)
    print()
    print("metric,value")
    for name, value in [
        ("g0", oracles.g_moment_dp(0, args.k, args.u)),
        ("g1", oracles.g_moment_dp(1, args.k, args.u)),
        ("g2", oracles.g_moment_dp(2, args.k, args.u)),
        ("mean_sample_size", mean_s),
        ("var_sample_size", var_s),
        ("estimator_variance", oracles.alpha_estimator_variance(args.k, n)),
        ("hip_mean", hip_mean),
        ("hip_variance", hip_var),
    ]:
        print(f"{name},{_fmt(value)}")
    return 0


def _cmd_check_goodness(args) -> int:
    if args.tcf == "biased":
        tcf = goodness.biased_tcf
    else:
        tcf = goodness.tcf_for_kind(TcfKind(args.tcf), beta=args.beta, p=args.p)
    from .hashing import derive_trial_seed, hash_identifier

    print("instance,free_index,satisfied,fixed_threshold,violation_x,violation_theta,subcondition")
    failures = 0
    for instance in range(args.instances):
        inst_seed = derive_trial_seed(args.seed, instance)
        size = 4 + instance % 4  # fixed-hash count cycles over 4..7
        fixed = [
            hash_identifier(b"%d:%d" % (instance, j), inst_seed).value for j in range(size)
        ]
        if args.tcf == "biased" and size < args.k + 1:
            continue
        for free_index in range(size + 1):
            report = goodness.check_one_goodness(
                tcf, args.k, fixed, free_index, grid_points=args.grid
            )
            if report.satisfied:
                print(f"{instance},{free_index},1,{_fmt(report.fixed_threshold)},,,")
            else:
                failures += 1
                x, theta, sub = report.counterexample
                print(
                    f"{instance},{free_index},0,{_fmt(report.fixed_threshold)},"
                    f"{_fmt(x)},{_fmt(theta)},{sub}"
                )
    print(f"# failures={failures}", file=sys.stderr)
    return 0


def _add_experiment_common(parser, default_trials: int) -> None:
    parser.add_argument("--k", type=int, required=True)
    parser.add_argument("--seed", type=_parse_seed, required=True)
    parser.add_argument("--trials", type=int, default=default_trials)
    parser.add_argument("--beta", type=float, default=0.5)
    parser.add_argument("--p", type=float, default=0.5)


def _cmd_experiment_accuracy(args) -> int:
    cfgs = []
    for name in args.kinds.split(","):
        kind = TcfKind(name.strip())
        cfgs.append(
            SamplerConfig(
                kind=kind,
                k=args.k,
                seed=args.seed,
                beta=args.beta,
                p=args.p,
            )
        )
    sweep = [int(n) for n in args.n_sweep.split(",")]
    rows = experiments.run_accuracy_profile(cfgs, sweep, args.trials)
    print("n,kind,k,trials,rmse_over_truth")
    for row in rows:
        print(f"{row.n},{row.kind.value},{row.k},{row.trials},{_fmt(row.rmse_over_truth)}")
    return 0


def _cmd_experiment_comparative(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    if args.layout == "disjoint":
        spec = StreamSpec.disjoint(sizes)
    else:
        spec = StreamSpec.overlapping(sizes, int(round(args.overlap * min(sizes))))
    cfg = SamplerConfig(
        kind=TcfKind(args.tcf), k=args.k, seed=args.seed, beta=args.beta, p=args.p
    )
    result = experiments.run_comparative_variance(spec, cfg, Predicate.all(), args.trials)
    print("kind,k,m,layout,var_union,var_concat,ratio")
    print(
        f"{result.kind.value},{result.k},{result.m},{args.layout},"
        f"{_fmt(result.var_union)},{_fmt(result.var_concat)},{_fmt(result.ratio)}"
    )
    return 0


def _cmd_experiment_covariance(args) -> int:
    cfg = SamplerConfig(
        kind=TcfKind(args.tcf), k=args.k, seed=args.seed, beta=args.beta, p=args.p
    )
    result = experiments.run_per_item_covariance(
        cfg, args.n, args.l1, args.l2, args.trials, use_biased_tcf=args.biased
    )
    print("covariance,stderr,mean_v1,stderr_v1,mean_v2,stderr_v2")
    print(
        f"{_fmt(result.covariance)},{_fmt(result.stderr)},{_fmt(result.mean_v1)},"
        f"{_fmt(result.stderr_v1)},{_fmt(result.mean_v2)},{_fmt(result.stderr_v2)}"
    )
    return 0


def _cmd_experiment_scatter(args) -> int:
    rows = experiments.run_overlap_scatter(
        size_range=(args.min_size, args.max_size),
        k=args.k,
        trials_per_pair=args.trials,
        pairs=args.pairs,
        seed=args.seed,
    )
    print("size_a,size_b,sim,re_union,re_concat")
    for row in rows:
        print(
            f"{row.size_a},{row.size_b},{_fmt(row.similarity)},"
            f"{_fmt(row.re_union)},{_fmt(row.re_concat)}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="theta-sketch")
    top = parser.add_subparsers(dest="command", required=True)

    sketch = top.add_parser("sketch", help="build, combine, and query sketches")
    sketch_sub = sketch.add_subparsers(dest="subcommand", required=True)

    build = sketch_sub.add_parser("build", help="sketch a stream of identifiers")
    build.add_argument("--tcf", choices=_BASE_KIND_NAMES, required=True)
    build.add_argument("--k", type=int, required=True)
    build.add_argument("--beta", type=float, default=0.5)
    build.add_argument("--p", type=float, default=1.0)
    build.add_argument("--seed", type=_parse_seed, required=True)
    build.add_argument("--ids", action="store_true", help="retain identifiers")
    build.add_argument("-i", "--input", required=True)
    build.add_argument("-o", "--output", required=True)
    build.set_defaults(fn=_cmd_sketch_build)

    for op in ("union", "intersect", "diff"):
        sub = sketch_sub.add_parser(op, help=f"{op} of sketch files")
        sub.add_argument("sketches", nargs="+")
        sub.add_argument("-o", "--output", required=True)
        sub.set_defaults(fn=_cmd_sketch_setop, op=op)

    estimate = sketch_sub.add_parser("estimate", help="print a distinct-count estimate")
    estimate.add_argument("sketch")
    estimate.add_argument("--pred", type=_parse_predicate, default=Predicate.all())
    estimate.set_defaults(fn=_cmd_sketch_estimate)

    experiment = top.add_parser("experiment", help="Monte Carlo experiments (CSV to stdout)")
    exp_sub = experiment.add_subparsers(dest="subcommand", required=True)

    accuracy = exp_sub.add_parser("accuracy", help="relative error across stream sizes")
    accuracy.add_argument("--kinds", required=True, help="comma-separated sampler kinds")
    accuracy.add_argument("--n-sweep", required=True, help="comma-separated stream sizes")
    _add_experiment_common(accuracy, default_trials=1000)
    accuracy.set_defaults(fn=_cmd_experiment_accuracy)

    comparative = exp_sub.add_parser("comparative", help="union rule vs concatenated stream")
    comparative.add_argument("--tcf", choices=_BASE_KIND_NAMES, required=True)
    comparative.add_argument("--sizes", required=True, help="comma-separated stream sizes")
    comparative.add_argument("--layout", choices=("disjoint", "overlap"), default="disjoint")
    comparative.add_argument("--overlap", type=float, default=0.5)
    _add_experiment_common(comparative, default_trials=1000)
    comparative.set_defaults(fn=_cmd_experiment_comparative)

    covariance = exp_sub.add_parser("covariance", help="per-item estimate covariance")
    covariance.add_argument("--tcf", choices=_BASE_KIND_NAMES, required=True)
    covariance.add_argument("--n", type=int, required=True)
    covariance.add_argument("--l1", type=int, required=True)
    covariance.add_argument("--l2", type=int, required=True)
    covariance.add_argument("--biased", action="store_true")
    _add_experiment_common(covariance, default_trials=1000)
    covariance.set_defaults(fn=_cmd_experiment_covariance)

    scatter = exp_sub.add_parser("scatter", help="stream-pair relative error scatter")
    scatter.add_argument("--min-size", type=int, default=201)
    scatter.add_argument("--max-size", type=int, default=5429)
    scatter.add_argument("--pairs", type=int, default=20)
    _add_experiment_common(scatter, default_trials=1000)
    scatter.set_defaults(fn=_cmd_experiment_scatter)

    check = top.add_parser("check", help="threshold rule checkers")
    check_sub = check.add_subparsers(dest="subcommand", required=True)
    good = check_sub.add_parser("goodness", help="projection condition report")
    good.add_argument("--tcf", choices=_BASE_KIND_NAMES + ("biased",), required=True)
    good.add_argument("--k", type=int, required=True)
    good.add_argument("--seed", type=_parse_seed, required=True)
    good.add_argument("--grid", type=int, default=4096)
    good.add_argument("--instances", type=int, default=5)
    good.add_argument("--beta", type=float, default=0.5)
    good.add_argument("--p", type=float, default=0.5)
    good.set_defaults(fn=_cmd_check_goodness)

    dist = top.add_parser("dist", help="exact distributions")
    dist_sub = dist.add_subparsers(dest="subcommand", required=True)
    alpha = dist_sub.add_parser("alpha", help="level distribution and moments")
    alpha.add_argument("--k", type=int, required=True)
    alpha.add_argument("--u", type=int, required=True)
    alpha.set_defaults(fn=_cmd_dist_alpha)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ThetaSketchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
