"""Command-line front end.

Subcommands
-----------
``sbm-region``   fractions of the block-model probability cube where the
                 eigenvalue-ordering conditions hold, on a discretized grid.
``sbm-cluster``  Monte-Carlo clustering error of the spectral methods on
                 sampled block-model graphs.
``cluster``      cluster one signed graph, given as an edge list or as a
                 point cloud (nearest/farthest neighbor construction).
``bench``        timing of the smallest-eigenvector computation on
                 two-perfect-cluster graphs of growing size.

Every CSV starts with a ``#``-prefixed JSON line holding the full run
configuration; rerunning with the same configuration reproduces the numeric
columns byte for byte (wall-clock columns excepted).  Exit codes: 0 on
success, 1 on numerical failure, 2 on usage or I/O errors.
"""

import argparse
import json
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._util import as_seed_sequence
from .cluster import (METHODS, clustering_error, kfn_neg_graph, knn_pos_graph,
                      load_labels, load_points, spectral_cluster)
from .errors import ConvergenceError, EdgeListParseError, IndefiniteOperatorError
from .geomean import PencilOperator, matrix_smallest_k_eigenpairs, smallest_k_eigenpairs
from .graphs import ShiftConfig, SignedGraph, load_edge_list, shifted_pair, signed_laplacian
from .sbm import (CONDITIONINGS, TARGETS, SbmParams, region_fraction,
                  sample, two_cluster_benchmark_graph)

NUMERIC_FAILURES = (ConvergenceError, IndefiniteOperatorError, np.linalg.LinAlgError)


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path, config, header, rows):
    lines = ["# " + json.dumps(config, sort_keys=True)]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _config(args, exclude=("func",)):
    return {k: v for k, v in vars(args).items() if k not in exclude}


def _shift(args):
    return ShiftConfig(args.shift_eps1, args.shift_eps2)


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0, help="base random seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for sweep cells (default 1)")
    parser.add_argument("--out", type=str, default=None,
                        help="output CSV path (default: stdout)")
    parser.add_argument("--tol", type=float, default=1e-8,
                        help="eigensolver tolerance")
    parser.add_argument("--shift-eps1", type=float, default=1e-6,
                        help="diagonal shift on the normalized positive Laplacian")
    parser.add_argument("--shift-eps2", type=float, default=1e-6,
                        help="diagonal shift on the normalized signless negative Laplacian")
    parser.add_argument("--kmeans-restarts", type=int, default=10)


def _sbm_params(args):
    return SbmParams(k=args.k, cluster_size=args.cluster_size,
                     p_in_plus=args.p_in_plus, p_out_plus=args.p_out_plus,
                     p_in_minus=args.p_in_minus, p_out_minus=args.p_out_minus)


def cmd_sbm_region(args):
    if args.conditioning is None:
        args.conditioning = list(CONDITIONINGS)
    if args.target is None:
        args.target = list(TARGETS)
    rows = []
    for k in args.k:
        for conditioning in args.conditioning:
            for target in args.target:
                try:
                    res = region_fraction(k, args.steps, conditioning, target)
                    rows.append((k, args.steps, conditioning, target,
                                 res.fraction, res.denominator))
                except ValueError as exc:
                    if "empty" not in str(exc):
                        raise
                    rows.append((k, args.steps, conditioning, target, "NA", 0))
    _write_csv(args.out, _config(args),
               ("k", "steps", "conditioning", "target", "fraction",
                "denominator_count"), rows)
    return 0


def _run_one_cluster_cell(params, method, run_seed, args, truth):
    graph_seed, cluster_seed = as_seed_sequence(run_seed).spawn(2)
    g = sample(params, graph_seed)
    start = time.perf_counter()
    res = spectral_cluster(g, params.k, method=method, shift=_shift(args),
                           seed=cluster_seed, restarts=args.kmeans_restarts,
                           tol=args.tol)
    seconds = time.perf_counter() - start
    return clustering_error(res.labels, truth), seconds


def cmd_sbm_cluster(args):
    params = _sbm_params(args)
    truth = np.repeat(np.arange(params.k), params.cluster_size)
    run_seeds = as_seed_sequence(args.seed).spawn(args.runs)
    cells = [(m, r) for m in args.methods for r in range(args.runs)]

    def work(cell):
        method, r = cell
        try:
            err, seconds = _run_one_cluster_cell(params, method, run_seeds[r],
                                                 args, truth)
            return (method, r, err, seconds, "ok")
        except NUMERIC_FAILURES as exc:
            return (method, r, "NA", "NA", f"failed: {type(exc).__name__}")

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(work, cells))
    else:
        results = [work(c) for c in cells]

    rows = []
    for method in args.methods:
        errors = []
        for m, r, err, seconds, status in results:
            if m != method:
                continue
            rows.append((method, r, args.seed, err, seconds, status))
            if status == "ok":
                errors.append(err)
        median = statistics.median(errors) if errors else "NA"
        rows.append((method, "median", args.seed, median, "", ""))
    _write_csv(args.out, _config(args),
               ("method", "run", "seed", "error", "seconds", "status"), rows)
    return 0


def cmd_cluster(args):
    if (args.edges is None) == (args.points is None):
        raise UsageError("give exactly one of --edges or --points")
    if args.edges is not None:
        g = load_edge_list(args.edges)
    else:
        pts = load_points(args.points)
        g = SignedGraph(w_plus=knn_pos_graph(pts, args.k_plus),
                        w_minus=kfn_neg_graph(pts, args.k_minus))
    res = spectral_cluster(g, args.k, method=args.method, shift=_shift(args),
                           seed=args.seed, restarts=args.kmeans_restarts,
                           tol=args.tol)
    sizes = res.labels.sizes()
    payload = {
        "method": args.method,
        "k": args.k,
        "labels": res.labels.labels.tolist(),
        "cluster_sizes": sizes.tolist(),
        "empty_clusters": list(res.labels.empty_clusters),
    }
    rows = [("cluster_size", c, int(s)) for c, s in enumerate(sizes)]
    if args.truth is not None:
        truth = load_labels(args.truth)
        err = clustering_error(res.labels, truth)
        payload["error"] = err
        rows.append(("majority_vote_error", "", err))
    if args.labels_out is None:
        sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        with open(args.labels_out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")
    _write_csv(args.out, _config(args), ("metric", "cluster", "value"), rows)
    return 0


def _time_smallest_eigenvector(g, method, args):
    shift = _shift(args)
    start = time.perf_counter()
    if method == "GM":
        a, b = shifted_pair(g, shift)
        pencil = PencilOperator(a, b)
        pair = smallest_k_eigenpairs(pencil, 1, tol=args.tol)[0]
    else:
        m = signed_laplacian(g, method)
        pair = matrix_smallest_k_eigenpairs(m, 1, definite=method != "BN",
                                            tol=args.tol)[0]
    return time.perf_counter() - start, pair.iterations


def cmd_bench(args):
    if sorted(args.n) != list(args.n):
        raise UsageError("--n values must be ascending")
    rows = []
    for n in args.n:
        g, _ = two_cluster_benchmark_graph(n, args.avg_degree, seed=args.seed)
        for method in args.methods:
            try:
                samples = [_time_smallest_eigenvector(g, method, args)
                           for _ in range(args.repetitions)]
                med = statistics.median(s for s, _ in samples)
                rows.append((n, method, med, samples[0][1]))
            except MemoryError:
                rows.append((n, method, "NA", "NA"))
    _write_csv(args.out, _config(args),
               ("n", "method", "median_seconds", "iterations"), rows)
    return 0


class UsageError(Exception):
    pass


def _methods_list(text):
    methods = tuple(m.strip().upper() for m in text.split(","))
    for m in methods:
        if m not in METHODS:
            raise argparse.ArgumentTypeError(f"unknown method {m!r}")
    return methods


def _positive_int(minimum):
    def parse(text):
        value = int(text)
        if value < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}")
        return value

    return parse


def build_parser():
    parser = argparse.ArgumentParser(
        prog="siglap",
        description="Spectral clustering of signed graphs with the geometric "
                    "mean of Laplacians.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sbm-region",
                       help="condition-region fractions on a probability grid")
    p.add_argument("--k", type=int, action="append", required=True,
                   help="cluster count; repeat for several")
    p.add_argument("--steps", type=_positive_int(2), default=100,
                   help="grid points per parameter axis (cell centers)")
    p.add_argument("--conditioning", action="append", choices=CONDITIONINGS,
                   help="conditioning event; repeat for several (default: all four)")
    p.add_argument("--target", action="append", choices=TARGETS,
                   help="target event; repeat for several (default: both)")
    _add_common(p)
    p.set_defaults(func=cmd_sbm_region)

    p = sub.add_parser("sbm-cluster",
                       help="median clustering error on sampled block models")
    p.add_argument("--k", type=_positive_int(2), required=True)
    p.add_argument("--cluster-size", type=_positive_int(1), required=True)
    p.add_argument("--p-in-plus", type=float, required=True)
    p.add_argument("--p-out-plus", type=float, required=True)
    p.add_argument("--p-in-minus", type=float, required=True)
    p.add_argument("--p-out-minus", type=float, required=True)
    p.add_argument("--methods", type=_methods_list, default=METHODS,
                   help="comma-separated subset of SN,BN,AM,GM")
    p.add_argument("--runs", type=_positive_int(1), default=50)
    _add_common(p)
    p.set_defaults(func=cmd_sbm_cluster)

    p = sub.add_parser("cluster", help="cluster one signed graph")
    p.add_argument("--edges", type=str, default=None,
                   help="edge list: 'i j w' per line, sign routes the edge")
    p.add_argument("--points", type=str, default=None,
                   help="numeric point matrix; neighbor graphs are built from it")
    p.add_argument("--k-plus", type=_positive_int(1), default=10,
                   help="nearest neighbors for the positive graph (points input)")
    p.add_argument("--k-minus", type=_positive_int(1), default=10,
                   help="farthest neighbors for the negative graph (points input)")
    p.add_argument("--method", type=str, default="GM",
                   choices=METHODS)
    p.add_argument("--k", type=_positive_int(2), required=True,
                   help="number of clusters")
    p.add_argument("--truth", type=str, default=None,
                   help="ground-truth labels file, one integer per row")
    p.add_argument("--labels-out", type=str, default=None,
                   help="write the labels JSON here instead of stdout")
    _add_common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser(
        "bench",
        help="time the smallest-eigenvector computation on two-perfect-cluster "
             "graphs (edge probabilities chosen for a target average degree "
             "rather than a fixed edge percentage, which would be infeasible "
             "at large n)",
    )
    p.add_argument("--n", type=_positive_int(2), action="append", required=True,
                   help="graph size; repeat for several, ascending")
    p.add_argument("--avg-degree", type=float, default=50.0)
    p.add_argument("--methods", type=_methods_list, default=("SN", "GM"))
    p.add_argument("--repetitions", type=_positive_int(1), default=10)
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, EdgeListParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NUMERIC_FAILURES as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
