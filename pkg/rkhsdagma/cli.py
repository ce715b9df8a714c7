"""
Command-line entry point: rkhsdagma {simulate, discover, evaluate, pairs, toyplot, campaign}.

Exit codes: 0 success (and DAG for discover), 1 usage or configuration error, 2 data error,
3 optimization failure, 4 non-DAG result.
"""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .acyclicity import DirectedGraph
from .campaign import Campaign
from .config import load_config, deep_merge
from .errors import (RkhsDagmaError, ConfigError, DataError, ShapeError, NonFiniteError,
                     OptimizationError)
from .io import (read_data_csv, read_edge_list, write_data_csv, write_edge_list, write_json, write_matrix_csv,
                 to_json_str, RunManifest, FLOAT_FORMAT)
from .job import Job
from .metrics import shd, load_pairs_corpus, evaluate_pairs
from .optimizer import DagmaConfig, rkhs_dagma
from .representer import ModelParams, eval_nodes_at
from .sem_sim import MECHANISMS, SemSpec, simulate_sem

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_OPTIMIZATION = 3
EXIT_NOT_DAG = 4


class UsageError(RkhsDagmaError):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "{}: error: {}\n".format(self.prog, message))


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="YAML configuration file.")
    common.add_argument("--out", type=Path, default=Path("."), help="Output directory.")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None,
                        help="Worker threads (0 = all cores). Defaults to $RKHS_DAGMA_THREADS.")
    common.add_argument("--no-user-config", action="store_true",
                        help="Ignore ~/.rkhsdagma_user_config.yaml.")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true")
    verbosity.add_argument("--debug", action="store_true")
    return common


def _dagma_parser():
    dagma = argparse.ArgumentParser(add_help=False)
    group = dagma.add_argument_group("RKHS-DAGMA settings")
    group.add_argument("--T", type=int, dest="T")
    group.add_argument("--mu0", type=float)
    group.add_argument("--decay", type=float)
    group.add_argument("--tau", type=float)
    group.add_argument("--lambda", type=float, dest="lambda_")
    group.add_argument("--s", type=float, nargs="+")
    group.add_argument("--omega", type=float)
    group.add_argument("--gamma", type=float)
    group.add_argument("--lr", type=float)
    group.add_argument("--max-iter", type=int)
    group.add_argument("--final-round-iters", type=int)
    group.add_argument("--standardize", action="store_true", help="Center and scale every column first.")
    return dagma


def build_parser():
    common, dagma = _common_parser(), _dagma_parser()
    parser = ArgumentParser(prog="rkhsdagma", description="Nonparametric DAG discovery with RKHS-DAGMA.")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    commands = parser.add_subparsers(dest="command", parser_class=ArgumentParser)
    commands.required = True

    simulate = commands.add_parser("simulate", parents=[common], help="Simulate data from a random SEM.")
    simulate.add_argument("--d", type=int)
    simulate.add_argument("--m", type=float)
    simulate.add_argument("--mechanism", choices=MECHANISMS)
    simulate.add_argument("--n", type=int)
    simulate.add_argument("--lengthscale", type=float)
    simulate.set_defaults(func=cmd_simulate)

    discover = commands.add_parser("discover", parents=[common, dagma], help="Learn a DAG from a data CSV.")
    discover.add_argument("data", type=Path)
    discover.set_defaults(func=cmd_discover)

    evaluate = commands.add_parser("evaluate", parents=[common], help="SHD between two edge-list CSVs.")
    evaluate.add_argument("graph", type=Path)
    evaluate.add_argument("truth", type=Path)
    evaluate.add_argument("--d", type=int, help="Number of nodes (default: largest index in either file).")
    evaluate.set_defaults(func=cmd_evaluate)

    pairs = commands.add_parser("pairs", parents=[common, dagma], help="Cause-effect pairs benchmark.")
    pairs.add_argument("corpus", type=Path)
    pairs.add_argument("--max-samples", type=int)
    pairs.add_argument("--n-grids", type=int)
    pairs.set_defaults(func=cmd_pairs)

    toyplot = commands.add_parser("toyplot", parents=[common], help="Fitted function on a grid, as CSV.")
    toyplot.add_argument("data", type=Path)
    toyplot.add_argument("model", type=Path, help="model.npz written by 'discover'.")
    toyplot.add_argument("--node", type=int, default=2, help="1-based index of the effect variable.")
    toyplot.add_argument("--points", type=int, default=200)
    toyplot.set_defaults(func=cmd_toyplot)

    campaign = commands.add_parser("campaign", parents=[common], help="Run the grid of config['analysis'].")
    campaign.add_argument("--name", default="campaign")
    campaign.add_argument("--slurm", action="store_true", help="Submit one SLURM job per replicate.")
    campaign.add_argument("--test", action="store_true", help="Print the sbatch commands instead.")
    campaign.add_argument("--rerun", action="store_true", help="Rerun completed jobs.")
    campaign.set_defaults(func=cmd_campaign)

    run_job = commands.add_parser("run-job", parents=[common], help=argparse.SUPPRESS)
    run_job.add_argument("spec", type=Path)
    run_job.set_defaults(func=cmd_run_job)
    return parser


def _setup_logging(args):
    level = logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)


def _dagma_overrides(args):
    dagma, adam, kernel = {}, {}, {}
    for name, key in [("T", "T"), ("mu0", "mu0"), ("decay", "decay"), ("tau", "tau"), ("lambda_", "lambda"),
                      ("omega", "omega"), ("final_round_iters", "final_round_iters")]:
        if getattr(args, name, None) is not None:
            dagma[key] = getattr(args, name)
    if getattr(args, "s", None) is not None:
        dagma["s"] = args.s[0] if len(args.s) == 1 else args.s
    if getattr(args, "standardize", False):
        dagma["standardize"] = True
    if getattr(args, "lr", None) is not None:
        adam["lr"] = args.lr
    if getattr(args, "max_iter", None) is not None:
        adam["max_iter"] = args.max_iter
    if adam:
        dagma["adam"] = adam
    if getattr(args, "gamma", None) is not None:
        kernel["gamma"] = args.gamma
    return {key: val for key, val in [("dagma", dagma), ("kernel", kernel)] if val}


def resolve_config(args, overrides=None):
    config = load_config(args.config, use_user_config=not args.no_user_config)
    if overrides:
        config = deep_merge(config, overrides)
    return config


def cmd_simulate(args):
    overrides = {key: getattr(args, key) for key in ["d", "m", "mechanism", "n", "lengthscale", "seed"]
                 if getattr(args, key) is not None}
    config = resolve_config(args, {"simulation": overrides})
    spec = SemSpec(**config["simulation"])
    manifest = RunManifest("simulate", config, seed=spec.seed)

    data = simulate_sem(spec)
    manifest.add_output("data", write_data_csv(args.out / "data.csv", data.X))
    manifest.add_output("truth", write_edge_list(args.out / "truth_dag.csv", data.dag))
    manifest.save(args.out / "manifest.json")
    return EXIT_OK


def cmd_discover(args):
    config = resolve_config(args, _dagma_overrides(args))
    cfg = DagmaConfig.from_config(config)
    X = read_data_csv(args.data)
    if X.shape[1] < 2:
        raise UsageError("discover needs at least 2 columns. {} has {}.".format(args.data, X.shape[1]))
    if X.shape[0] < 2:
        raise UsageError("discover needs at least 2 rows. {} has {}.".format(args.data, X.shape[0]))

    manifest = RunManifest("discover", config, seed=args.seed)
    manifest.add_input("data", args.data)
    try:
        result = rkhs_dagma(X, cfg, args.threads)
    except OptimizationError as e:
        trace = [report.to_json() for report in (e.trace or [])]
        manifest.add_output("trace", write_json(args.out / "trace.json", {"status": "failed", "error": str(e),
                                                                          "rounds": trace}))
        manifest.save(args.out / "manifest.json")
        raise

    manifest.add_output("W_raw", write_matrix_csv(args.out / "W_raw.csv", result.W_raw))
    manifest.add_output("W_hat", write_matrix_csv(args.out / "W_hat.csv", result.W_hat))
    manifest.add_output("graph", write_edge_list(args.out / "graph.csv", result.graph))
    manifest.add_output("trace", write_json(args.out / "trace.json", dict(status="done", **result.to_json())))
    model_path = args.out / "model.npz"
    result.theta.save(model_path, result.X, result.kernel, mean=result.mean, scale=result.scale)
    manifest.add_output("model", model_path)
    manifest.save(args.out / "manifest.json")

    if not result.is_dag_flag:
        logger.warning("The estimated graph is not a DAG.")
        return EXIT_NOT_DAG
    return EXIT_OK


def cmd_evaluate(args):
    edges = {"graph": read_edge_list(args.graph), "truth": read_edge_list(args.truth)}
    d = args.d
    if d is None:
        d = max([max(edge) + 1 for edge_list in edges.values() for edge in edge_list], default=0)
    graph, truth = (DirectedGraph.from_edges(edges[key], d) for key in ("graph", "truth"))
    print(to_json_str(shd(graph, truth).to_json()))
    return EXIT_OK


def cmd_pairs(args):
    config = resolve_config(args, _dagma_overrides(args))
    cfg = DagmaConfig.from_config(config)
    max_samples = args.max_samples or config["pairs"]["max_samples"]
    n_grids = args.n_grids or config["pairs"]["n_grids"]

    manifest = RunManifest("pairs", config, seed=args.seed)
    manifest.add_input("corpus", args.corpus)
    pairs, skipped = load_pairs_corpus(args.corpus)
    report = evaluate_pairs(pairs, cfg, max_samples, n_grids, args.threads)
    report["skipped"] = [{"pair": name, "reason": reason} for name, reason in skipped]

    manifest.add_output("report", write_json(args.out / "pairs.json", report))
    manifest.save(args.out / "manifest.json")
    print(to_json_str({key: val for key, val in report.items() if key != "decisions"}))
    return EXIT_OK


def cmd_toyplot(args):
    data = read_data_csv(args.data)
    theta, X_model, kernel, extras = ModelParams.load(args.model)
    d = X_model.shape[1]
    if data.shape[1] != 2 or d != 2:
        raise ShapeError("toyplot needs 2-column data and a 2-variable model. Received {} and {} columns."
                         .format(data.shape[1], d))
    if not 1 <= args.node <= d:
        raise UsageError("--node must lie in [1, {}]. Received: {}".format(d, args.node))
    if args.points < 2:
        raise UsageError("--points must be at least 2. Received: {}".format(args.points))

    node, other = args.node - 1, 2 - args.node
    mean = extras.get("mean", np.zeros(d))
    scale = extras.get("scale", np.ones(d))
    grid = np.linspace(data[:, other].min(), data[:, other].max(), args.points)
    X_new = np.zeros((args.points, d))
    X_new[:, other] = (grid - mean[other]) / scale[other]
    fitted = eval_nodes_at(theta[node], X_model, X_new, kernel, node)

    table = pd.DataFrame({"x": grid, "fitted": fitted * scale[node] + mean[node], "fitted_standardized": fitted})
    path = args.out / "toyplot.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    manifest = RunManifest("toyplot", {"node": args.node, "points": args.points}, seed=args.seed)
    manifest.add_input("data", args.data)
    manifest.add_input("model", args.model)
    manifest.add_output("toyplot", path)
    manifest.save(args.out / "manifest.json")
    return EXIT_OK


def cmd_campaign(args):
    config = load_config(args.config, use_user_config=not args.no_user_config)
    campaign = Campaign(config=config, name=args.name, path=args.out, resume=not args.rerun,
                        verbose=args.verbose, use_user_config=False)
    logger.info("%s", campaign)
    campaign.run(local=not args.slurm, test=args.test, threads=args.threads)
    campaign.save()
    if not args.slurm:
        table, medians = campaign.summary()
        table.to_csv(args.out / "{}_summary.csv".format(args.name), index=False, lineterminator="\n")
        print(medians.to_string(index=False))
    return EXIT_OK


def cmd_run_job(args):
    result = Job.from_spec(args.spec).run(args.threads)
    return EXIT_OK if result["status"] == "done" else EXIT_OPTIMIZATION


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except (DataError, ShapeError, PermissionError) as e:
        logger.error("%s", e)
        return EXIT_DATA
    except (OptimizationError, NonFiniteError) as e:
        logger.error("%s", e)
        return EXIT_OPTIMIZATION


if __name__ == "__main__":
    sys.exit(main())
