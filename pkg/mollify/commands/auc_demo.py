"""auc_demo.py implements the auc-demo command, which fits a linear AUC scorer over several seeds."""

import json
import logging
import os

from mollify import auc
from mollify.commands import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_RUNTIME_ERROR, BaseCommand
from mollify.commands.oracle_check import float_list
from mollify.core import Schedule, SmootherKind
from mollify.optimizer import RunConfig, run
from mollify.utils import MollifyError, substream

logger = logging.getLogger(__name__)


def int_list(text):
    """int_list parses a comma separated list of integers."""
    return [int(x) for x in float_list(text)]


class Command(BaseCommand):
    """Fit a linear AUC scorer on synthetic two-blob data."""

    help = "Minimise the mini-batch AUC risk on synthetic two-blob data and report train/test risk per seed."

    def add_arguments(self, parser):
        """Add the data, schedule and sampling options."""
        parser.add_argument("--p", type=int, default=5, help="feature dimension")
        parser.add_argument("--n-data", type=int, default=200)
        parser.add_argument("--data-seed", type=int, default=0)
        parser.add_argument("--n-batch", type=int, default=32)
        parser.add_argument("--iterations", type=int, default=2000)
        parser.add_argument("--samples", type=int, default=1024)
        parser.add_argument("--ess-fraction", type=float, default=0.5)
        parser.add_argument("--test-fraction", type=float, default=0.1, help="0 evaluates on the training data")
        parser.add_argument("--c-beta", type=float, default=0.2)
        parser.add_argument("--iota", type=float, default=0.5)
        parser.add_argument("--c-gamma", type=float, default=0.2)
        parser.add_argument("--kappa", type=float, default=0.2)
        parser.add_argument("--seeds", type=int_list, default=list(range(10)))
        parser.add_argument("--output", help="directory for per-seed traces and summary.json")

    def handle(self, **options):
        """Run one optimisation per seed on the same data split."""
        try:
            data = auc.synthetic_blobs(options["p"], options["n_data"], substream(options["data_seed"], 0, "noise"))
            if options["test_fraction"] > 0:
                split_rng = substream(options["data_seed"], 0, "mc")
                train, test = auc.train_test_split(data, options["test_fraction"], split_rng)
            else:
                train, test = data, data
            objective = auc.auc_objective(train, options["n_batch"])
            base = dict(
                beta=Schedule(options["c_beta"], options["iota"]),
                gamma=Schedule(options["c_gamma"], options["kappa"]),
                smoother=SmootherKind.EXP,
                n_iterations=options["iterations"],
                n_samples=options["samples"],
                target_ess=options["ess_fraction"] * options["samples"],
            )
            configs = {seed: RunConfig(master_seed=seed, **base) for seed in options["seeds"]}
        except MollifyError as e:
            return self.fail(e, EXIT_CONFIG_ERROR)

        output = options.get("output")
        if output:
            os.makedirs(output, exist_ok=True)
        logger.info("train %d rows, test %d rows, p=%d", train.n_data, test.n_data, train.p)

        results = {}
        self.write("seed  train_risk  test_risk  best_train_risk")
        for seed, config in configs.items():
            try:
                trace = run(objective, [0.0] * objective.dim, config)
            except MollifyError as e:
                return self.fail(e, EXIT_RUNTIME_ERROR)
            v = auc.stereographic_inverse(trace.final_theta)
            along = auc.risk_along_trace(trace, train)
            results[seed] = {
                "final_theta": [float(x) for x in trace.final_theta],
                "train_risk": auc.empirical_auc_risk(v, train),
                "test_risk": auc.empirical_auc_risk(v, test),
                "best_train_risk": float(along.min()),
            }
            row = results[seed]
            self.write(f"{seed:>4}  {row['train_risk']:10.4f}  {row['test_risk']:9.4f}  {row['best_train_risk']:15.4f}")
            if output:
                trace.write_csv(os.path.join(output, f"auc_seed{seed}.csv"))

        if output:
            with open(os.path.join(output, "summary.json"), "w", encoding="utf-8") as handle:
                json.dump({str(seed): row for seed, row in results.items()}, handle, indent=2, sort_keys=True)
                handle.write("\n")
        return EXIT_OK
