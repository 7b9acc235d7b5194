"""run.py implements the run command, which runs one experiment file and writes its trace and summary."""

import json
import logging
import os
import time

from mollify import auc
from mollify.commands import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_RUNTIME_ERROR, BaseCommand
from mollify.config import build_experiment, load_config
from mollify.core import validate_schedules
from mollify.optimizer import run
from mollify.utils import IterationError, MollifyError

logger = logging.getLogger(__name__)


def write_summary(path, summary):
    """write_summary writes the run summary as indented JSON."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")


def summarize(experiment, trace, wall_time):
    """Summarize collects the summary fields of a finished run."""
    config = experiment.config
    verdict = validate_schedules(
        config.iota,
        config.kappa,
        experiment.objective.profile,
        experiment.mode,
        c_beta=config.c_beta,
        c_gamma=config.c_gamma,
        smoother=config.kind,
    )
    summary = {
        "objective": experiment.objective.name,
        "smoother": config.kind.value,
        "master_seed": config.master_seed,
        "n_iterations": config.n_iterations,
        "final_theta": [float(x) for x in trace.final_theta],
        "running_min_grad_norm": trace.running_min_grad_norm,
        "mode": experiment.mode.value,
        "verdict": verdict.to_dict(),
        "wall_time_s": wall_time,
    }
    if experiment.dataset is not None:
        summary["final_risk"] = auc.empirical_auc_risk(auc.stereographic_inverse(trace.final_theta), experiment.dataset)
    return summary


class Command(BaseCommand):
    """Run one experiment from a config file."""

    help = "Run the smoothed gradient recursion described by a config file and write its trace and summary."

    def add_arguments(self, parser):
        """Add the config path and the flags overriding its values."""
        parser.add_argument("config", help="experiment YAML file")
        parser.add_argument("--seed", type=int, help="override run.master_seed")
        parser.add_argument("--iterations", type=int, help="override run.n_iterations")
        parser.add_argument("--threads", type=int, help="override run.threads (0 = every CPU)")
        parser.add_argument("--output", help="override output.path")

    def handle(self, **options):
        """Load the config, run it and write <output>.csv and <output>.json."""
        try:
            config = load_config(options["config"]).override(
                master_seed=options.get("seed"),
                n_iterations=options.get("iterations"),
                threads=options.get("threads"),
                path=options.get("output"),
            )
            experiment = build_experiment(config)
        except MollifyError as e:
            return self.fail(e, EXIT_CONFIG_ERROR)

        started = time.perf_counter()
        try:
            trace = run(experiment.objective, experiment.theta0, experiment.run_config)
        except IterationError as e:
            return self.fail(e, EXIT_RUNTIME_ERROR)
        except MollifyError as e:
            return self.fail(f"runtime error: {e}", EXIT_RUNTIME_ERROR)
        wall_time = time.perf_counter() - started

        directory = os.path.dirname(config.path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        trace.write_csv(f"{config.path}.csv")
        summary = summarize(experiment, trace, wall_time)
        write_summary(f"{config.path}.json", summary)
        logger.info("wrote %s.csv and %s.json", config.path, config.path)

        self.write(f"final theta: {summary['final_theta']}")
        self.write(f"running min grad norm: {summary['running_min_grad_norm']:.6g}")
        if "final_risk" in summary:
            self.write(f"final risk: {summary['final_risk']:.6g}")
        self.write(f"verdict: {summary['verdict']['level']}")
        return EXIT_OK
