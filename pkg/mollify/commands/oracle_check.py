"""oracle_check.py implements the oracle-check command, which compares Monte-Carlo gradients with quadrature."""

import argparse
import logging

import numpy as np

from mollify.commands import EXIT_CONFIG_ERROR, EXIT_FAILED, EXIT_OK, EXIT_RUNTIME_ERROR, BaseCommand
from mollify.core import SmootherKind
from mollify.objectives import get_objective, objective_names
from mollify.oracle import QuadratureSpec, closed_form_grad, oracle_grad
from mollify.smoothers import estimate_gradient
from mollify.utils import MollifyError, OracleDimensionError, substream

logger = logging.getLogger(__name__)

# deviations below this are treated as exact when the estimator reports zero spread
ZERO_SPREAD_TOL = 1e-10

CLOSED_FORM_LABELS = {"step": "normal-CDF", "quadratic": "Gaussian"}


def float_list(text):
    """float_list parses a comma separated list of floats."""
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from e


def grid_spec(text):
    """grid_spec parses lo:hi:count."""
    parts = text.split(":")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError) as e:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:count, got {text!r}") from e
    if len(parts) != 3 or count < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:count with lo <= hi and count >= 1, got {text!r}")
    return lo, hi, count


def grid_points(grid, dim):
    """grid_points returns the tensor grid of lo:hi:count on every axis as rows."""
    lo, hi, count = grid
    axis = np.linspace(lo, hi, count)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def deviation(estimate, std_error, reference):
    """Deviation is the largest coordinate gap between estimate and reference in standard errors."""
    gap = np.abs(np.asarray(estimate) - np.asarray(reference))
    se = np.asarray(std_error)
    units = np.where(se > 0, gap / np.where(se > 0, se, 1.0), np.where(gap <= ZERO_SPREAD_TOL, 0.0, np.inf))
    return float(np.max(units))


class Command(BaseCommand):
    """Compare Monte-Carlo gradients against the quadrature oracle."""

    help = "Compare Monte-Carlo smoothed gradients against quadrature references on a grid of points."

    def add_arguments(self, parser):
        """Add the objective, grid and sampling options."""
        parser.add_argument("--objective", default="quadratic", help=f"one of {objective_names()}")
        parser.add_argument("--dim", type=int)
        parser.add_argument("--gammas", type=float_list, default=[1.0, 0.1])
        parser.add_argument("--grid", type=grid_spec, default=(-1.0, 1.0, 5), help="lo:hi:count on every axis")
        parser.add_argument("--smoother", choices=["both"] + [k.value for k in SmootherKind], default="both")
        parser.add_argument("--samples", type=int, default=20000)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--max-se", type=float, default=3.0)

    def handle(self, **options):
        """Run every comparison and report the largest deviation."""
        try:
            obj = get_objective(options.get("objective", "quadratic"), options.get("dim"))
        except MollifyError as e:
            return self.fail(e, EXIT_CONFIG_ERROR)
        try:
            spec = QuadratureSpec.default_for(obj.dim)
        except OracleDimensionError as e:
            return self.fail(f"oracle unsupported: {e}", EXIT_RUNTIME_ERROR)

        smoother = options.get("smoother", "both")
        kinds = list(SmootherKind) if smoother == "both" else [SmootherKind.parse(smoother)]
        gammas = options.get("gammas", [1.0, 0.1])
        points = grid_points(options.get("grid", (-1.0, 1.0, 5)), obj.dim)
        seed = options.get("seed", 0)
        n_samples = options.get("samples", 20000)
        max_se = options.get("max_se", 3.0)

        u = obj.sample_noise(substream(seed, 0, "noise"))
        field = obj.field(u)
        worst = 0.0
        index = 0
        try:
            for kind in kinds:
                for gamma in gammas:
                    worst_here, closed_gap = 0.0, None
                    for theta in points:
                        index += 1
                        rng = substream(seed, index, "mc")
                        estimate = estimate_gradient(kind, obj, theta, gamma, u, n_samples, rng)
                        reference = oracle_grad(kind, field, theta, gamma, spec)
                        worst_here = max(worst_here, deviation(estimate.gradient, estimate.std_error, reference))
                        exact = closed_form_grad(obj.name, kind, theta, gamma)
                        if exact is not None:
                            gap = float(np.max(np.abs(exact - reference)))
                            closed_gap = gap if closed_gap is None else max(closed_gap, gap)
                    self.write(f"{kind.value} gamma={gamma:g}: max deviation {worst_here:.3f} SE, {len(points)} points")
                    if closed_gap is not None:
                        label = CLOSED_FORM_LABELS.get(obj.name, "closed-form")
                        self.write(f"  {label} reference: max |oracle - exact| = {closed_gap:.3g}")
                    worst = max(worst, worst_here)
        except OracleDimensionError as e:
            return self.fail(f"oracle unsupported: {e}", EXIT_RUNTIME_ERROR)
        except MollifyError as e:
            return self.fail(e, EXIT_RUNTIME_ERROR)

        logger.info("%s: %d comparisons, N=%d, seed=%d", obj.name, index, n_samples, seed)
        self.write(f"max deviation {worst:.3f} SE (limit {max_se:g})")
        return EXIT_OK if worst <= max_se else EXIT_FAILED
