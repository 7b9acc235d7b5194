"""optimizer.py runs the inhomogeneous smoothed gradient-descent recursion and records its trace.

theta_{n+1} = theta_n - beta_n grad L_{gamma_n}(theta_n, U_{n+1}), with one fresh noise draw per
iteration. Noise and Monte-Carlo draws come from disjoint substreams keyed by the iteration index.
"""

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from mollify.constants import DEFAULT_N_SAMPLES, DEFAULT_RECORD_EVERY, FLOAT_FORMAT, TRACE_HEADER
from mollify.core import Schedule, SmootherKind, as_point
from mollify.smoothers import ess as effective_sample_size
from mollify.smoothers import estimate_gradient, log_mean_exp, self_normalized_weights
from mollify.utils import DomainError, IterationError, MollifyError, substream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    """RunConfig holds everything that determines a run besides the objective and theta_0."""

    beta: Schedule
    gamma: Schedule
    smoother: SmootherKind = SmootherKind.EXP
    n_iterations: int = 1000
    n_samples: int = DEFAULT_N_SAMPLES
    target_ess: Optional[float] = None
    master_seed: int = 0
    record_every: int = DEFAULT_RECORD_EVERY
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "smoother", SmootherKind.parse(self.smoother))
        if self.n_iterations < 1:
            raise DomainError(f"n_iterations must be >= 1, got {self.n_iterations}")
        if self.n_samples < 2:
            raise DomainError(f"n_samples must be >= 2, got {self.n_samples}")
        if self.record_every < 1:
            raise DomainError(f"record_every must be >= 1, got {self.record_every}")
        if self.target_ess is not None and not 1 < self.target_ess < self.n_samples:
            raise DomainError(f"target_ess must lie in (1, {self.n_samples}), got {self.target_ess}")
        if self.threads < 1:
            raise DomainError(f"threads must be >= 1 once resolved, got {self.threads}")

    def records(self, n):
        """Records says whether iteration n is written to the trace."""
        return n == 1 or n == self.n_iterations or n % self.record_every == 0


@dataclass
class TraceRecord:
    """TraceRecord is one row of a RunTrace, taken at the iterate the gradient was evaluated at."""

    n: int
    theta: np.ndarray
    beta_n: float
    gamma_n: float
    grad_norm_estimate: float
    value_estimate: float
    ess: float
    rescale_lambda: float


@dataclass
class RunTrace:
    """RunTrace holds the recorded iterations and the final iterate of a run."""

    records: List[TraceRecord] = field(default_factory=list)
    final_theta: Optional[np.ndarray] = None

    @property
    def running_min_grad_norm(self):
        """running_min_grad_norm is the smallest recorded gradient-norm estimate."""
        if not self.records:
            return math.inf
        return min(r.grad_norm_estimate for r in self.records)

    def thetas(self):
        """Thetas stacks the recorded iterates into an array."""
        return np.array([r.theta for r in self.records])

    def as_rows(self):
        """as_rows flattens every record into (n, beta, gamma, value, grad_norm, ess, lambda, theta...)."""
        return [
            [r.n, r.beta_n, r.gamma_n, r.value_estimate, r.grad_norm_estimate, r.ess, r.rescale_lambda, *r.theta]
            for r in self.records
        ]

    def header(self):
        """Header names the trace columns, theta_0 .. theta_{d-1} last."""
        dim = self.records[0].theta.size if self.records else 0
        return list(TRACE_HEADER) + [f"theta_{i}" for i in range(dim)]

    def write_csv(self, path):
        """write_csv writes the trace with 17 significant digits, so floats round-trip exactly."""
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(self.header())
            for row in self.as_rows():
                writer.writerow([str(row[0])] + [FLOAT_FORMAT % float(x) for x in row[1:]])


def step(theta, beta_n, grad):
    """Step returns theta - beta_n * grad."""
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if theta.shape != grad.shape:
        raise DomainError(f"dimension mismatch: theta {theta.shape} vs gradient {grad.shape}")
    updated = theta - beta_n * grad
    if not np.all(np.isfinite(updated)):
        raise MollifyError(f"non-finite iterate after step with beta={beta_n}")
    return updated


def run(obj, theta0, config, callback: Optional[Callable[[TraceRecord], None]] = None):
    """Run iterates the recursion from theta0 for config.n_iterations steps.

    The result is a deterministic function of (obj, theta0, config). With the exponential smoother
    and beta_n == gamma_n the update is the pseudo-posterior mean itself (moment matching).
    """
    theta = as_point(theta0)
    if theta.size != obj.dim:
        raise DomainError(f"theta0 has dimension {theta.size}, {obj.name} expects {obj.dim}")
    logger.info(
        "running %s on %s for %d iterations (N=%d, seed=%d)",
        config.smoother.value,
        obj.name,
        config.n_iterations,
        config.n_samples,
        config.master_seed,
    )
    trace = RunTrace()
    clamped = 0
    for n in range(1, config.n_iterations + 1):
        beta_n = config.beta.value(n)
        gamma_n = config.gamma.value(n)
        try:
            u = obj.sample_noise(substream(config.master_seed, n, "noise"))
            estimate = estimate_gradient(
                config.smoother,
                obj,
                theta,
                gamma_n,
                u,
                config.n_samples,
                substream(config.master_seed, n, "mc"),
                target_ess=config.target_ess,
                threads=config.threads,
            )
            if estimate.posterior_mean is not None and beta_n == gamma_n:
                updated = estimate.posterior_mean.copy()
            else:
                updated = step(theta, beta_n, estimate.gradient)
        except MollifyError as e:
            raise IterationError(n, e) from e
        clamped += estimate.clamped

        if config.records(n):
            record = TraceRecord(
                n=n,
                theta=theta.copy(),
                beta_n=beta_n,
                gamma_n=gamma_n,
                grad_norm_estimate=estimate.grad_norm,
                value_estimate=estimate.value_estimate,
                ess=estimate.ess,
                rescale_lambda=estimate.rescale_lambda,
            )
            trace.records.append(record)
            logger.debug(
                "n=%d grad_norm=%.4g value=%.4g ess=%.1f",
                n,
                record.grad_norm_estimate,
                record.value_estimate,
                record.ess,
            )
            if callback is not None:
                callback(record)
        theta = updated

    trace.final_theta = theta
    if clamped:
        logger.warning("ESS target %s clamped at %d of %d iterations", config.target_ess, clamped, config.n_iterations)
    logger.info("finished: final theta %s, running min grad norm %.4g", theta, trace.running_min_grad_norm)
    return trace


def run_repeats(obj, theta0, config, seeds):
    """run_repeats runs the same configuration once per master seed."""
    traces = {}
    for seed in seeds:
        traces[int(seed)] = run(obj, theta0, replace(config, master_seed=int(seed)))
    return traces


def moment_match_run(obj, theta0, gamma, n_iterations, n_samples, master_seed, record_every=DEFAULT_RECORD_EVERY):
    """moment_match_run iterates theta_{n+1} = sum_k w_k x_k directly.

    Each step tilts N(theta_n, gamma_n I) by exp(-l) and moves to the mean of the tilted samples.
    Under shared seeds it reproduces run() with the exponential smoother and beta = gamma.
    """
    theta = as_point(theta0)
    trace = RunTrace()
    for n in range(1, int(n_iterations) + 1):
        gamma_n = gamma.value(n)
        try:
            u = obj.sample_noise(substream(master_seed, n, "noise"))
            rng = substream(master_seed, n, "mc")
            z = rng.standard_normal((int(n_samples), theta.size))
            points = theta + math.sqrt(gamma_n) * z
            losses = obj.evaluate_batch(points, u)
            w = self_normalized_weights(losses, 1.0)
        except MollifyError as e:
            raise IterationError(n, e) from e
        posterior_mean = w @ points

        if n == 1 or n == n_iterations or n % record_every == 0:
            trace.records.append(
                TraceRecord(
                    n=n,
                    theta=theta.copy(),
                    beta_n=gamma_n,
                    gamma_n=gamma_n,
                    grad_norm_estimate=float(np.linalg.norm((theta - posterior_mean) / gamma_n)),
                    value_estimate=-log_mean_exp(-losses),
                    ess=effective_sample_size(w),
                    rescale_lambda=1.0,
                )
            )
        theta = posterior_mean.copy()
    trace.final_theta = theta
    return trace
