"""smoothers.py contains the Monte-Carlo estimators of the Gaussian-smoothed value and gradient.

Two smoothing maps are supported. The mean smoother averages the loss over N(theta, gamma I)
perturbations. The exponential smoother takes -log of the averaged exp(-loss); its gradient is
gamma^-1 (theta - E[X]) under the pseudo-posterior obtained by tilting the Gaussian with
exp(-loss), which is estimated by self-normalised importance sampling.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from mollify.constants import RESCALE_LOG2_BRACKET, RESCALE_MAX_ITER, RESCALE_TOL
from mollify.core import SmootherKind, as_point
from mollify.utils import (
    DegenerateWeightsError,
    DomainError,
    EvaluationError,
    InfeasibleTargetError,
    map_chunks,
)

logger = logging.getLogger(__name__)


@dataclass
class SampleBatch:
    """SampleBatch holds the standard-normal draws and the losses at theta + sqrt(gamma) z."""

    z: np.ndarray
    points: np.ndarray
    losses: np.ndarray
    base_loss: Optional[float] = None


@dataclass
class GradEstimate:
    """GradEstimate is an estimated smoothed gradient with its diagnostics."""

    gradient: np.ndarray
    value_estimate: float
    ess: float
    std_error: np.ndarray
    rescale_lambda: float
    n_samples: int
    posterior_mean: Optional[np.ndarray] = None
    posterior_loss_mean: Optional[float] = None
    clamped: bool = False

    @property
    def grad_norm(self):
        """grad_norm is the Euclidean norm of the gradient estimate."""
        return float(np.linalg.norm(self.gradient))


def _check_args(gamma, n_samples):
    if not gamma > 0:
        raise DomainError(f"gamma must be > 0, got {gamma}")
    if n_samples < 2:
        raise DomainError(f"n_samples must be >= 2, got {n_samples}")


def draw_batch(obj, theta, gamma, u, n_samples, rng, threads=1, with_base=False):
    """draw_batch perturbs theta with N(0, gamma I) noise and evaluates the objective at every sample."""
    theta = as_point(theta)
    z = rng.standard_normal((int(n_samples), theta.size))
    points = theta + math.sqrt(gamma) * z
    losses = map_chunks(lambda chunk: obj.evaluate_batch(chunk, u), points, threads)
    base_loss = obj.evaluate(theta, u) if with_base else None
    return SampleBatch(z=z, points=points, losses=losses, base_loss=base_loss)


def _require_finite(batch, name):
    if not np.all(np.isfinite(batch.losses)) or (batch.base_loss is not None and not math.isfinite(batch.base_loss)):
        raise EvaluationError(f"{name} returned a non-finite loss")


def log_mean_exp(values):
    """log_mean_exp returns log(mean(exp(values))) without overflow."""
    values = np.asarray(values, dtype=float)
    return float(logsumexp(values) - math.log(values.size))


def self_normalized_weights(losses, lam=1.0):
    """self_normalized_weights returns weights proportional to exp(-lam * losses), summing to one.

    The exponent is shifted by the minimum loss, so adding a constant to every loss leaves the
    weights unchanged.
    """
    losses = np.asarray(losses, dtype=float)
    lowest = np.min(losses)
    if not np.isfinite(lowest):
        raise DegenerateWeightsError("every importance weight underflows")
    w = np.exp(-lam * (losses - lowest))
    total = w.sum()
    if not total > 0:
        raise DegenerateWeightsError("every importance weight underflows")
    return w / total


def ess(weights):
    """Ess returns the effective sample size (sum w)^2 / sum w^2 of non-negative weights.

    >>> ess([1.0, 1.0, 1.0, 1.0])
    4.0
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DomainError("weights must be finite and non-negative")
    total = w.sum()
    if not total > 0:
        raise DomainError("at least one weight must be positive")
    value = float(total**2 / np.sum(w**2))
    return min(max(value, 1.0), float(w.size))


def _ess_at(shifted, lam):
    w = np.exp(-lam * shifted)
    return float(w.sum() ** 2 / np.sum(w**2))


def rescale_to_target_ess(losses, target_ess, tol=RESCALE_TOL):
    """rescale_to_target_ess finds lam > 0 such that exp(-lam * losses) has the requested ESS.

    The ESS decreases from N (lam -> 0) to the multiplicity of the minimum loss (lam -> inf),
    so lam is found by bisection on log2(lam) over a clamped bracket. Equal losses make the
    ESS independent of lam and return 1.
    """
    losses = np.asarray(losses, dtype=float)
    n = losses.size
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    if target_ess > n:
        raise InfeasibleTargetError(f"target ESS {target_ess} exceeds the sample size {n}")
    shifted = losses - np.min(losses)
    if np.all(shifted == 0):
        return 1.0
    floor = int(np.sum(shifted == 0))
    if target_ess < floor:
        raise InfeasibleTargetError(f"target ESS {target_ess} is below the limit {floor} set by the minimum loss")

    lo, hi = -RESCALE_LOG2_BRACKET, RESCALE_LOG2_BRACKET
    ess_lo, ess_hi = _ess_at(shifted, 2.0**lo), _ess_at(shifted, 2.0**hi)
    if target_ess > ess_lo + tol or target_ess < ess_hi - tol:
        raise InfeasibleTargetError(
            f"target ESS {target_ess} is outside the reachable range [{ess_hi:.6g}, {ess_lo:.6g}]"
        )
    if abs(ess_lo - target_ess) <= tol:
        return 2.0**lo
    if abs(ess_hi - target_ess) <= tol:
        return 2.0**hi

    mid = 0.0
    for i in range(RESCALE_MAX_ITER):
        mid = 0.5 * (lo + hi)
        value = _ess_at(shifted, 2.0**mid)
        if abs(value - target_ess) <= tol:
            logger.debug("ESS rescaling converged after %d bisections: lambda=%g", i + 1, 2.0**mid)
            break
        if value > target_ess:
            lo = mid
        else:
            hi = mid
    return 2.0**mid


def grad_mean_smooth(obj, theta, gamma, u, n_samples, rng, threads=1):
    """grad_mean_smooth estimates the gradient of the mean-smoothed loss.

    Uses the centred form gamma^-1/2 (l(theta + sqrt(gamma) z_k) - l(theta)) z_k, which is exactly
    zero on constant losses for every draw.
    """
    _check_args(gamma, n_samples)
    batch = draw_batch(obj, theta, gamma, u, n_samples, rng, threads=threads, with_base=True)
    _require_finite(batch, obj.name)
    terms = (batch.losses - batch.base_loss)[:, None] * batch.z / math.sqrt(gamma)
    n = batch.losses.size
    return GradEstimate(
        gradient=terms.mean(axis=0),
        value_estimate=float(batch.losses.mean()),
        ess=float(n),
        std_error=terms.std(axis=0, ddof=1) / math.sqrt(n),
        rescale_lambda=1.0,
        n_samples=n,
    )


def grad_exp_smooth(obj, theta, gamma, u, n_samples, rng, target_ess=None, threads=1):
    """grad_exp_smooth estimates the gradient of the exponentially smoothed loss.

    The pseudo-posterior mean sum_k w_k x_k uses weights proportional to exp(-lam * l(x_k)), where
    lam is 1 unless target_ess asks for rescaling. The value estimate always uses lam = 1.
    A target below the number of samples tied at the minimum loss is unreachable; lam is then
    clamped to the upper bracket edge and the estimate is flagged `clamped`.
    """
    _check_args(gamma, n_samples)
    theta = as_point(theta)
    batch = draw_batch(obj, theta, gamma, u, n_samples, rng, threads=threads)
    if np.any(batch.losses == -np.inf):
        raise EvaluationError(f"{obj.name} returned -inf")
    if np.all(batch.losses == np.inf):
        raise DegenerateWeightsError("every importance weight underflows")
    n = batch.losses.size

    lam, clamped = 1.0, False
    if target_ess is not None:
        if not 1 < target_ess < n:
            raise DomainError(f"target ESS must lie in (1, {n}), got {target_ess}")
        try:
            lam = rescale_to_target_ess(batch.losses, target_ess)
        except InfeasibleTargetError as e:
            # too many tied minimisers: keep only them
            logger.debug("clamping lambda to the bracket edge: %s", e)
            lam, clamped = 2.0**RESCALE_LOG2_BRACKET, True
    w = self_normalized_weights(batch.losses, lam)
    posterior_mean = w @ batch.points
    gradient = (theta - posterior_mean) / gamma

    unit = w if lam == 1.0 else self_normalized_weights(batch.losses, 1.0)
    finite = np.isfinite(batch.losses)
    posterior_loss_mean = float(unit[finite] @ batch.losses[finite])
    std_error = np.sqrt(np.sum(w[:, None] ** 2 * (batch.points - posterior_mean) ** 2, axis=0)) / gamma
    return GradEstimate(
        gradient=gradient,
        value_estimate=-log_mean_exp(-batch.losses),
        ess=ess(w),
        std_error=std_error,
        rescale_lambda=lam,
        n_samples=n,
        posterior_mean=posterior_mean,
        posterior_loss_mean=posterior_loss_mean,
        clamped=clamped,
    )


def estimate_gradient(kind, obj, theta, gamma, u, n_samples, rng, target_ess=None, threads=1):
    """estimate_gradient dispatches to the estimator of the given SmootherKind."""
    kind = SmootherKind.parse(kind)
    if kind is SmootherKind.MEAN:
        return grad_mean_smooth(obj, theta, gamma, u, n_samples, rng, threads=threads)
    return grad_exp_smooth(obj, theta, gamma, u, n_samples, rng, target_ess=target_ess, threads=threads)


def smooth_value_mean(obj, theta, gamma, u, n_samples, rng, threads=1):
    """smooth_value_mean is the Monte-Carlo mean of l(theta + sqrt(gamma) z_k, u)."""
    _check_args(gamma, n_samples)
    batch = draw_batch(obj, theta, gamma, u, n_samples, rng, threads=threads)
    _require_finite(batch, obj.name)
    return float(batch.losses.mean())


def smooth_value_exp(obj, theta, gamma, u, n_samples, rng, threads=1):
    """smooth_value_exp is the Monte-Carlo estimate of -log E[exp(-l(theta + sqrt(gamma) z, u))]."""
    _check_args(gamma, n_samples)
    batch = draw_batch(obj, theta, gamma, u, n_samples, rng, threads=threads)
    if np.any(np.isnan(batch.losses)) or np.any(batch.losses == -np.inf):
        raise EvaluationError(f"{obj.name} returned a non-finite loss")
    if np.all(batch.losses == np.inf):
        raise DegenerateWeightsError("every importance weight underflows")
    return -log_mean_exp(-batch.losses)
