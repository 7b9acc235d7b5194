"""oracle.py provides quadrature references for the smoothed values and gradients in low dimension.

Integrals are taken in standardised z-space over [-truncation, truncation]^d. Each axis is cut at
the field's declared discontinuities and every smooth piece gets its own Gauss-Legendre rule, so
jumps cost no accuracy.
"""

import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp, ndtr
from scipy.stats import norm

from mollify.constants import (
    DEFAULT_N_NODES,
    DEFAULT_N_NODES_3D,
    DEFAULT_TRUNCATION,
    MAX_ORACLE_DIM,
    MIN_N_NODES,
    MIN_TRUNCATION,
)
from mollify.core import SmootherKind, as_point
from mollify.objectives import ScalarField
from mollify.utils import DomainError, OracleDimensionError

# Smallest Gauss-Legendre rule used on one piece of an axis
MIN_SEGMENT_NODES = 16


@lru_cache(maxsize=None)
def _legendre(count):
    return leggauss(count)


@dataclass(frozen=True)
class QuadratureSpec:
    """QuadratureSpec sets the per-axis node count and the truncation of the z-box."""

    n_nodes: int = DEFAULT_N_NODES
    truncation: float = DEFAULT_TRUNCATION
    dim: int = 1

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_ORACLE_DIM:
            raise OracleDimensionError(f"quadrature supports 1 to {MAX_ORACLE_DIM} dimensions, got {self.dim}")
        if self.n_nodes < MIN_N_NODES:
            raise DomainError(f"n_nodes must be >= {MIN_N_NODES}, got {self.n_nodes}")
        if self.truncation < MIN_TRUNCATION:
            raise DomainError(f"truncation must be >= {MIN_TRUNCATION}, got {self.truncation}")

    @classmethod
    def default_for(cls, dim):
        """default_for returns the default spec for dimension dim."""
        if dim > MAX_ORACLE_DIM:
            raise OracleDimensionError(f"quadrature supports 1 to {MAX_ORACLE_DIM} dimensions, got {dim}")
        n_nodes = DEFAULT_N_NODES_3D if dim == 3 else DEFAULT_N_NODES
        return cls(n_nodes=n_nodes, dim=dim)


def as_field(f, dim):
    """as_field wraps a plain batch callable into a continuous ScalarField."""
    if isinstance(f, ScalarField):
        return f
    return ScalarField(fn=f, dim=dim)


def _axis_rule(field, axis, center, scale, spec):
    """Nodes and density-weighted weights in z for one axis, split at the field's jumps."""
    t = spec.truncation
    jumps = field.axis_breakpoints(axis, center - t * scale, center + t * scale)
    edges = np.concatenate([[-t], (jumps - center) / scale, [t]])
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        count = max(MIN_SEGMENT_NODES, int(round(spec.n_nodes * (b - a) / (2 * t))))
        x, w = _legendre(count)
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    z = np.concatenate(nodes)
    w = np.concatenate(weights) * np.exp(-0.5 * z**2) / math.sqrt(2 * math.pi)
    return z, w


def _rule(field, theta, gamma, spec):
    if not gamma > 0:
        raise DomainError(f"gamma must be > 0, got {gamma}")
    d = theta.size
    if d > MAX_ORACLE_DIM:
        raise OracleDimensionError(f"quadrature supports 1 to {MAX_ORACLE_DIM} dimensions, got {d}")
    if spec is None:
        spec = QuadratureSpec.default_for(d)
    scale = math.sqrt(gamma)
    axes = [_axis_rule(field, i, theta[i], scale, spec) for i in range(d)]
    grids = np.meshgrid(*[z for z, _ in axes], indexing="ij")
    z = np.stack([g.reshape(-1) for g in grids], axis=1)
    w = reduce(np.multiply.outer, [w for _, w in axes]).reshape(-1)
    return z, w, scale


def _prepare(f, theta, gamma, spec):
    theta = as_point(theta)
    field = as_field(f, theta.size)
    z, w, scale = _rule(field, theta, gamma, spec)
    values = field(theta + scale * z)
    return theta, field, z, w, scale, values


def oracle_mean_value(f, theta, gamma, spec=None):
    """oracle_mean_value integrates f(theta + sqrt(gamma) z) against the standard normal density."""
    _, _, _, w, _, values = _prepare(f, theta, gamma, spec)
    return float(w @ values)


def oracle_mean_grad(f, theta, gamma, spec=None):
    """oracle_mean_grad integrates gamma^-1/2 (f(theta + sqrt(gamma) z) - f(theta)) z."""
    theta, field, z, w, scale, values = _prepare(f, theta, gamma, spec)
    base = float(field(theta[None, :])[0])
    return ((w * (values - base)) @ z) / scale


def _tilted(w, values):
    log_t = np.log(w) - values
    return np.exp(log_t - logsumexp(log_t))


def oracle_exp_value(f, theta, gamma, spec=None):
    """oracle_exp_value is -log of the integral of exp(-f(theta + sqrt(gamma) z)) against the normal density."""
    _, _, _, w, _, values = _prepare(f, theta, gamma, spec)
    return float(-logsumexp(-values, b=w))


def oracle_exp_grad(f, theta, gamma, spec=None):
    """oracle_exp_grad is gamma^-1 (theta - E[X]) under the exp(-f)-tilted Gaussian."""
    _, _, z, w, scale, values = _prepare(f, theta, gamma, spec)
    return -(_tilted(w, values) @ z) / scale


def oracle_posterior_loss_mean(f, theta, gamma, spec=None):
    """oracle_posterior_loss_mean is the mean of f under the exp(-f)-tilted Gaussian."""
    _, _, _, w, _, values = _prepare(f, theta, gamma, spec)
    return float(_tilted(w, values) @ values)


def oracle_grad(kind, f, theta, gamma, spec=None):
    """oracle_grad dispatches on the SmootherKind."""
    if SmootherKind.parse(kind) is SmootherKind.MEAN:
        return oracle_mean_grad(f, theta, gamma, spec)
    return oracle_exp_grad(f, theta, gamma, spec)


def oracle_grad_norm_along(trace, f, kind, spec=None):
    """oracle_grad_norm_along returns the oracle gradient norm at every recorded iterate of a trace."""
    return np.array([np.linalg.norm(oracle_grad(kind, f, r.theta, r.gamma_n, spec)) for r in trace.records])


#
# Closed forms
#


def quadratic_mean_grad(theta, gamma):  # pylint: disable=W0613
    """quadratic_mean_grad is the mean-smoothed gradient of ||x||^2 / 2, which is theta for every gamma."""
    return as_point(theta)


def quadratic_exp_grad(theta, gamma):
    """quadratic_exp_grad is the exp-smoothed gradient of ||x||^2 / 2, theta / (1 + gamma)."""
    return as_point(theta) / (1.0 + gamma)


def step_mean_grad(theta, gamma):
    """step_mean_grad is the mean-smoothed gradient of 1{x < 0}, -phi(theta / s) / s with s = sqrt(gamma)."""
    s = math.sqrt(gamma)
    return -norm.pdf(as_point(theta) / s) / s


def step_exp_grad(theta, gamma):
    """step_exp_grad is the exp-smoothed gradient of 1{x < 0}.

    The smoothed value is -log(1 - (1 - e^-1) Phi(-theta / s)).
    """
    s = math.sqrt(gamma)
    theta = as_point(theta)
    mass = 1.0 - math.exp(-1.0)
    return -mass * norm.pdf(theta / s) / s / (1.0 - mass * ndtr(-theta / s))


# objective name -> (mean gradient, exp gradient)
CLOSED_FORMS = {
    "quadratic": (quadratic_mean_grad, quadratic_exp_grad),
    "step": (step_mean_grad, step_exp_grad),
}


def closed_form_grad(name, kind, theta, gamma):
    """closed_form_grad returns the exact smoothed gradient of a builtin objective, or None when unknown."""
    if name not in CLOSED_FORMS:
        return None
    mean_grad, exp_grad = CLOSED_FORMS[name]
    if SmootherKind.parse(kind) is SmootherKind.MEAN:
        return mean_grad(theta, gamma)
    return exp_grad(theta, gamma)
