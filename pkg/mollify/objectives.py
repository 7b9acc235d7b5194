"""objectives.py defines NoisyObjective, the builtin corpus of test objectives and the objective registry."""

import math
from dataclasses import dataclass, replace
from typing import Any, Callable, Optional

import numpy as np

from mollify.constants import DEFAULT_NOISE_MOMENT_ORDER
from mollify.core import RegularityProfile, as_point
from mollify.utils import DomainError, EvaluationError


def _no_noise(rng):  # pylint: disable=W0613
    return None


@dataclass(frozen=True)
class ScalarField:
    """ScalarField is a deterministic map R^d -> R evaluated on row batches.

    `breakpoints(axis, lo, hi)` returns the sorted coordinates in [lo, hi] at which the field jumps along
    `axis`; fields without declared breakpoints are treated as continuous.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    dim: int
    breakpoints: Optional[Callable[[int, float, float], np.ndarray]] = None

    def __call__(self, points):
        return np.asarray(self.fn(np.atleast_2d(points)), dtype=float)

    def axis_breakpoints(self, axis, lo, hi):
        """Axis_breakpoints returns the declared discontinuities on axis strictly inside (lo, hi)."""
        if self.breakpoints is None:
            return np.empty(0)
        found = np.asarray(self.breakpoints(axis, lo, hi), dtype=float).reshape(-1)
        return np.unique(found[(found > lo) & (found < hi)])


@dataclass(frozen=True)
class NoisyObjective:
    """NoisyObjective is a loss l(theta, u) together with its noise sampler and declared regularity.

    `loss(points, u)` evaluates a (N, d) batch at one noise value and returns N losses.
    Noise values are opaque: only `loss` and `sample_noise` look inside them.
    """

    name: str
    dim: int
    loss: Callable[[np.ndarray, Any], np.ndarray]
    profile: RegularityProfile
    sample_noise: Callable[[np.random.Generator], Any] = _no_noise
    lower_bound: float = 0.0
    bounded: bool = False
    j_bound: float = 1.0
    j_of_noise: Optional[Callable[[Any], float]] = None
    holder_radius: float = math.inf
    breakpoints: Optional[Callable[[int, float, float], np.ndarray]] = None

    def evaluate_batch(self, points, u=None):
        """Evaluate the loss on a batch of points, rejecting NaN results."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dim:
            raise DomainError(f"{self.name} expects dimension {self.dim}, got {points.shape[1]}")
        values = np.asarray(self.loss(points, u), dtype=float).reshape(-1)
        if np.any(np.isnan(values)):
            raise EvaluationError(f"{self.name} returned NaN")
        return values

    def evaluate(self, theta, u=None):
        """Evaluate the loss at a single point."""
        return float(self.evaluate_batch(as_point(theta)[None, :], u)[0])

    def holder_bound(self, u=None):
        """holder_bound returns J(u), the Hölder constant at noise value u."""
        if self.j_of_noise is not None:
            return float(self.j_of_noise(u))
        return self.j_bound

    def field(self, u=None):
        """Field freezes the noise at u and returns the resulting deterministic ScalarField."""
        return ScalarField(fn=lambda points: self.loss(points, u), dim=self.dim, breakpoints=self.breakpoints)


#
# Corpus
#


def _grid_breakpoints(spacing, symmetric_zero=False):
    def breakpoints(axis, lo, hi):  # pylint: disable=W0613
        found = spacing * np.arange(math.floor(lo / spacing), math.ceil(hi / spacing) + 1)
        if not symmetric_zero:
            found = found[found != 0]
        return found

    return breakpoints


def _zero_breakpoint(axis, lo, hi):  # pylint: disable=W0613
    return np.array([0.0]) if lo < 0 < hi else np.empty(0)


def quadratic(dim=2):
    """Quadratic is ||x||^2 / 2, smooth and deterministic."""
    radius = 3.0
    return NoisyObjective(
        name="quadratic",
        dim=dim,
        loss=lambda points, u: 0.5 * np.sum(points**2, axis=1),
        profile=RegularityProfile(alpha=1.0, beta_upper=2.0, deterministic=True),
        j_bound=max(radius * math.sqrt(dim), 0.5) + 1.0,
        holder_radius=radius,
    )


def step(dim=1):
    """Step is the indicator 1{x < 0} in one dimension."""
    _require_dim("step", dim, 1)
    return NoisyObjective(
        name="step",
        dim=1,
        loss=lambda points, u: (points[:, 0] < 0).astype(float),
        profile=RegularityProfile(alpha=0.0, beta_upper=0.0, deterministic=True),
        bounded=True,
        j_bound=1.0,
        breakpoints=_zero_breakpoint,
    )


def step_quadratic(dim=1):
    """step_quadratic is 1{x < 0} + 0.05 x^2, discontinuous with a minimiser at 0."""
    _require_dim("step_quadratic", dim, 1)
    return NoisyObjective(
        name="step_quadratic",
        dim=1,
        loss=lambda points, u: (points[:, 0] < 0).astype(float) + 0.05 * points[:, 0] ** 2,
        profile=RegularityProfile(alpha=0.0, beta_upper=2.0, deterministic=True),
        j_bound=2.0,
        holder_radius=3.0,
        breakpoints=_zero_breakpoint,
    )


def noisy_quadratic(dim=2, noise_var=0.1):
    """noisy_quadratic is ||theta||^2 / 2 + u.theta with u ~ N(0, noise_var I)."""
    radius = 3.0
    scale = math.sqrt(noise_var)

    def loss(points, u):
        return 0.5 * np.sum(points**2, axis=1) + points @ np.asarray(u, dtype=float)

    return NoisyObjective(
        name="noisy_quadratic",
        dim=dim,
        loss=loss,
        sample_noise=lambda rng: scale * rng.standard_normal(dim),
        profile=RegularityProfile(alpha=1.0, beta_upper=2.0, eta=DEFAULT_NOISE_MOMENT_ORDER, deterministic=False),
        j_bound=radius * math.sqrt(dim) + 1.0,
        j_of_noise=lambda u: radius * math.sqrt(dim) + 1.0 + float(np.linalg.norm(u)),
        holder_radius=radius,
    )


def staircase(dim=2):
    """Staircase is sum_i floor(2|x_i|) / 2, piecewise constant with a flat central cell."""
    return NoisyObjective(
        name="staircase",
        dim=dim,
        loss=lambda points, u: np.sum(np.floor(2.0 * np.abs(points)), axis=1) / 2.0,
        profile=RegularityProfile(alpha=0.0, beta_upper=1.0, deterministic=True),
        j_bound=math.sqrt(dim) + dim / 2.0,
        breakpoints=_grid_breakpoints(0.5),
    )


def with_gaussian_noise(base, sigma, moment_order=DEFAULT_NOISE_MOMENT_ORDER):
    """with_gaussian_noise adds sigma * g, g ~ N(0, 1), to every evaluation of base.

    The wrapped noise value is the pair (base noise, g). The mean objective and the Hölder
    constant are unchanged. eta stays infinite only for bounded bases; otherwise it is the
    base's finite order, or moment_order when the base declared none.
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    if base.bounded and math.isinf(base.profile.eta):
        eta = math.inf
    elif math.isinf(base.profile.eta):
        eta = moment_order
    else:
        eta = base.profile.eta

    def loss(points, u):
        base_u, g = u
        return base.loss(points, base_u) + sigma * g

    def sample_noise(rng):
        return (base.sample_noise(rng), float(rng.standard_normal()))

    j_of_noise = None
    if base.j_of_noise is not None:
        j_of_noise = lambda u: base.j_of_noise(u[0])  # noqa: E731

    return replace(
        base,
        name=f"{base.name}+noise",
        loss=loss,
        sample_noise=sample_noise,
        profile=replace(base.profile, eta=eta, deterministic=False),
        bounded=False,
        j_of_noise=j_of_noise,
    )


def _require_dim(name, dim, expected):
    if dim is not None and dim != expected:
        raise DomainError(f"{name} is only defined in dimension {expected}")


#
# Registry
#

__OBJECTIVE_REGISTRY__ = {}


def register_objectives(registry):
    """Register objective factories by descriptor.

    Args:
        registry: a python dict mapping descriptor strings to factories
            called as `factory(dim=...)` that return a NoisyObjective.
    """
    err = ValueError("invalid objective registry")
    for key, val in registry.items():
        if not isinstance(key, str):
            # key must be string
            raise err
        if not callable(val):
            # val must be a factory
            raise err
    __OBJECTIVE_REGISTRY__.update(registry)


def objective_names():
    """objective_names lists the registered descriptors."""
    return sorted(__OBJECTIVE_REGISTRY__)


def get_objective(name, dim=None):
    """get_objective builds the registered objective `name`, optionally in dimension dim."""
    try:
        factory = __OBJECTIVE_REGISTRY__[name]
    except KeyError as e:
        raise DomainError(f"unknown objective {name!r}, expected one of {objective_names()}") from e
    if dim is None:
        return factory()
    return factory(dim=int(dim))


def builtin_corpus():
    """builtin_corpus returns one default instance of every builtin objective."""
    return [quadratic(), step(), step_quadratic(), noisy_quadratic(), staircase()]


register_objectives(
    {
        "quadratic": quadratic,
        "step": step,
        "step_quadratic": step_quadratic,
        "noisy_quadratic": noisy_quadratic,
        "staircase": staircase,
    }
)
