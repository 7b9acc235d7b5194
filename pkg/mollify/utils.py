"""utils.py contains the error types and small helpers used throughout the package."""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from mollify.constants import SUBSTREAM_TAGS, THREADS_ENV_VAR


class MollifyError(Exception):
    """MollifyError is the base class of every error raised by the package."""

    pass  # pylint: disable=W0107


class DomainError(MollifyError, ValueError):
    """DomainError represents an argument outside the domain of an operation."""

    pass  # pylint: disable=W0107


class EvaluationError(MollifyError):
    """EvaluationError is raised when an objective returns a non-finite loss."""

    pass  # pylint: disable=W0107


class DegenerateWeightsError(MollifyError):
    """DegenerateWeightsError is raised when every importance weight underflows."""

    pass  # pylint: disable=W0107


class InfeasibleTargetError(MollifyError):
    """InfeasibleTargetError is raised when no loss scaling can reach the requested ESS."""

    pass  # pylint: disable=W0107


class PoleError(MollifyError):
    """PoleError is raised when projecting the pole of the stereographic map."""

    pass  # pylint: disable=W0107


class OracleDimensionError(MollifyError):
    """OracleDimensionError is raised when quadrature is requested in too many dimensions."""

    pass  # pylint: disable=W0107


class ConfigError(MollifyError):
    """ConfigError is raised for unreadable or invalid experiment configuration."""

    pass  # pylint: disable=W0107


class DatasetError(MollifyError):
    """DatasetError represents a malformed or single-class dataset."""

    def __init__(self, message, line=None):
        """Attach the offending line number, when known."""
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IterationError(MollifyError):
    """IterationError wraps an estimator failure with the iteration it happened at."""

    def __init__(self, iteration, error):
        """Keep the iteration index next to the original message."""
        super().__init__(f"iteration {iteration}: {error}")
        self.iteration = iteration


def substream(master_seed, index, tag):
    """substream returns the generator for (master_seed, index, tag).

    Streams with different tags or indices are statistically independent, so changing how many
    draws one of them consumes never perturbs the others.
    """
    if tag not in SUBSTREAM_TAGS:
        raise ValueError(f"unknown substream tag {tag!r}")
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(index), SUBSTREAM_TAGS[tag]))
    return np.random.default_rng(seq)


def resolve_threads(threads):
    """resolve_threads applies the environment override and maps 0 to the CPU count."""
    env = os.environ.get(THREADS_ENV_VAR)
    if env is not None and env.strip():
        try:
            threads = int(env)
        except ValueError as e:
            raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from e
    threads = int(threads)
    if threads < 0:
        raise ConfigError(f"threads must be >= 0, got {threads}")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def map_chunks(fn, points, threads=1):
    """map_chunks evaluates fn on row-chunks of points and concatenates the results in order.

    The row order of the output never depends on the number of threads.
    """
    if threads <= 1 or len(points) < 2 * threads:
        return np.asarray(fn(points), dtype=float)
    chunks = np.array_split(points, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate([np.asarray(part, dtype=float) for part in parts])
