"""auc.py implements the AUC-risk classification problem on the stereographically parametrised sphere.

A linear score s(z) = v.z is chosen by minimising the empirical AUC risk, which only depends on
the direction of v. Directions are parametrised by theta in R^(p-1) through the inverse
stereographic projection from the pole e_p, which is never reached.

The mini-batch loss keeps the normalising factor 2 n_+ n_- / (n_data (n_data - 1) n_batch); its
expectation over uniform batches is therefore twice the empirical risk. A constant factor does
not move the minimisers.
"""

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from mollify.constants import POLE_TOL, UNIT_NORM_TOL
from mollify.core import RegularityProfile, as_point
from mollify.objectives import NoisyObjective
from mollify.utils import DatasetError, DomainError, PoleError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset:
    """Dataset holds features with their +1/-1 labels, positives first."""

    features: np.ndarray
    labels: np.ndarray
    n_plus: int

    def __post_init__(self):
        n_data, p = self.features.shape
        if p < 2:
            raise DatasetError(f"need at least 2 features, got {p}")
        if not np.all(np.isfinite(self.features)):
            raise DatasetError("features must be finite")
        if not 1 <= self.n_plus <= n_data - 1:
            raise DatasetError("both classes must be present")
        if not (np.all(self.labels[: self.n_plus] == 1) and np.all(self.labels[self.n_plus :] == -1)):
            raise DatasetError("positive rows must come first")

    @classmethod
    def from_arrays(cls, features, labels):
        """from_arrays validates labels and reorders the rows so the positives come first."""
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels, dtype=float).reshape(-1)
        if features.ndim != 2 or features.shape[0] != labels.size:
            raise DatasetError("features must be an (n_data, p) array matching the labels")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise DatasetError("labels must be -1 or +1")
        if np.all(labels == 1) or np.all(labels == -1):
            raise DatasetError("single-class dataset: both labels -1 and +1 are required")
        order = np.argsort(-labels, kind="stable")
        ordered = labels[order].astype(int)
        return cls(features=features[order], labels=ordered, n_plus=int(np.sum(ordered == 1)))

    @property
    def n_data(self):
        """n_data is the number of rows."""
        return self.features.shape[0]

    @property
    def n_minus(self):
        """n_minus is the number of negative rows."""
        return self.n_data - self.n_plus

    @property
    def p(self):
        """P is the feature dimension."""
        return self.features.shape[1]

    @property
    def pair_factor(self):
        """pair_factor is 2 n_+ n_- / (n_data (n_data - 1))."""
        return 2.0 * self.n_plus * self.n_minus / (self.n_data * (self.n_data - 1))


@dataclass(frozen=True)
class PairBatch:
    """PairBatch holds n_batch (positive, negative) row-index pairs, 0-based."""

    i: np.ndarray
    j: np.ndarray

    def __len__(self):
        return self.i.size

    def validate(self, data):
        """Validate checks that every pair crosses the classes of data."""
        if np.any((self.i < 0) | (self.i >= data.n_plus)) or np.any((self.j < data.n_plus) | (self.j >= data.n_data)):
            raise DomainError("pair batch indices do not match the class ranges of the dataset")


#
# Stereographic projection
#


def stereographic(v):
    """Stereographic projects a unit vector v != e_p from the pole e_p onto R^(p-1)."""
    v = as_point(v)
    if abs(np.linalg.norm(v) - 1.0) > UNIT_NORM_TOL:
        raise DomainError(f"stereographic projection needs a unit vector, got norm {np.linalg.norm(v)}")
    gap = 1.0 - v[-1]
    if abs(gap) < POLE_TOL:
        raise PoleError("cannot project the pole e_p")
    return v[:-1] / gap


def stereographic_inverse(theta):
    """stereographic_inverse maps theta in R^(p-1) onto the unit sphere of R^p, or a batch of rows."""
    theta = np.asarray(theta, dtype=float)
    # |theta|^2 = scale^2 |t|^2 with max |t_i| <= 1; rows too large to square land on the pole
    scale = np.maximum(1.0, np.max(np.abs(theta), axis=-1, keepdims=True))
    t = theta / scale
    with np.errstate(over="ignore"):
        denom = scale * np.sum(t**2, axis=-1, keepdims=True) + 1.0 / scale
        return np.concatenate([2.0 * t / denom, 1.0 - 2.0 / (scale * denom)], axis=-1)


#
# Risks and losses
#


def empirical_auc_risk(v, data):
    """empirical_auc_risk counts the pairs with v.z_i < v.z_j over all positive/negative pairs.

    Scores are sorted once, so the count is O(n log n). Tied scores are not violations.
    """
    v = as_point(v)
    if v.size != data.p:
        raise DomainError(f"direction has dimension {v.size}, dataset has {data.p} features")
    scores = data.features @ v
    positives = scores[: data.n_plus]
    negatives = np.sort(scores[data.n_plus :])
    # negatives strictly above each positive
    above = negatives.size - np.searchsorted(negatives, positives, side="right")
    return float(np.sum(above)) / (data.n_data * (data.n_data - 1))


def empirical_auc_risk_pairwise(v, data):
    """empirical_auc_risk_pairwise is the O(n^2) reference count behind empirical_auc_risk."""
    scores = data.features @ as_point(v)
    count = 0
    for i in range(data.n_plus):
        for j in range(data.n_plus, data.n_data):
            if scores[i] < scores[j]:
                count += 1
    return count / (data.n_data * (data.n_data - 1))


def minibatch_auc_loss(theta, batch, data):
    """minibatch_auc_loss is the scaled count of violated pairs of the batch at sigma^-1(theta).

    theta may be one point or an (N, p-1) batch of points; the result has the matching shape.
    """
    theta = np.asarray(theta, dtype=float)
    scores = stereographic_inverse(theta) @ data.features.T
    violated = np.sum(scores[..., batch.i] < scores[..., batch.j], axis=-1)
    # one division, so the exhaustive batch gives exactly twice empirical_auc_risk
    return 2.0 * data.n_plus * data.n_minus * violated / (data.n_data * (data.n_data - 1) * len(batch))


def sample_batch(data, n_batch, rng):
    """sample_batch draws n_batch pairs uniformly from positives x negatives, with replacement."""
    if n_batch < 1:
        raise DomainError(f"n_batch must be >= 1, got {n_batch}")
    i = rng.integers(0, data.n_plus, size=n_batch)
    j = rng.integers(data.n_plus, data.n_data, size=n_batch)
    return PairBatch(i=i, j=j)


def full_pair_batch(data):
    """full_pair_batch enumerates every (positive, negative) pair once."""
    i, j = np.meshgrid(np.arange(data.n_plus), np.arange(data.n_plus, data.n_data), indexing="ij")
    return PairBatch(i=i.reshape(-1), j=j.reshape(-1))


def auc_objective(data, n_batch, exhaustive=False):
    """auc_objective wraps the mini-batch loss as a NoisyObjective on R^(p-1).

    The noise value is a PairBatch. With exhaustive=True the batch is every pair of I and the
    objective is deterministic.
    """
    bound = data.pair_factor
    if exhaustive:
        everything = full_pair_batch(data)
        return NoisyObjective(
            name="auc_exhaustive",
            dim=data.p - 1,
            loss=lambda points, u: minibatch_auc_loss(points, everything, data),
            profile=RegularityProfile(alpha=0.0, beta_upper=0.0, deterministic=True),
            lower_bound=0.0,
            bounded=True,
            j_bound=bound,
        )
    if n_batch < 1:
        raise DomainError(f"n_batch must be >= 1, got {n_batch}")
    return NoisyObjective(
        name="auc",
        dim=data.p - 1,
        loss=lambda points, u: minibatch_auc_loss(points, u, data),
        sample_noise=lambda rng: sample_batch(data, n_batch, rng),
        profile=RegularityProfile(alpha=0.0, beta_upper=0.0, eta=math.inf, deterministic=False),
        lower_bound=0.0,
        bounded=True,
        j_bound=bound,
    )


def risk_along_trace(trace, data):
    """risk_along_trace evaluates the empirical risk at sigma^-1 of every recorded iterate."""
    return np.array([empirical_auc_risk(stereographic_inverse(r.theta), data) for r in trace.records])


#
# Data
#


def _parse_row(row, line):
    try:
        values = [float(cell) for cell in row]
    except ValueError as e:
        raise DatasetError(f"cannot parse {row!r}: {e}", line=line) from e
    if values[0] not in (-1.0, 1.0):
        raise DatasetError(f"label must be -1 or +1, got {row[0]!r}", line=line)
    if not all(math.isfinite(x) for x in values):
        raise DatasetError(f"features must be finite, got {row!r}", line=line)
    return values


def load_csv(path):
    """load_csv reads rows `label,feat_1,...,feat_p`; a non-numeric first row is taken as a header."""
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            rows = _read_rows(path, handle)
    except UnicodeDecodeError as e:
        raise DatasetError(f"{path} is not UTF-8 text: {e}") from e
    if not rows:
        raise DatasetError(f"{path} holds no data rows")
    table = np.array(rows)
    data = Dataset.from_arrays(table[:, 1:], table[:, 0])
    logger.info("loaded %s: %d rows, %d features, %d positives", path, data.n_data, data.p, data.n_plus)
    return data


def _read_rows(path, handle):
    rows = []
    width = None
    for line, row in enumerate(csv.reader(handle), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if line == 1 and not _is_number(row[0]):
            logger.debug("%s: skipping header %s", path, row)
            continue
        values = _parse_row(row, line)
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DatasetError(f"expected {width} columns, got {len(values)}", line=line)
        rows.append(values)
    return rows


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def synthetic_blobs(p, n_data, rng, separation=4.0, scale=0.5, positive_fraction=0.5):
    """synthetic_blobs draws two Gaussian blobs whose centres are `separation` apart along a random direction."""
    if p < 2 or n_data < 2:
        raise DomainError("need p >= 2 and n_data >= 2")
    n_plus = min(max(int(round(positive_fraction * n_data)), 1), n_data - 1)
    direction = rng.standard_normal(p)
    direction /= np.linalg.norm(direction)
    centres = np.where(np.arange(n_data)[:, None] < n_plus, 0.5, -0.5) * separation * direction
    features = centres + scale * rng.standard_normal((n_data, p))
    labels = np.where(np.arange(n_data) < n_plus, 1, -1)
    return Dataset.from_arrays(features, labels)


def train_test_split(data, test_fraction, rng):
    """train_test_split holds out test_fraction of each class."""
    if not 0 < test_fraction < 1:
        raise DomainError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    test_rows = []
    for lo, hi in ((0, data.n_plus), (data.n_plus, data.n_data)):
        size = hi - lo
        n_test = min(max(int(round(test_fraction * size)), 1), size - 1)
        test_rows.append(lo + rng.choice(size, size=n_test, replace=False))
    test_rows = np.concatenate(test_rows)
    mask = np.zeros(data.n_data, dtype=bool)
    mask[test_rows] = True
    train = Dataset.from_arrays(data.features[~mask], data.labels[~mask])
    test = Dataset.from_arrays(data.features[mask], data.labels[mask])
    return train, test
