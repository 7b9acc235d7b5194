"""config.py reads, validates and writes experiment configuration files.

An experiment file is a YAML document with five sections:

    objective:
      name: step_quadratic     # registry descriptor, or "auc"
      dim: 1                   # optional
      theta0: [1.0]            # starting point, one entry per dimension
      dataset: data.csv        # auc only; omit to draw synthetic blobs
      n_batch: 32              # auc only
    smoother:
      kind: exp
      target_ess: 512          # optional
    schedule:
      c_beta: 0.2
      iota: 0.5
      c_gamma: 0.2
      kappa: 0.2
    run:
      n_iterations: 5000
      n_samples: 512
      master_seed: 42
      record_every: 10         # optional
      threads: 1               # optional, 0 means every CPU
    output:
      path: out/step_quadratic
"""

import logging
import math
from dataclasses import asdict, dataclass, fields
from typing import Optional, Tuple

import numpy as np
import yaml

from mollify import auc
from mollify.constants import DEFAULT_RECORD_EVERY, DEFAULT_THREADS
from mollify.core import Mode, Schedule, SmootherKind
from mollify.objectives import get_objective
from mollify.optimizer import RunConfig
from mollify.utils import ConfigError, MollifyError, resolve_threads, substream

logger = logging.getLogger(__name__)

AUC_OBJECTIVE = "auc"

# section -> keys, in file order; True marks mandatory keys
SECTIONS = {
    "objective": {"name": True, "dim": False, "theta0": True, "dataset": False, "n_batch": False},
    "smoother": {"kind": True, "target_ess": False},
    "schedule": {"c_beta": True, "iota": True, "c_gamma": True, "kappa": True},
    "run": {"n_iterations": True, "n_samples": True, "master_seed": True, "record_every": False, "threads": False},
    "output": {"path": True},
}

# synthetic blobs used by an auc experiment without a dataset
SYNTHETIC_P = 5
SYNTHETIC_N_DATA = 200


@dataclass(frozen=True)
class ExperimentConfig:  # pylint: disable=R0902
    """ExperimentConfig is one fully specified experiment."""

    name: str
    kind: SmootherKind
    c_beta: float
    iota: float
    c_gamma: float
    kappa: float
    n_iterations: int
    n_samples: int
    master_seed: int
    path: str
    theta0: Tuple[float, ...]
    dim: Optional[int] = None
    dataset: Optional[str] = None
    n_batch: Optional[int] = None
    target_ess: Optional[float] = None
    record_every: int = DEFAULT_RECORD_EVERY
    threads: int = DEFAULT_THREADS

    @classmethod
    def from_dict(cls, document):
        """from_dict builds a config from the sectioned mapping of a config file."""
        if not isinstance(document, dict):
            raise ConfigError("config must be a mapping of sections")
        unknown = set(document) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown sections: {sorted(unknown)}")
        values = {}
        for section, keys in SECTIONS.items():
            body = document.get(section) or {}
            if not isinstance(body, dict):
                raise ConfigError(f"section {section!r} must be a mapping")
            extra = set(body) - set(keys)
            if extra:
                raise ConfigError(f"unknown keys in {section!r}: {sorted(extra)}")
            for key, mandatory in keys.items():
                if key in body and body[key] is not None:
                    values[key] = body[key]
                elif mandatory:
                    raise ConfigError(f"missing key {section}.{key}")
        try:
            config = cls(**_coerce(values))
        except (TypeError, ValueError, OverflowError) as e:
            raise ConfigError(f"invalid config value: {e}") from e
        config.validate()
        return config

    def to_dict(self):
        """to_dict returns the sectioned mapping written by dump_config, leaving out unset optional keys."""
        flat = asdict(self)
        flat["kind"] = self.kind.value
        flat["theta0"] = list(self.theta0)
        document = {}
        for section, keys in SECTIONS.items():
            document[section] = {key: flat[key] for key in keys if flat[key] is not None}
        return document

    def validate(self):
        """Validate raises ConfigError when any value is outside its domain."""
        try:
            self.to_run_config()
        except MollifyError as e:
            raise ConfigError(str(e)) from e
        if self.name == AUC_OBJECTIVE:
            if self.n_batch is None:
                raise ConfigError("objective.n_batch is required for the auc objective")
        elif self.dataset is not None or self.n_batch is not None:
            raise ConfigError("objective.dataset and objective.n_batch only apply to the auc objective")
        if not self.theta0:
            raise ConfigError("objective.theta0 must not be empty")
        if not all(math.isfinite(x) for x in self.theta0):
            raise ConfigError("objective.theta0 must be finite")

    def to_run_config(self, threads=None):
        """to_run_config builds the RunConfig driving optimizer.run."""
        return RunConfig(
            beta=Schedule(self.c_beta, self.iota),
            gamma=Schedule(self.c_gamma, self.kappa),
            smoother=self.kind,
            n_iterations=self.n_iterations,
            n_samples=self.n_samples,
            target_ess=self.target_ess,
            master_seed=self.master_seed,
            record_every=self.record_every,
            threads=max(1, self.threads) if threads is None else threads,
        )

    def override(self, **changes):
        """Override returns a validated copy with every non-None change applied."""
        changes = {key: value for key, value in changes.items() if value is not None}
        if not changes:
            return self
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        config = type(self)(**values)
        config.validate()
        return config


_INTS = ("n_iterations", "n_samples", "master_seed", "record_every", "threads", "dim", "n_batch")
_FLOATS = ("c_beta", "iota", "c_gamma", "kappa", "target_ess")


def _coerce(values):
    for key in _INTS:
        if key in values:
            value = values[key]
            if isinstance(value, bool) or not math.isfinite(float(value)) or float(value) != int(value):
                raise ConfigError(f"{key} must be an integer, got {value!r}")
            values[key] = int(value)
    for key in _FLOATS:
        if key in values:
            values[key] = float(values[key])
    if "kind" in values:
        values["kind"] = SmootherKind.parse(values["kind"])
    if "theta0" in values:
        theta0 = values["theta0"]
        if not isinstance(theta0, (list, tuple)):
            theta0 = [theta0]
        values["theta0"] = tuple(float(x) for x in theta0)
    for key in ("name", "path", "dataset"):
        if key in values:
            values[key] = str(values[key])
    return values


def load_config(path):
    """load_config reads and validates an experiment file."""
    try:
        with open(path, encoding="utf-8") as handle:
            document = yaml.safe_load(handle)
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    config = ExperimentConfig.from_dict(document)
    logger.debug("loaded %s: %s", path, config)
    return config


def dump_config(config, path):
    """dump_config writes config so that load_config(path) == config."""
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(config.to_dict(), handle, sort_keys=False)


@dataclass
class Experiment:
    """Experiment is a config resolved into the objects optimizer.run needs."""

    config: ExperimentConfig
    objective: object
    theta0: np.ndarray
    run_config: RunConfig
    mode: Mode
    dataset: Optional[auc.Dataset] = None


def build_experiment(config):
    """build_experiment resolves the objective, starting point and run settings of config."""
    data = None
    if config.name == AUC_OBJECTIVE:
        if config.dataset is not None:
            try:
                data = auc.load_csv(config.dataset)
            except OSError as e:
                raise ConfigError(f"cannot read dataset {config.dataset}: {e}") from e
        else:
            data = auc.synthetic_blobs(SYNTHETIC_P, SYNTHETIC_N_DATA, substream(config.master_seed, 0, "noise"))
        objective = auc.auc_objective(data, config.n_batch)
    else:
        objective = get_objective(config.name, config.dim)
    if config.dim is not None and config.dim != objective.dim:
        raise ConfigError(f"objective.dim is {config.dim}, {objective.name} has dimension {objective.dim}")

    theta0 = np.array(config.theta0, dtype=float)
    if theta0.size != objective.dim:
        raise ConfigError(f"objective.theta0 has {theta0.size} entries, {objective.name} needs {objective.dim}")

    mode = Mode.DETERMINISTIC if objective.profile.deterministic else Mode.STOCHASTIC
    return Experiment(
        config=config,
        objective=objective,
        theta0=theta0,
        run_config=config.to_run_config(threads=resolve_threads(config.threads)),
        mode=mode,
        dataset=data,
    )
