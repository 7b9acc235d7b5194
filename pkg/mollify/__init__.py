"""Gradient-free optimisation of noisy and discontinuous objectives through Gaussian smoothing."""

from importlib import metadata

try:
    __version__ = metadata.version(__name__)
except metadata.PackageNotFoundError:
    # running from a source checkout
    __version__ = "0.0.0"
