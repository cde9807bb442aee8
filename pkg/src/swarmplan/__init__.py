"""Entropy-adaptive PSO trajectory planning and GA task allocation for UAV swarms."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
