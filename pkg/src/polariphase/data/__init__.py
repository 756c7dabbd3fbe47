"""Bundled example configurations and published reference tables."""

from importlib import resources
from pathlib import Path

__all__ = ["data_path"]


def data_path(name: str) -> Path:
    """Filesystem path of a bundled data file."""
    return Path(resources.files(__package__) / name)
