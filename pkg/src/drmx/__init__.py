"""Relational features, a neural classifier over them, and local symbolic explanations."""

from importlib import resources

__version__ = "0.1.0"


def data_path(*parts: str):
    """Path of a bundled data file, e.g. ``data_path("trains", "trains.pl")``."""
    return resources.files(__name__).joinpath("data", *parts)
