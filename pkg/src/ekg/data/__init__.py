"""Bundled sample data: the ten-event loan application table and its derivation config."""

from importlib.resources import files


def sample_csv():
    return files(__name__) / "sample.csv"


def sample_config():
    return files(__name__) / "sample.json"
