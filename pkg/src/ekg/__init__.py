"""Event knowledge graphs: multi-entity event tables as labeled property graphs."""

from ekg.store import LabeledPropertyGraph, Node, Relationship
from ekg.values import Timestamp

__all__ = ["LabeledPropertyGraph", "Node", "Relationship", "Timestamp"]
__version__ = "0.1.0"
