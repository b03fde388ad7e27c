"""Explainable occupation similarity from occupation/skill bipartite graphs."""

__version__ = "0.1.0"
