"""Exact formal germ dynamics, twisted surface cohomology and formal foliations."""

__version__ = "0.1.0"
