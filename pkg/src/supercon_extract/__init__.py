"""Extraction of superconductor materials and properties from text."""

__version__ = "0.1.0"
