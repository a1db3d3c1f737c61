"""Toolkit and service for interpretable comparative study of CNN classifiers."""

__version__ = "0.1.0"
