"""Stylistic segmentation of LLM-attributed language: word log odds + PELT thresholds."""

__version__ = "0.1.0"
