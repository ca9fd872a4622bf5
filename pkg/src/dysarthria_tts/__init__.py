"""Severity-conditioned synthesis and evaluation tools for dysarthric-speech augmentation."""

__version__ = "0.1.0"
