"""Quality classifiers for open-source repository metadata."""

__version__ = "0.1.0"
