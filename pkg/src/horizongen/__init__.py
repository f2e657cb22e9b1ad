"""Planning invariance and horizon generalization in tabular gridworlds."""

__version__ = "0.1.0"
