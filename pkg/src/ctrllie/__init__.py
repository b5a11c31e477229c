"""Secondary-distribution analysis of real-analytic control systems."""

__version__ = "0.1.0"
