"""Over-the-air statistical estimation over a Gaussian MAC with mutual-information privacy."""

__version__ = "0.1.0"
