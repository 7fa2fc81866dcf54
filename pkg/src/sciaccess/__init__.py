"""Accessible HTML renders of scientific papers, plus the measurement tools around them."""

__version__ = "0.1.0"
