"""Desk-scale simulator of ground-mode computation with static (symmetry) gates."""

__version__ = "0.1.0"
