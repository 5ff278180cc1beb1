"""Heuristic search laboratory: A*, maze and Sokoban domains, and L2 / L* heuristic training."""

__version__ = "0.1.0"
