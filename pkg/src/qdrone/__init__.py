"""Drone-based entanglement distribution: CHSH statistics, link budgets, APT and relay planning."""

__version__ = "0.1.0"
