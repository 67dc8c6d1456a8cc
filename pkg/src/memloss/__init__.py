"""Simulation laboratory for memory loss in noisy Clifford circuits with resets."""
