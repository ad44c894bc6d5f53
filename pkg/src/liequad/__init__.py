"""Simulation and verification toolkit for sub-Riemannian Lie quadratics in su(2)."""
