"""Rational synthesis on stochastic multiplayer games."""
