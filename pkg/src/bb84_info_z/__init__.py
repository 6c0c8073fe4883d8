"""Simulation and verification toolkit for the BB84-INFO-z protocol under collective attacks."""

__version__ = "0.1.0"
