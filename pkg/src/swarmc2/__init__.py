"""Desk-scale swarm command-and-control ecosystem."""

__version__ = "0.1.0"
