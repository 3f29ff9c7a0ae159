"""Desk-scale simulation of BB84 and E91 key distribution with randomness validation."""

__version__ = "0.1.0"
