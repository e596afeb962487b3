"""Desk-scale design toolkit for industrial CO2 capture, transport, and storage hubs."""

__version__ = "0.1.0"
