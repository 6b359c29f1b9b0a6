"""Majorana pi-junction chains and qubit decoherence by bosonic baths."""

__version__ = "0.1.0"
