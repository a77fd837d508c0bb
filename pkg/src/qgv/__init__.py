"""Quantum gate verification and process-tomography baseline, simulated at desk scale."""

__version__ = "0.1.0"
