"""Simulation and calibration of stretch-induced conduction deficit in myelinated nerve."""

__version__ = "0.1.0"
