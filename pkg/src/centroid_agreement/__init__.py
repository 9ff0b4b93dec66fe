"""Simulator and analysis harness for multidimensional Byzantine approximate agreement."""

__version__ = "0.1.0"
