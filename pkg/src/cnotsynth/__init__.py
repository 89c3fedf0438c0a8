"""Verification and CNOT-count synthesis for the simplified Toffoli gate."""

__version__ = "0.1.0"
