"""Nested coset codes for multiple access channels with distributed states."""

__version__ = "0.1.0"
