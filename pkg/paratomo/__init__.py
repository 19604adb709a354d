# paratomo/__init__.py
"""Compressed-sensing tomography of parametrized quantum states."""

__version__ = "1.0.0"
