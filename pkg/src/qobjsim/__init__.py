"""Desk-scale emulator for Qobj jobs at gate and pulse level."""

__version__ = "0.1.0"
