"""Glued constant-length S-adic subshifts: measures and partial rigidity rates."""

__version__ = "0.1.0"
