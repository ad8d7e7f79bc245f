"""Source-to-source reverse-mode differentiation for a small array language."""

__version__ = "0.1.0"
