"""Command-line surface of veriprop."""

from .main import build_parser, main

__all__ = ["build_parser", "main"]
