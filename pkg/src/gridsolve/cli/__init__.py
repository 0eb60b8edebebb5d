"""Command-line interface: ``gridsolve solve | bench | gen``."""

from gridsolve.cli.main import build_parser, main

__all__ = ["build_parser", "main"]
