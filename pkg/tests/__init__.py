"""Tests for gridsolve."""
