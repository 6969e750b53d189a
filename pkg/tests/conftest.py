"""Keeps the tests directory importable so shared helpers resolve by name."""
