"""Bundled scenario documents (JSON)."""
