"""Projective-geometry coded caching toolkit."""
