"""Benchmark geometry, exact fields, error norms, and study drivers."""
