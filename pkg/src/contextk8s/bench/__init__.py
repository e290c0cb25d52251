"""Seed corpus and experiment harness."""
