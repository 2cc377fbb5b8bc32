"""Evaluate, invert and brute-force check the guarantees a trace-distance
criterion ``d <= eps`` gives against a key-guessing eavesdropper."""

__version__ = "0.1.0"
