"""Kink solitons in microtubule protofilaments and cavity-QED coherence estimates."""

__version__ = "0.1.0"
