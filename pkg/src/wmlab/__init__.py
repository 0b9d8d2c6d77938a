"""Blind image watermarking codecs, an untrained-CNN removal attack, and
an evaluation harness for measuring evasion/quality trade-offs."""

__version__ = "0.1.0"
