"""Compressed-domain preprocessing: JPEG to DCT tensors, channel reduction,
network cost accounting and preprocessing benchmarks."""

__version__ = "0.1.0"
