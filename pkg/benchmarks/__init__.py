"""
Benchmarking suite for fedmom.

Modules:
    - reproduction: long-running reproduction checks (MNIST, synthetic, divergence)
"""
