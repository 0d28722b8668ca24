"""
Version information for fedmom.
"""

__version__ = "0.3.0"
__license__ = "MIT"
__description__ = "Federated learning simulator comparing FedAvg, momentum FL and reversed-momentum FL"

# Version history
VERSIONS = {
    "0.3.0": "Gradient-divergence diagnostics, resumable sweeps",
    "0.2.0": "Reversed momentum aggregation and macro F1 summaries",
    "0.1.0": "Initial release: FedAvg and momentum FL on MNIST",
}
