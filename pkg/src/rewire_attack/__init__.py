"""Black-box rewiring attacks on GCN graph classifiers, with spectral analysis tools."""

__version__ = "0.1.0"
