"""Inverse participation ratio of Laplacian eigenvectors on random regular graphs."""

__version__ = "0.1.0"
