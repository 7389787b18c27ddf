"""Image and shape compression with overfit coordinate networks."""

__version__ = "0.1.0"
