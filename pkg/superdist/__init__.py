"""
Superdist: superdistribution of digital goods

A Python package that models content distribution overlays, the two-licence
information model, multi-level remuneration markets and the licence-chain
protocols that let buyers resell a digital good to further legitimate buyers.
"""

__version__ = "0.1.0"
__author__ = "Superdist Contributors"

__all__ = [
    "__version__",
]
