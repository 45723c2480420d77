"""Context-aware policy engine over an IoBT knowledge graph, with a simulated testbed."""

__version__ = "0.1.0"
