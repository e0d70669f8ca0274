"""Graph-enhanced tensor-network states: MPS, tree states, weighted graph
states and their combination, with exact dense reference routines."""

__version__ = "0.1.0"
