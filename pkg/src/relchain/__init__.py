"""relchain: a BFT-replicated relational database with a benchmark harness.

A network of virtual nodes agrees on blocks of SQL transactions via a
Tendermint-style consensus and executes them in a deterministic relational
engine, one database transaction per block.
"""

__version__ = "0.1.0"
