"""Classical laboratory for Grover-mixer QAOA on 3-SAT and Max-SAT."""

__version__ = "0.1.0"
