"""Witness synthesis and measurement planning for sqrt-SWAP coupled
singlet chains: exact Pauli algebra, generalized stabilizers, settings
covers, noise tolerance, and budget-constrained search."""

__version__ = "0.1.0"
