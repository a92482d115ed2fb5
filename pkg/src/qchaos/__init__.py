"""Numerical diagnostics of quantum chaos: Loschmidt echo, OTOCs and Krylov complexity
on the quantized cat map, the kicked Ising chain and GOE matrices."""

__version__ = "0.1.0"
