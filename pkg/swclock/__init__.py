# swclock - Salecker-Wigner clock readout simulator

__version__ = "0.1.0"
