"""Proof-of-work mining arena.

Monte Carlo simulation of honest and selfish block mining, empirical
normal-form games over strategy choices, and grid sweeps that locate power
thresholds and safety levels.
"""

__version__ = "0.1.0"
