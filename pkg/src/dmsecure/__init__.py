"""Directional-modulation secure transceiver simulator.

Receive phase: DOA measurement (Capon, MUSIC, Root-MUSIC) and Bayesian
learning of the measurement error.  Transmit phase: matched-filter
precoding, null-space artificial noise, power allocation and secrecy rate,
plus range-angle focused transmission with random subcarrier selection.
"""

__version__ = "0.1.0"
