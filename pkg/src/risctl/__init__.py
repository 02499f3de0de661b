"""Predictive ON-OFF control of multiple RISs in an uplink network.

Subpackages map to the building blocks of the simulator: geometry, channel
draws, RIS phase codebooks, SINR evaluation, ON-OFF control strategies,
trajectory data handling, the LSTM predictor and the frame loop.
"""

__version__ = "0.1.0"
