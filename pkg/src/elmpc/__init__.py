"""MPC path tracking with a learned feedforward compensator.

A linear time-varying MPC steers a bicycle-model vehicle along a reference
path. An extreme learning machine trained on logged one-step prediction
errors estimates the next error, and a PID feedforward term driven by that
estimate is added to the MPC steering command.
"""

__version__ = "0.1.0"
