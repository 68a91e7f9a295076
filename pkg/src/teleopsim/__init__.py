"""Deterministic bilateral teleoperation simulator.

A simulated replica manipulator under a passive fractal impedance controller
is driven from a simulated master device through a communication channel with
configurable delay and sampling rate. The package ships the controllers, the
rigid body dynamics, the channel and contact models, scripted operator
protocols, offline analysis of the recorded logs, and a FastAPI service with
a live WebSocket session for an interactive operator console.
"""

__version__ = "0.1.0"
