"""
Narrowband sweeper receiver simulator.
Compares a stepped narrowband receiver with a wideband envelope detector for
recovering a radar antenna pattern during a flyover.
"""

__version__ = "0.1.0"
