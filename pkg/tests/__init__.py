"""
Test package for the narrowband sweeper receiver simulator.
"""
