"""Greenhouse lighting MPC: climate and load simulation, billing, forecasting."""
__version__ = "0.1.0"
