"""Zonal travel cost valuation of recreation sites."""

__version__ = "0.1.0"
