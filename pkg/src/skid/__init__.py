"""Distributed multi-robot LiDAR SLAM backend, simulator, and evaluation tools."""

__version__ = "0.1.0"
