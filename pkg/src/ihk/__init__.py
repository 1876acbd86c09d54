"""Desk-scale synthetic human dataset pipeline and toy 3D avatar generators."""

__version__ = "0.1.0"
