"""Planar rigid two-ellipsoid spin-orbit and spin-spin dynamics."""

__version__ = "0.1.0"
