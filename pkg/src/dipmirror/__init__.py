"""Collective spontaneous decay of point emitters near a charged perfect mirror."""

__version__ = "0.1.0"
