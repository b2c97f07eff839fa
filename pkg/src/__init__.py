"""NAIFS Pressure Forge: topological pressure estimators for non-autonomous IFSs."""

__version__ = "0.3.0"
