"""Exact computation with affine pseudo-Anosov maps on half-translation
surfaces: number fields, flat surfaces, saddle connections, veering
triangulations, fixed-point counts, and annular coordinates."""

__version__ = "0.1.0"
