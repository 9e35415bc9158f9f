"""curtainlab: curtain hyperbolic models and random-walk limit laws on
concrete CAT(0) model spaces, with reproducible desk-scale experiments."""

__version__ = "0.1.0"

from . import curtains, geometry, limitlaws, walker  # noqa: F401,E402
