"""oqsim: few-qubit open-quantum-system channels, circuits, and experiments."""

__version__ = "0.1.0"

from . import analysis, channels, circuits, decomp, states, tomography

__all__ = ["analysis", "channels", "circuits", "decomp", "states", "tomography", "__version__"]
