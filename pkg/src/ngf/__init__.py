"""Neural Galerkin filtering: joint state and parameter estimation for evolution equations."""

__version__ = "0.1.0"
