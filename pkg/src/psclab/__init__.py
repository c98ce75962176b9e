"""psclab: desk-scale numerics for positive-scalar-curvature deformations."""

__version__ = "0.1.0"
