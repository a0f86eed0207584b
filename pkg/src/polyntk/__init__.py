"""Neural tangent kernels of polynomial (Hadamard-product) networks."""

__version__ = "0.1.0"
