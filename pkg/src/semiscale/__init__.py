"""Semifield scale-spaces, their convolutions and PDE-CNN layers built from them."""
from .kernels import KernelSpec, SampledKernel, kernel_value, sample_kernel
from .semiconv import convolve
from .semifield import Linear, Log, Root, TropicalMax, TropicalMin, parse_semifield

__version__ = "0.1.0"

__all__ = [
    "KernelSpec",
    "SampledKernel",
    "kernel_value",
    "sample_kernel",
    "convolve",
    "Linear",
    "Root",
    "Log",
    "TropicalMax",
    "TropicalMin",
    "parse_semifield",
]
