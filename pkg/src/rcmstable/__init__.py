"""Random conductance models with stable-like long-range jumps.

Simulation (exact-law continuous-time walks via envelope thinning), exact
windowed computation (heat kernels, exit laws, entropy profiles,
oscillation recursion), reference stable laws, structural-condition
verification, and reproducible experiment campaigns.
"""

__version__ = "0.1.0"

from .environment import (ConductanceField, ConstantLaw, FiniteMixtureLaw,
                          FourAtomLaw, LocalizedField,
                          validate_moment_exponents)
from .lattice import (LatticeSpec, VertexMeasure, ball, distance,
                      full_lattice, gasket, half_space)
from .stable import StableLaw, cdf_1d, limit_scale_constant, sample_1d
from .walker import JumpSampler, PathSample, ProcessSpec, simulate_path

__all__ = [
    "ConductanceField", "ConstantLaw", "FiniteMixtureLaw", "FourAtomLaw",
    "JumpSampler", "LatticeSpec", "LocalizedField", "PathSample",
    "ProcessSpec", "StableLaw", "VertexMeasure", "ball", "cdf_1d",
    "distance", "full_lattice", "gasket", "half_space",
    "limit_scale_constant", "sample_1d", "simulate_path",
    "validate_moment_exponents", "__version__",
]
