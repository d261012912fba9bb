"""Numerics for SDEs driven by multivariate alpha-stable noise with singular drift.

Modules
-------
stable_law   spectral laws, characteristic exponent, radial oracle
heat_kernel  FFT heat kernel with truncation diagnostics
generator    nonlocal generator by radial quadrature
drift        singular drifts, mixed norms, admissibility, mollification
resolvent    space-time resolvent and its constants
series       drift perturbation series
simulate     stable sampler, Euler scheme, Monte Carlo comparisons
cli          scenario-driven command line
"""

__version__ = "0.1.0"

from .stable_law import SpectralAtom, StableLaw, characteristic_exponent, four_atom_law, validate
from .lattice import Lattice, SpaceTimeField
from .heat_kernel import KernelGrid, build_kernel, density_at
from .drift import DriftField, MollifiedDrift, check_admissible, mixed_norm, mollify
from .resolvent import ResolventParams, apply_resolvent
from .series import evaluate_series, lambda_threshold
from .simulate import SimConfig, euler_paths, sample_stable_increment

__all__ = [
    "SpectralAtom",
    "StableLaw",
    "characteristic_exponent",
    "four_atom_law",
    "validate",
    "Lattice",
    "SpaceTimeField",
    "KernelGrid",
    "build_kernel",
    "density_at",
    "DriftField",
    "MollifiedDrift",
    "check_admissible",
    "mixed_norm",
    "mollify",
    "ResolventParams",
    "apply_resolvent",
    "evaluate_series",
    "lambda_threshold",
    "SimConfig",
    "euler_paths",
    "sample_stable_increment",
]
