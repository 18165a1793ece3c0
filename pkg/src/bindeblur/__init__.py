"""Exact recovery of binary matrices from a low-frequency band of their 2-D DFT."""
from ._core import BACKEND
from .errors import (BandOutOfRange, BinDeblurError, DependentBasis, IncompleteBand, ParseError,
                     TooLarge, UnstableCoarseSolve, UnsupportedDims, ZeroDirection)
from .feasibility import IntegerSystem, SearchBudget, solve_feasibility
from .lattice import LatticeBasis, SolverConfig, lll_reduce, solve_integer_system
from .oracle import Exhaustive, Sampled, audit_uniqueness, brute_force_recover, counterexample_pair
from .reconstruction import (BandPolicy, NoiseModel, RecoveryReport, RecoveryStatus, minimal_band,
                             recover)
from .spectral import (Band, BandedSpectrum, BinaryMatrix, add_noise, blur, dft_forward,
                       dft_inverse, dft_on)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Band", "BandOutOfRange", "BandPolicy", "BandedSpectrum", "BinDeblurError",
    "BinaryMatrix", "DependentBasis", "Exhaustive", "IncompleteBand", "IntegerSystem",
    "LatticeBasis", "NoiseModel", "ParseError", "RecoveryReport", "RecoveryStatus", "Sampled",
    "SearchBudget", "SolverConfig", "TooLarge", "UnstableCoarseSolve", "UnsupportedDims",
    "ZeroDirection", "add_noise", "audit_uniqueness", "blur", "brute_force_recover",
    "counterexample_pair", "dft_forward", "dft_inverse", "dft_on", "lll_reduce", "minimal_band",
    "recover", "solve_feasibility", "solve_integer_system",
]
