"""Numerics for broadcasting on hypertrees (BOHT) and hypergraph stochastic block models.

Submodules
----------
bms
    BMS channels as finite BSC mixtures, information measures, star-convolution.
kernels
    Broadcast kernels, the per-hyperedge BP update, HSBM parameter algebra.
contraction
    chi^2 and SKL multi-terminal contraction coefficients.
density_evolution
    Population dynamics, exact quantized density evolution, tree sampling.
gaussian
    Large-degree Gaussian approximation of the chi^2 recursion.
hsbm
    HSBM sampling and neighborhood statistics.
"""

from . import bms, contraction, density_evolution, gaussian, hsbm, kernels
from .bms import BmsChannel, capacity, chi2_capacity, identity, make_bsc, skl_capacity, star_convolve, trivial
from .errors import ConvergenceError, DomainError, ResourceError
from .kernels import HyperedgeKernel, b_r_lambda, hsbm_params, hyperedge_bp, params_to_ab

__version__ = "0.1.0"
