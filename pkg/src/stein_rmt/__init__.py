"""Verification toolkit for spectral statistics of circular ensembles.

Samplers for Haar-unitary spectra, circular beta ensembles and the uniform
sphere; diffusion perturbations producing continuous exchangeable pairs;
power-sum operator identities with exact Haar moment oracles; a numerical
solver for the mean-one exponential Stein equation; closed-form distance
bounds; and rigorous empirical distance estimators.  The command-line entry
point ``stein-rmt`` binds these into reproducible experiments.
"""

__version__ = "0.1.0"

from . import bounds, conditions, diffusion, ensembles, metrics, powersums, stein
from .kernels import BACKEND as kernel_backend

__all__ = [
    "__version__",
    "bounds",
    "conditions",
    "diffusion",
    "ensembles",
    "metrics",
    "powersums",
    "stein",
    "kernel_backend",
]
