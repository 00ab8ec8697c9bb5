"""Large-deviations laboratory for moments of random-matrix spectral measures.

Samples Wigner matrices (Gaussian and stretched-exponential-tail entries)
and log-gas ensembles, evaluates closed-form rate functions and speeds,
solves the sparse variational problem behind the heavy-tail rate constant,
and estimates rare-event probabilities with planted-spike importance
sampling.
"""

__version__ = "0.1.0"

from .matcore import HermMatrix, eigvals, trace_power, normalized_trace_power
from .randsrc import GaussianProfile, TailProfile
from .loggas import Potential
from .rates import RateSpec, catalan, semicircle_moment

__all__ = [
    "HermMatrix",
    "eigvals",
    "trace_power",
    "normalized_trace_power",
    "GaussianProfile",
    "TailProfile",
    "Potential",
    "RateSpec",
    "catalan",
    "semicircle_moment",
    "__version__",
]
