"""memkernel: Dirichlet problems for a parabolic operator with exponential
memory, the Josephson-junction mapping, and the verification oracles that
pin both down.
"""

from .kernel import (
    OperatorParams,
    SeriesControl,
    e_of_t,
    eval_k,
    eval_k1,
    eval_kx,
    laplace_check,
)
from .special_functions import bessel_j, bessel_j0, bessel_j1

__version__ = "0.1.0"
