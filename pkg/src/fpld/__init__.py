"""Numerical laboratory for low-degree and Franz-Parisi hardness criteria.

Submodules:

* :mod:`fpld.priors` -- signal priors and overlap laws
* :mod:`fpld.criteria` -- LD, FP, LO, chi^2+1 and their equivalence checks
* :mod:`fpld.hermite` -- Hermite projection oracle
* :mod:`fpld.potential` -- annealed spiked-Wigner potential
* :mod:`fpld.boolean` -- Boolean-hypercube models
* :mod:`fpld.mcmc` -- Gibbs systems and Delta-local chains
* :mod:`fpld.sparsereg` -- sparse linear regression detection and recovery
"""

__version__ = "0.1.0"
