"""veridyn: observer-coupled fixed-point dynamics, checked at desk scale.

Two concrete semantics back one framework: finite sets with total maps
for the categorical layer (functor squares, verification limits, phase
symmetries) and dense real matrices for the dynamical layer (cascade
spectra, stability, bifurcation sweeps).  Every claim the library makes
is decided by enumeration or re-verified numerically.
"""

__version__ = "0.1.0"

from .errors import VeridynError  # noqa: F401
