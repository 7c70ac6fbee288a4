"""Numerical laboratory for entropy of diagonal harmonic metrics on cyclic Higgs bundles.

Submodules
----------
shannon   finite-distribution entropy and ratio domination
spectrum  Cartan spectra, the beta ensemble and its large-rank asymptotics
weights   r-differentials, subharmonic weights and their mollification
toda      finite-difference Toda system, extremal solutions, inequality checks
cli       batch experiment runner
"""

__version__ = "0.1.0"
