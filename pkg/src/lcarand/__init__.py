"""Randomization of measures by linear cellular automata over (Z/p)^s.

Submodules:

``lucas``       base-p digits, Lucas binomials and sets, Cesaro densities
``lca``         automata as sparse Laurent polynomials; fast powers; windows
``characters``  finite-support characters, pullbacks and dilations
``measures``    Markov, quasi-Markov and IRDI models with exact expectations
``randomlab``   spectral trajectories and randomization diagnostics
``cli``         command-line front end
"""

from .characters import Character, dilate, evaluate, ldm, parse_character, pullback
from .lca import LcaPolynomial, Window, apply, classify_bipartite, parse_lca, power_fast, power_naive
from .lucas import in_J, lucas_binomial, lucas_set, p_ary_digits

__version__ = "0.1.0"

__all__ = [
    "Character",
    "LcaPolynomial",
    "Window",
    "__version__",
    "apply",
    "classify_bipartite",
    "dilate",
    "evaluate",
    "in_J",
    "ldm",
    "lucas_binomial",
    "lucas_set",
    "p_ary_digits",
    "parse_character",
    "parse_lca",
    "power_fast",
    "power_naive",
    "pullback",
]
