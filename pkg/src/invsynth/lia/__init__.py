"""Bundled quantifier-free linear integer arithmetic solver.

Runs as a subprocess speaking an SMT-LIB v2 subset over stdin/stdout
(``python -m invsynth.lia``); the engine talks to it exactly as it would to
any external solver binary.
"""

from .theory import TheoryResult, check_atoms

__all__ = ["TheoryResult", "check_atoms"]
