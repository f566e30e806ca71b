"""Annealing laboratory for binary perceptron problems.

Compares path-integral (Suzuki-Trotter) quantum annealing, classical
simulated annealing, replica-theory predictions, belief-propagation landscape
probes and exact real-time Schrodinger evolution on the same instances.
"""

from .backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
