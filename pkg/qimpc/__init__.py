"""
Quantum-inspired model predictive control: a statevector simulator, variational
control circuits, benchmark plants and the online training loop that ties them
together.
"""

__version__ = "0.1.0"
