"""Concurrence of a two-qubit pure state from one ancilla observable.

Gate-level protocol (:mod:`.gate_model`), trapped-ion pulse simulation
(:mod:`.ion`), shot-noise estimation (:mod:`.estimator`) and a CLI (:mod:`.cli`).
"""

__version__ = "0.1.0"
