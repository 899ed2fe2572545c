"""One-shot quantum information laboratory.

Exact, small-dimension implementations of hypothesis-testing divergences,
projector unions via two-projector block decompositions, position-based
decoding for entanglement-assisted compound-channel codes, and finite-set
composite hypothesis testing — each paired with an independent numerical
oracle.
"""

__version__ = "0.1.0"
