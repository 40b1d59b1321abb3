"""
phonocav: phonon-coupled emitter-cavity dynamics and emission spectra.

Four perturbative master equations (weak, polaron, variational polaron,
polariton-polaron), a small exact reference, and a batch sweep runner.
"""

from __future__ import annotations

__version__ = "0.1.0"
