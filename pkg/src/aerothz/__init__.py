"""Simulator and estimation toolkit for THz ultra-massive-MIMO LoS
aeronautical links: triple delay-beam-Doppler squint channel model, grouped
true-time-delay compensation, subspace parameter estimation and tracking,
and the matching Cramer-Rao bounds."""

from .codec import BACKEND as codec_backend

__version__ = "0.1.0"
__all__ = ["codec_backend", "__version__"]
