"""Elliptic hypergeometric series engine and identity verification harness."""
from .numerics import DOUBLE, DOUBLE_DOUBLE, DDComplex, PrecisionContext, SamplerConfig, Tier
from .theta import EllipticBase, poch, theta
from .series import MixedSeriesSpec, eval_mixed, eval_phi, eval_V, eval_W

__version__ = "0.1.0"

__all__ = [
    "DDComplex", "DOUBLE", "DOUBLE_DOUBLE", "EllipticBase", "MixedSeriesSpec", "PrecisionContext",
    "SamplerConfig", "Tier", "eval_V", "eval_W", "eval_mixed", "eval_phi", "poch", "theta",
]
