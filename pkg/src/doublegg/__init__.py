"""Bit-error-rate analysis of free-space optical links over Double GG turbulence."""

from .channel import DoubleGGParams, GenGammaParams, preset, special_case
from .ber_numeric import BerCurve, LinkConfig

__all__ = ["DoubleGGParams", "GenGammaParams", "preset", "special_case", "BerCurve", "LinkConfig"]
__version__ = "0.1.0"
