"""Spectral solver for a one-parameter family of Dirac bag operators on
bounded 3D domains (the tau=0 member is the MIT bag model).

Two solver routes are provided:

* exact Bessel-based eigenvalue curves on a ball (`diracbag.ball`),
* a boundary-integral Nystrom solver on general smooth closed surfaces
  (`diracbag.layerops`, `diracbag.bie`), with Hardy-space projections
  (`diracbag.hardy`) and Rayleigh-quotient shape diagnostics
  (`diracbag.rayleigh`).

Hot pairwise kernels are numba-compiled by default; set
``DIRACBAG_BACKEND=numpy`` to force the pure-numpy fallback.
"""

from .halfint import HalfInt
from .bessel import bessel_j_half, bessel_ratio, bessel_zero, BesselZeroTable
from .ball import BallModel, ChannelIndex, EigenCurveSample
from .surface import QuadratureSurface, make_sphere, make_ellipsoid

__all__ = [
    "HalfInt",
    "BallModel",
    "BesselZeroTable",
    "ChannelIndex",
    "EigenCurveSample",
    "QuadratureSurface",
    "bessel_j_half",
    "bessel_ratio",
    "bessel_zero",
    "make_ellipsoid",
    "make_sphere",
]

__version__ = "0.1.0"
