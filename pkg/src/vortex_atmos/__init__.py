"""Stream functions, vortex domains and atmospheres of traveling vortex dipoles and rings.

Modules:

- ``kernels``: ring and dipole Green's functions and their derivatives;
- ``quadrature``: panel quadrature of singular kernels over polar/rectangular regions;
- ``field``: vorticity primitives, Steiner checks, steadiness residual and speed calibration;
- ``stream``: stream function, velocity, on-axis speed and decay probes;
- ``domain``: classification and extraction of the vortex domain as a superlevel set;
- ``tracer``: moving-frame streamlines, escape checks and invariance Monte-Carlo;
- ``cli``: the ``vortex-atmos`` command.
"""
__version__ = "0.1.0"

from .domain import (LEMNISCATE, OVAL, SPHEROID, TOROID, DomainResult, classify,  # noqa: E402
                     extract_domain)
from .field import (GaussianPair, GaussianRing, Gridded, HillBall, LambDipole, PatchPair,  # noqa: E402
                    TravelingVortex, calibrate_speed, check_steiner, spec_from_dict, steadiness_residual)
from .stream import StreamSolver  # noqa: E402
from .tracer import QuadratureField, SplineField, trace, verify_domain_invariance, verify_escape  # noqa: E402

__all__ = [
    "LEMNISCATE", "OVAL", "SPHEROID", "TOROID", "DomainResult", "classify", "extract_domain",
    "GaussianPair", "GaussianRing", "Gridded", "HillBall", "LambDipole", "PatchPair", "TravelingVortex",
    "calibrate_speed", "check_steiner", "spec_from_dict", "steadiness_residual", "StreamSolver",
    "QuadratureField", "SplineField", "trace", "verify_domain_invariance", "verify_escape",
]
