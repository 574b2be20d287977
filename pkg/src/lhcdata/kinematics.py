r"""Four-vector algebra and derived observables.

Conventions
-----------
Natural units (c = 1), energies and momenta in GeV, angles in radians.
The z axis runs along the beam, ``phi`` is the azimuth in the transverse
plane measured from the x axis and ``eta`` is the pseudorapidity
:math:`\eta = -\ln\tan(\theta/2)`.

Momentum components follow the universal collider convention

.. math::

    p_x = p_T\cos\phi,\quad p_y = p_T\sin\phi,\quad
    p_z = p_T\sinh\eta = p_T/\tan\theta,\quad E = \sqrt{p_T^2\cosh^2\eta + m^2}.

Some introductory texts print :math:`p_x = p_T\sin\phi`,
:math:`p_y = p_T\cos\phi` and :math:`p_z = p_T\tan\theta`.  The first two
only mirror the azimuth, so masses, :math:`\Delta R` and the MET magnitude
are unchanged; the third is not dimensionally consistent with the others.
This module uses the standard form throughout.

Every function accepts Python floats or numpy arrays (broadcast
elementwise), so the same code path serves single particles and whole
fuzzing batches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, NonPhysical

__all__ = [
    "NORM_EPS",
    "FourVector",
    "TransverseVector",
    "eta_from_theta",
    "theta_from_eta",
    "from_pt_eta_phi_mass",
    "add",
    "invariant_mass",
    "rest_mass",
    "minkowski_norm_sq",
    "delta_phi",
    "delta_r",
    "rotate_z",
    "boost_z",
    "met_from_objects",
    "track_isolation",
    "relative_isolation",
]

#: Absolute slack (GeV^2) tolerated on a negative Minkowski norm squared.
NORM_EPS = 1e-6

# Float64 cannot resolve m^2 below ~eps*E^2, so the slack grows with energy
# once E exceeds a few 10^4 GeV.
_NORM_REL = 16 * np.finfo(float).eps

_TWO_PI = 2.0 * math.pi


def _scalar_or_array(x):
    x = np.asarray(x, dtype=float)
    return x.item() if x.ndim == 0 else x


@dataclass(frozen=True)
class FourVector:
    """Energy-momentum four-vector ``(e, px, py, pz)`` in GeV."""

    e: float
    px: float
    py: float
    pz: float

    def __add__(self, other: "FourVector") -> "FourVector":
        return add(self, other)

    @property
    def pt(self):
        return _scalar_or_array(np.sqrt(np.square(self.px) + np.square(self.py)))

    @property
    def p(self):
        return _scalar_or_array(
            np.sqrt(np.square(self.px) + np.square(self.py) + np.square(self.pz))
        )

    @property
    def phi(self):
        return _scalar_or_array(np.arctan2(self.py, self.px))

    @property
    def eta(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return _scalar_or_array(np.arcsinh(np.asarray(self.pz) / self.pt))

    @property
    def rapidity(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return _scalar_or_array(
                0.5 * np.log((np.asarray(self.e) + self.pz) / (np.asarray(self.e) - self.pz))
            )

    @property
    def mass(self):
        return rest_mass(self)

    def reversed_momentum(self) -> "FourVector":
        """Same energy, three-momentum flipped (the back-to-back partner)."""
        flip = lambda x: _scalar_or_array(-np.asarray(x, dtype=float))  # noqa: E731
        return FourVector(self.e, flip(self.px), flip(self.py), flip(self.pz))

    def as_array(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(self.e, self.px, self.py, self.pz), axis=-1)


@dataclass(frozen=True)
class TransverseVector:
    """Transverse energy (or momentum) vector ``(ex, ey)`` in GeV."""

    ex: float
    ey: float

    @classmethod
    def from_pt_phi(cls, pt, phi) -> "TransverseVector":
        return cls(_scalar_or_array(pt * np.cos(phi)), _scalar_or_array(pt * np.sin(phi)))

    def __add__(self, other: "TransverseVector") -> "TransverseVector":
        return TransverseVector(self.ex + other.ex, self.ey + other.ey)

    def __neg__(self) -> "TransverseVector":
        return TransverseVector(-self.ex, -self.ey)

    @property
    def magnitude(self):
        return _scalar_or_array(np.sqrt(np.square(self.ex) + np.square(self.ey)))

    @property
    def phi(self):
        return _scalar_or_array(np.arctan2(self.ey, self.ex))


# --------------------------------------------------------------------------
# angles
# --------------------------------------------------------------------------


def eta_from_theta(theta):
    """Pseudorapidity of a polar angle ``theta`` in the open interval (0, pi).

    Evaluated as ``asinh(cot(theta))`` with the cotangent taken from
    whichever of ``1/tan(theta)``, ``tan(pi/2 - theta)`` or
    ``-1/tan(pi - theta)`` is well conditioned, so ``theta = pi/2`` gives
    exactly 0 and both tails keep full relative precision.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(th)) or np.any(th <= 0.0) or np.any(th >= math.pi):
        raise DomainError("theta must lie in the open interval (0, pi)")
    quarter = math.pi / 4
    with np.errstate(divide="ignore"):
        cot = np.where(
            th <= quarter,
            1.0 / np.tan(th),
            np.where(th >= 3 * quarter, -1.0 / np.tan(math.pi - th), np.tan(math.pi / 2 - th)),
        )
    return _scalar_or_array(np.arcsinh(cot))


def theta_from_eta(eta):
    """Polar angle in radians for pseudorapidity ``eta``: ``2 atan(exp(-eta))``."""
    return _scalar_or_array(2.0 * np.arctan(np.exp(-np.asarray(eta, dtype=float))))


def delta_phi(phi1, phi2):
    """Azimuthal difference ``phi1 - phi2`` wrapped into (-pi, pi]."""
    d = np.asarray(phi1, dtype=float) - np.asarray(phi2, dtype=float)
    d = d - _TWO_PI * np.floor((d + math.pi) / _TWO_PI)
    # floor-wrapping lands on [-pi, pi); move the closed end to +pi
    d = np.where(d <= -math.pi, d + _TWO_PI, d)
    return _scalar_or_array(d)


def delta_r(eta1, phi1, eta2, phi2):
    """Angular distance ``sqrt(deta^2 + dphi^2)`` with dphi wrapped."""
    deta = np.asarray(eta1, dtype=float) - np.asarray(eta2, dtype=float)
    dphi = delta_phi(phi1, phi2)
    return _scalar_or_array(np.sqrt(deta * deta + np.square(dphi)))


# --------------------------------------------------------------------------
# four-vectors
# --------------------------------------------------------------------------


def from_pt_eta_phi_mass(pt, eta, phi, mass) -> FourVector:
    """Build a four-vector from collider coordinates.

    Raises
    ------
    DomainError
        If ``pt`` or ``mass`` is negative.
    """
    pt = np.asarray(pt, dtype=float)
    mass = np.asarray(mass, dtype=float)
    eta = np.asarray(eta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(pt < 0) or np.any(mass < 0):
        raise DomainError("pt and mass must be non-negative")
    pz = pt * np.sinh(eta)
    pabs_sq = np.square(pt * np.cosh(eta))
    e = np.sqrt(pabs_sq + mass * mass)
    return FourVector(
        _scalar_or_array(e),
        _scalar_or_array(pt * np.cos(phi)),
        _scalar_or_array(pt * np.sin(phi)),
        _scalar_or_array(pz),
    )


def add(a: FourVector, b: FourVector) -> FourVector:
    """Componentwise sum, i.e. the four-momentum of the combined system."""
    return FourVector(a.e + b.e, a.px + b.px, a.py + b.py, a.pz + b.pz)


def minkowski_norm_sq(v: FourVector):
    """``e^2 - px^2 - py^2 - pz^2`` (the squared rest mass)."""
    if all(type(x) is float for x in (v.e, v.px, v.py, v.pz)):
        return v.e * v.e - v.px * v.px - v.py * v.py - v.pz * v.pz
    e = np.asarray(v.e, dtype=float)
    px = np.asarray(v.px, dtype=float)
    py = np.asarray(v.py, dtype=float)
    pz = np.asarray(v.pz, dtype=float)
    return _scalar_or_array(e * e - px * px - py * py - pz * pz)


def _checked_mass(norm_sq, e):
    if type(norm_sq) is float and type(e) is float:
        # scalar fast path, same rule as below
        if norm_sq < -(NORM_EPS + _NORM_REL * e * e):
            raise NonPhysical(f"Minkowski norm squared {norm_sq:.6g} GeV^2 is below the numerical slack")
        return math.sqrt(norm_sq) if norm_sq > 0.0 else 0.0
    norm_sq = np.asarray(norm_sq, dtype=float)
    slack = NORM_EPS + _NORM_REL * np.square(np.asarray(e, dtype=float))
    if np.any(norm_sq < -slack):
        raise NonPhysical(
            f"Minkowski norm squared {np.min(norm_sq):.6g} GeV^2 is below the numerical slack"
        )
    return _scalar_or_array(np.sqrt(np.maximum(norm_sq, 0.0)))


def rest_mass(v: FourVector):
    """Rest mass ``sqrt(e^2 - |p|^2)``; slightly negative norms clamp to 0.

    Raises
    ------
    NonPhysical
        If the norm squared is more negative than the slack.
    """
    return _checked_mass(minkowski_norm_sq(v), v.e)


def invariant_mass(a: FourVector, b: FourVector):
    """Invariant mass of the two-body system ``a + b``."""
    s = add(a, b)
    return _checked_mass(minkowski_norm_sq(s), s.e)


def rotate_z(v: FourVector, angle) -> FourVector:
    """Rotate the transverse momentum by ``angle`` about the beam axis."""
    c, s = np.cos(angle), np.sin(angle)
    return FourVector(
        v.e,
        _scalar_or_array(c * np.asarray(v.px) - s * np.asarray(v.py)),
        _scalar_or_array(s * np.asarray(v.px) + c * np.asarray(v.py)),
        v.pz,
    )


def boost_z(v: FourVector, rapidity) -> FourVector:
    """Longitudinal boost by ``rapidity`` (positive moves towards +z)."""
    ch, sh = np.cosh(rapidity), np.sinh(rapidity)
    e = np.asarray(v.e, dtype=float)
    pz = np.asarray(v.pz, dtype=float)
    return FourVector(_scalar_or_array(ch * e + sh * pz), v.px, v.py,
                      _scalar_or_array(sh * e + ch * pz))


# --------------------------------------------------------------------------
# event-level observables
# --------------------------------------------------------------------------


def met_from_objects(objects: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """Missing transverse energy from visible ``(pt, phi)`` pairs.

    Returns the magnitude and azimuth of ``-sum(pt*cos(phi), pt*sin(phi))``.
    The azimuth is 0 by convention when the sum vanishes.  Sums are
    compensated so balanced inputs give a result at the rounding floor.
    """
    pairs = list(objects)
    if not pairs:
        return 0.0, 0.0
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    pt, phi = arr[:, 0], arr[:, 1]
    if np.any(pt < 0):
        raise DomainError("pt must be non-negative")
    # 0.0 - x keeps a vanishing component at +0.0, so the azimuth stays in (-pi, pi]
    sx = 0.0 - math.fsum((pt * np.cos(phi)).tolist())
    sy = 0.0 - math.fsum((pt * np.sin(phi)).tolist())
    met = math.sqrt(sx * sx + sy * sy)
    if met == 0.0:
        return 0.0, 0.0
    return met, math.atan2(sy, sx)


def track_isolation(seed: tuple[float, float], pf: Sequence, cone_r: float = 0.3,
                    min_pt: float = 0.0) -> float:
    """Scalar pt sum of charged particle-flow objects in a cone around ``seed``.

    Objects count when ``0 < dR < cone_r`` and ``pt >= min_pt``; an object
    exactly at the seed direction is the seed itself and is skipped.
    ``pf`` is any sequence of records with ``pt``, ``eta``, ``phi`` and
    ``charge`` attributes.
    """
    if cone_r <= 0:
        raise DomainError("cone_r must be positive")
    if len(pf) == 0:
        return 0.0
    pt = np.fromiter((o.pt for o in pf), float, len(pf))
    eta = np.fromiter((o.eta for o in pf), float, len(pf))
    phi = np.fromiter((o.phi for o in pf), float, len(pf))
    charge = np.fromiter((o.charge for o in pf), float, len(pf))
    return isolation_sum(seed[0], seed[1], eta, phi, pt, charge != 0, cone_r, min_pt)


def isolation_sum(seed_eta, seed_phi, eta, phi, values, mask, cone_r, min_pt=0.0, pt=None):
    """Array form of the cone sum: add ``values`` of masked objects in the cone.

    ``pt`` (defaults to ``values``) is used for the ``min_pt`` threshold, so the
    same helper also builds calorimeter isolation sums.
    """
    values = np.asarray(values, dtype=float)
    pt = values if pt is None else np.asarray(pt, dtype=float)
    dr = np.asarray(delta_r(seed_eta, seed_phi, eta, phi))
    sel = np.asarray(mask, dtype=bool) & (dr > 0.0) & (dr < cone_r) & (pt >= min_pt)
    return math.fsum(values[sel].tolist())


def relative_isolation(iso, lepton_pt):
    """Isolation sum divided by the lepton pt."""
    lepton_pt = np.asarray(lepton_pt, dtype=float)
    if np.any(lepton_pt <= 0):
        raise DomainError("lepton_pt must be positive")
    return _scalar_or_array(np.asarray(iso, dtype=float) / lepton_pt)
