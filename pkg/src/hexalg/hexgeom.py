"""Classical hexaspherical geometry: lifts to the 6d quadric, conformal
maps to accelerated frames, 6d rotations, and hyperboloid transforms.

Space-time indices use the Minkowski metric diag(1,-1,-1,-1); hexaspherical
components are ordered (-, +, 0, 1, 2, 3) with metric diag(-1,1,1,-1,-1,-1).
Projective quantities (rho^2, k^2, lambda^2) are kept signed and squared
throughout; no square roots of indefinite quantities are ever taken.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpaceTimePoint", "HexaPoint", "Hyperboloid", "HorizonError",
    "minkowski_sq", "lower", "lift", "project", "conformal_map",
    "rotate_hexa", "pair_invariant", "hexa_sq", "hyperboloid_lift",
    "hyperboloid_map", "metric_check", "accel_frame_factor",
]

_ETA = np.array([1.0, -1.0, -1.0, -1.0])
_ETA6 = np.array([-1.0, 1.0, 1.0, -1.0, -1.0, -1.0])


class HorizonError(ValueError):
    """A conformal map denominator vanished (point on the horizon)."""


def _vec4(x):
    v = np.asarray(x, dtype=float)
    if v.shape != (4,):
        raise ValueError("expected a 4-vector")
    return v


def minkowski_sq(x):
    x = _vec4(x)
    return float(x[0] * x[0] - x[1] * x[1] - x[2] * x[2] - x[3] * x[3])


def lower(x):
    """Lower an upper-index 4-vector: x_mu = eta_{mu nu} x^nu."""
    return _ETA * _vec4(x)


def _alpha(a):
    """Accept any 4-sequence of acceleration components (upper index)."""
    if hasattr(a, "alpha"):
        v = np.array([float(c) for c in a.alpha])
    else:
        v = _vec4(a)
    return v, minkowski_sq(v)


@dataclass(frozen=True)
class SpaceTimePoint:
    """Point x^mu with the conformal factor lambda(x) of its frame."""

    x: tuple
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(c) for c in self.x))
        if self.lam == 0:
            raise ValueError("conformal factor must be nonzero")


@dataclass(frozen=True)
class HexaPoint:
    """Six hexaspherical components ordered (y_-, y_+, y_0..y_3)."""

    y: tuple

    def __post_init__(self):
        v = tuple(float(c) for c in self.y)
        if len(v) != 6:
            raise ValueError("expected 6 components")
        object.__setattr__(self, "y", v)

    @property
    def minus(self):
        return self.y[0]

    @property
    def plus(self):
        return self.y[1]

    @property
    def spt(self):
        return np.array(self.y[2:])


@dataclass(frozen=True)
class Hyperboloid:
    """Hyperboloid (x - omega)^2 + rho^2 = 0 with signed squared data.

    lam_sq and k_sq satisfy lam_sq * rho_sq = -k_sq; all three are stored
    signed and never square-rooted except where a real representative is
    provably available.
    """

    omega: tuple
    rho_sq: float
    k_sq: float
    lam_sq: float

    @classmethod
    def from_radius(cls, omega, rho_sq, k_sq):
        if rho_sq == 0:
            raise ValueError("degenerate hyperboloid (rho^2 = 0): use lift")
        return cls(tuple(float(c) for c in omega), float(rho_sq),
                   float(k_sq), -float(k_sq) / float(rho_sq))


def hexa_sq(y):
    v = np.asarray(y.y if isinstance(y, HexaPoint) else y, dtype=float)
    return float(np.sum(_ETA6 * v * v))


def lift(p):
    """Hexaspherical image of a space-time point:
    y_- + y_+ = -lambda, y_mu = lambda x_mu, y_+ - y_- = lambda x^2."""
    x = _vec4(p.x)
    lam = p.lam
    xsq = minkowski_sq(x)
    y_minus = -0.5 * lam * (1.0 + xsq)
    y_plus = 0.5 * lam * (xsq - 1.0)
    return HexaPoint((y_minus, y_plus, *(lam * lower(x))))


def project(y):
    """Stereographic projection back to space-time; the inverse of lift."""
    lam = -(y.minus + y.plus)
    if lam == 0:
        raise HorizonError("point at infinity (y_- + y_+ = 0)")
    x_lower = y.spt / lam
    return SpaceTimePoint(tuple(_ETA * x_lower), lam)


def accel_frame_factor(x, a):
    """Denominator 1 - 2 a_mu x^mu + a^2 x^2 of the accelerated-frame map."""
    x = _vec4(x)
    av, asq = _alpha(a)
    return 1.0 - 2.0 * float(np.dot(lower(av), x)) + asq * minkowski_sq(x)


def conformal_map(p, a):
    """Transformation to a uniformly accelerated frame:
    xbar = (x - x^2 a)/(1 - 2 a.x + a^2 x^2), with the conformal factor
    picking up the same denominator."""
    x = _vec4(p.x)
    av, _ = _alpha(a)
    den = accel_frame_factor(x, a)
    if abs(den) < 1e-300:
        raise HorizonError("conformal horizon (vanishing denominator)")
    xbar = (x - minkowski_sq(x) * av) / den
    return SpaceTimePoint(tuple(xbar), den * p.lam)


def rotate_hexa(y, a):
    """The 6d rotation realizing the accelerated-frame map on the quadric."""
    av, asq = _alpha(a)
    al = lower(av)
    s = y.minus + y.plus
    d = y.minus - y.plus
    sbar = s + 2.0 * float(np.dot(av, y.spt)) + asq * d
    spt_bar = y.spt + al * d
    y_minus = 0.5 * (sbar + d)
    y_plus = 0.5 * (sbar - d)
    return HexaPoint((y_minus, y_plus, *spt_bar))


def pair_invariant(y1, y2):
    """6d squared distance (y - y')^2; equals lambda lambda' (x - x')^2 for
    points on the quadric."""
    d = np.asarray(y1.y) - np.asarray(y2.y)
    return float(np.sum(_ETA6 * d * d))


def hyperboloid_lift(h):
    """Hexaspherical representative of a hyperboloid with the conformal
    scale fixed by lambda^2 = -k^2/rho^2.

    Requires lambda^2 > 0 (k^2 and rho^2 of opposite signs); the positive
    root is taken as the representative, other scalings being projectively
    equivalent.
    """
    if h.rho_sq == 0:
        raise ValueError("degenerate hyperboloid (rho^2 = 0): use lift")
    lam_sq = -h.k_sq / h.rho_sq
    if lam_sq <= 0:
        raise ValueError(
            "no real hexaspherical representative (lambda^2 <= 0)")
    lam = float(np.sqrt(lam_sq))
    om = _vec4(h.omega)
    om_sq = minkowski_sq(om)
    spread = lam * (om_sq + h.rho_sq)
    y_minus = 0.5 * (-lam - spread)
    y_plus = 0.5 * (-lam + spread)
    return HexaPoint((y_minus, y_plus, *(lam * lower(om))))


def hyperboloid_map(h, a):
    """Accelerated-frame image of a hyperboloid in signed-square form:
    1/rhobar = (1 - 2 a.omega + a^2 (omega^2 + rho^2))/rho and the matching
    center equation, squared so no root of rho^2 is needed."""
    av, asq = _alpha(a)
    om = _vec4(h.omega)
    om_sq = minkowski_sq(om)
    kappa = (1.0 - 2.0 * float(np.dot(lower(av), om))
             + asq * (om_sq + h.rho_sq))
    if abs(kappa) < 1e-300:
        raise HorizonError("vanishing transformed inverse radius")
    rho_sq_bar = h.rho_sq / (kappa * kappa)
    om_bar = (om - av * (om_sq + h.rho_sq)) / kappa
    return Hyperboloid(tuple(om_bar), rho_sq_bar, h.k_sq,
                       -h.k_sq / rho_sq_bar)


def metric_check(p, dx, a, step=1.0):
    """Finite-difference check of (dy)^2 = lambda^2 (dx)^2.

    The conformal factor field is the accelerated-frame family
    lambda(x') = s/(1 + 2 a.x' + a^2 x'^2) scaled so lambda(p.x) = p.lam.
    Central differences of the lift along step*dx and step*dx/2 give two
    defects whose ratio measures the quadratic convergence order.
    """
    x = _vec4(p.x)
    dx = _vec4(dx)
    av, asq = _alpha(a)

    def lam_at(xp):
        den = 1.0 + 2.0 * float(np.dot(lower(av), xp)) + asq * minkowski_sq(xp)
        if abs(den) < 1e-300:
            raise HorizonError("conformal horizon in metric check")
        return 1.0 / den

    scale = p.lam / lam_at(x)

    def defect(hstep):
        xp = x + 0.5 * hstep * dx
        xm = x - 0.5 * hstep * dx
        yp = lift(SpaceTimePoint(tuple(xp), scale * lam_at(xp)))
        ym = lift(SpaceTimePoint(tuple(xm), scale * lam_at(xm)))
        dy_sq = pair_invariant(yp, ym)
        lam0 = scale * lam_at(x)
        want = lam0 * lam0 * minkowski_sq(hstep * dx)
        ref = max(abs(dy_sq), abs(want),
                  (hstep * lam0 * float(np.max(np.abs(dx)))) ** 2)
        return abs(dy_sq - want) / ref, abs(dy_sq - want)

    rel1, abs1 = defect(step)
    rel2, abs2 = defect(0.5 * step)
    ratio = rel1 / rel2 if rel2 > 0 else float("inf")
    return {
        "defect": abs1,
        "defect_half": abs2,
        "relative_defect": rel1,
        "relative_defect_half": rel2,
        "ratio": ratio,
    }
