"""Parametric families of probability measures and their scores.

A family is a map ``theta -> P_theta`` on a spatial domain, either dominated
by Lebesgue measure (``ContinuousFamily``) or purely atomic with a fixed,
finite atom list (``AtomicFamily``).  The reference measure is fixed across
theta in both cases, so differentiating the measure in theta and taking the
density of the derivative with respect to ``P_theta`` itself gives a
pointwise score.  For dominated families that score coincides with the
ordinary derivative of the log density; for atomic families it is
``dtheta_mass / mass`` atom by atom.

Convention for points where the score is not uniquely determined (zero
density, zero mass): the score is *forced to 0* and flagged, see
``ScoreValue``.  Downstream expectations then treat such points as
contributing nothing, which is the only choice consistent with the score
being a density with respect to ``P_theta``.

All functions are pure; sampling takes an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy import integrate

from .errors import NumericError, ValidationError

# A spatial point.  One-dimensional families use bare floats, d-dimensional
# ones use tuples of floats.  Points must be hashable and mutually orderable
# within one family.
Point = Any

TestFunction = Callable[[Point], float]


@dataclass(frozen=True)
class ParamValue:
    """A parameter value together with the open interval it must live in."""

    theta: float
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self) -> None:
        if not math.isfinite(self.theta):
            raise ValidationError(f"theta must be finite, got {self.theta}")
        if not (self.lo < self.theta < self.hi):
            raise ValidationError(
                f"theta={self.theta} outside open domain ({self.lo}, {self.hi})"
            )

    def __float__(self) -> float:
        return float(self.theta)


def theta_value(theta: "float | ParamValue") -> float:
    """Accept either a bare float or a ParamValue."""
    return float(theta)


@dataclass(frozen=True)
class ScoreValue:
    """A pointwise score.

    ``defined`` is False exactly where the derivative-measure density is not
    uniquely determined; the value is then 0 by convention, and the invariant
    is enforced at construction.
    """

    value: float
    defined: bool = True

    def __post_init__(self) -> None:
        if not self.defined and self.value != 0.0:
            raise ValidationError("undefined scores must carry value 0")
        if self.defined and not math.isfinite(self.value):
            raise NumericError(f"non-finite score value {self.value}")

    @classmethod
    def undefined(cls) -> "ScoreValue":
        return cls(0.0, False)


@dataclass(frozen=True)
class ContinuousFamily:
    """Family dominated by Lebesgue measure on R^dim.

    ``log_density`` and ``dtheta_log_density`` take ``(theta, x)`` and return
    floats; off-support points must return ``-inf`` from ``log_density``.
    ``sampler`` draws one point given ``(theta, rng)``.

    ``integration_bounds`` maps theta to a finite interval carrying all but a
    negligible part of the mass; it is required by the quadrature-based
    operations (weak-derivative residuals, information by quadrature) and is
    only meaningful for dim == 1 families.
    """

    dim: int
    log_density: Callable[[float, Point], float]
    dtheta_log_density: Callable[[float, Point], float]
    sampler: Callable[[float, np.random.Generator], Point]
    integration_bounds: Callable[[float], tuple[float, float]] | None = None
    theta_domain: tuple[float, float] = (-math.inf, math.inf)
    name: str = "continuous"

    def sample(self, theta: float | ParamValue, rng: np.random.Generator) -> Point:
        return self.sampler(float(theta), rng)


@dataclass(frozen=True)
class AtomicFamily:
    """Purely atomic family on a fixed finite atom list.

    ``mass`` and ``dtheta_mass`` take ``(theta, atom)``.  Masses must be
    nonnegative and sum to 1; the theta-derivatives must sum to 0.  Both are
    checked by :meth:`validate` rather than at every evaluation.
    """

    atoms: tuple[Point, ...]
    mass: Callable[[float, Point], float]
    dtheta_mass: Callable[[float, Point], float]
    theta_domain: tuple[float, float] = (-math.inf, math.inf)
    name: str = "atomic"

    def __post_init__(self) -> None:
        if len(self.atoms) == 0:
            raise ValidationError("atom list may not be empty")
        if len(set(self.atoms)) != len(self.atoms):
            raise ValidationError("atoms must be distinct")

    def masses(self, theta: float | ParamValue) -> np.ndarray:
        t = float(theta)
        return np.array([self.mass(t, a) for a in self.atoms], dtype=float)

    def dtheta_masses(self, theta: float | ParamValue) -> np.ndarray:
        t = float(theta)
        return np.array([self.dtheta_mass(t, a) for a in self.atoms], dtype=float)

    def validate(
        self,
        theta: float | ParamValue,
        mass_tol: float = 1e-12,
        dtheta_tol: float = 1e-10,
    ) -> None:
        m = self.masses(theta)
        if np.any(m < 0):
            raise ValidationError(f"negative mass in family {self.name!r}")
        if abs(float(m.sum()) - 1.0) > mass_tol:
            raise ValidationError(
                f"masses of {self.name!r} sum to {m.sum()!r}, not 1"
            )
        d = float(self.dtheta_masses(theta).sum())
        if abs(d) > dtheta_tol:
            raise ValidationError(
                f"dtheta masses of {self.name!r} sum to {d!r}, not 0"
            )

    def sample(self, theta: float | ParamValue, rng: np.random.Generator) -> Point:
        t = float(theta)
        r = rng.random()
        acc = 0.0
        for atom in self.atoms:
            acc += self.mass(t, atom)
            if r < acc:
                return atom
        return self.atoms[-1]


Family = ContinuousFamily | AtomicFamily


def score_continuous(
    family: ContinuousFamily, theta: float | ParamValue, x: Point
) -> ScoreValue:
    """Score of a dominated family at x: d/dtheta of the log density.

    Zero-density points yield an undefined score (value 0, flag cleared).
    """
    t = float(theta)
    lp = family.log_density(t, x)
    if math.isnan(lp):
        raise NumericError(f"log density of {family.name!r} returned nan at {x!r}")
    if lp == -math.inf:
        return ScoreValue.undefined()
    return ScoreValue(float(family.dtheta_log_density(t, x)))


def score_atomic(
    family: AtomicFamily, theta: float | ParamValue, atom: Point
) -> ScoreValue:
    """Score of an atomic family at one of its atoms: dtheta_mass / mass.

    Atoms with zero mass yield an undefined score.  A point that is not in
    the atom list at all is a caller error, not an off-support observation.
    """
    if atom not in family.atoms:
        raise ValidationError(f"{atom!r} is not an atom of family {family.name!r}")
    t = float(theta)
    m = family.mass(t, atom)
    if m < 0:
        raise ValidationError(f"negative mass at atom {atom!r}")
    if m == 0.0:
        return ScoreValue.undefined()
    return ScoreValue(float(family.dtheta_mass(t, atom)) / m)


def product_score(score_x: ScoreValue, score_y_given_x: ScoreValue) -> ScoreValue:
    """Score of a product (joint) measure from the scores of its factors.

    The joint score is the sum of the marginal score and the conditional
    score.  If either factor is undefined the product is undefined.
    """
    if score_x.defined and score_y_given_x.defined:
        return ScoreValue(score_x.value + score_y_given_x.value)
    return ScoreValue.undefined()


def default_fd_eps(theta: float) -> float:
    """Step for central finite differences in theta."""
    return 1e-6 * max(1.0, abs(theta))


def fd_dtheta_log_density(
    family: ContinuousFamily, theta: float, x: Point, eps: float | None = None
) -> float:
    """Central finite difference of the log density in theta, for validation."""
    e = default_fd_eps(theta) if eps is None else eps
    return (family.log_density(theta + e, x) - family.log_density(theta - e, x)) / (
        2.0 * e
    )


def fd_dtheta_mass(
    family: AtomicFamily, theta: float, atom: Point, eps: float | None = None
) -> float:
    """Central finite difference of an atom mass in theta."""
    e = default_fd_eps(theta) if eps is None else eps
    return (family.mass(theta + e, atom) - family.mass(theta - e, atom)) / (2.0 * e)


def _quad(fn: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Adaptive quadrature with failure escalation.

    scipy's quad warns instead of raising on difficult integrands; those
    warnings are converted to ``NumericError`` so callers cannot silently
    consume a bad integral.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(fn, lo, hi, epsabs=tol, epsrel=0.0, limit=300)
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"quadrature failed on [{lo}, {hi}]: {exc}") from exc
    if math.isnan(value):
        raise NumericError(f"quadrature returned nan on [{lo}, {hi}]")
    if abserr > max(tol * 100.0, 1e-8):
        raise NumericError(
            f"quadrature error estimate {abserr:g} too large on [{lo}, {hi}]"
        )
    return value


def _bounds_for(family: ContinuousFamily, theta: float) -> tuple[float, float]:
    if family.dim != 1:
        raise ValidationError(
            f"quadrature requires a 1-d family, {family.name!r} has dim={family.dim}"
        )
    if family.integration_bounds is None:
        raise ValidationError(
            f"family {family.name!r} does not provide integration bounds"
        )
    return family.integration_bounds(theta)


def expectation(
    family: Family,
    theta: float | ParamValue,
    test_fn: TestFunction,
    quad_tol: float = 1e-10,
) -> float:
    """E_theta[f]: exact atom sum, or adaptive quadrature for 1-d densities."""
    t = float(theta)
    if isinstance(family, AtomicFamily):
        return float(
            math.fsum(family.mass(t, a) * test_fn(a) for a in family.atoms)
        )
    lo, hi = _bounds_for(family, t)
    return _quad(
        lambda x: test_fn(x) * math.exp(family.log_density(t, x)), lo, hi, quad_tol
    )


def _score_weighted_expectation(
    family: Family, theta: float, test_fn: TestFunction, quad_tol: float
) -> float:
    """E_theta[f * score], with undefined scores contributing 0."""
    if isinstance(family, AtomicFamily):
        total = 0.0
        for a in family.atoms:
            s = score_atomic(family, theta, a)
            if s.defined:
                total += family.mass(theta, a) * test_fn(a) * s.value
        return total
    lo, hi = _bounds_for(family, theta)

    def integrand(x: float) -> float:
        lp = family.log_density(theta, x)
        if lp == -math.inf:
            return 0.0
        return test_fn(x) * family.dtheta_log_density(theta, x) * math.exp(lp)

    return _quad(integrand, lo, hi, quad_tol)


def weak_derivative_residual(
    family: Family,
    theta: float | ParamValue,
    test_fn: TestFunction,
    eps: float,
    quad_tol: float = 1e-10,
) -> float:
    """Check the defining identity of the score against a finite difference.

    Returns ``| (E_{t+eps}[f] - E_{t-eps}[f]) / (2 eps)  -  E_t[f * score] |``.
    For a correctly paired (family, score) this decays like eps^2.
    """
    t = float(theta)
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    if isinstance(theta, ParamValue):
        lo, hi = theta.lo, theta.hi
    else:
        lo, hi = family.theta_domain
    if not (lo < t - eps and t + eps < hi):
        raise ValidationError(
            f"theta +- eps leaves the parameter domain ({lo}, {hi})"
        )
    plus = expectation(family, t + eps, test_fn, quad_tol)
    minus = expectation(family, t - eps, test_fn, quad_tol)
    slope = (plus - minus) / (2.0 * eps)
    target = _score_weighted_expectation(family, t, test_fn, quad_tol)
    return abs(slope - target)
