"""Ready-made families, cardinalities and clutter specifications.

These are the concrete models used by the test suite, the check suites and
the command line scenarios.  Scalar families accept a bare float or a
1-tuple for the point argument so the same family works standalone and as
the spatial component of a point process.
"""

from __future__ import annotations

import functools
import math

import numpy as np

from .errors import ValidationError
from .kernels import ClutterSpec
from .measures import AtomicFamily, ContinuousFamily, Point
from .pointproc import CardinalityPMF

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _scalar(x: Point) -> float:
    if isinstance(x, tuple):
        if len(x) != 1:
            raise ValidationError(f"expected a scalar point, got {x!r}")
        return float(x[0])
    return float(x)


def _cached_vector_fn(fn):
    return functools.lru_cache(maxsize=64)(fn)


def gaussian_location(sigma: float = 1.0) -> ContinuousFamily:
    """N(theta, sigma^2) on the line; information 1 / sigma^2."""
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    var = sigma * sigma
    log_norm = math.log(sigma) + _LOG_SQRT_2PI

    def log_density(theta: float, x: Point) -> float:
        z = _scalar(x) - theta
        return -0.5 * z * z / var - log_norm

    def dtheta(theta: float, x: Point) -> float:
        return (_scalar(x) - theta) / var

    def sampler(theta: float, rng: np.random.Generator) -> float:
        return theta + sigma * rng.standard_normal()

    return ContinuousFamily(
        dim=1,
        log_density=log_density,
        dtheta_log_density=dtheta,
        sampler=sampler,
        integration_bounds=lambda t: (t - 10.0 * sigma, t + 10.0 * sigma),
        name=f"gaussian-location(sigma={sigma:g})",
    )


def gaussian_scale() -> ContinuousFamily:
    """N(0, theta^2) with theta > 0; information 2 / theta^2."""

    def log_density(theta: float, x: Point) -> float:
        z = _scalar(x) / theta
        return -0.5 * z * z - math.log(theta) - _LOG_SQRT_2PI

    def dtheta(theta: float, x: Point) -> float:
        z = _scalar(x)
        return z * z / theta**3 - 1.0 / theta

    def sampler(theta: float, rng: np.random.Generator) -> float:
        return theta * rng.standard_normal()

    return ContinuousFamily(
        dim=1,
        log_density=log_density,
        dtheta_log_density=dtheta,
        sampler=sampler,
        integration_bounds=lambda t: (-12.0 * t, 12.0 * t),
        theta_domain=(0.0, math.inf),
        name="gaussian-scale",
    )


def two_point_family(a: Point = -1.0, b: Point = 1.0) -> AtomicFamily:
    """Mass theta at atom a and 1 - theta at atom b, theta in (0, 1).

    The score is 1/theta at a and -1/(1 - theta) at b, and the information
    is 1 / (theta (1 - theta)).
    """
    if a == b:
        raise ValidationError("atoms must differ")
    atoms = (a, b)

    def mass(theta: float, atom: Point) -> float:
        return theta if atom == a else 1.0 - theta

    def dtheta_mass(theta: float, atom: Point) -> float:
        return 1.0 if atom == a else -1.0

    return AtomicFamily(
        atoms=atoms,
        mass=mass,
        dtheta_mass=dtheta_mass,
        theta_domain=(0.0, 1.0),
        name=f"two-point({a!r},{b!r})",
    )


def bernoulli_dirac(x: float = 1.0) -> AtomicFamily:
    """Mass theta at -x and 1 - theta at +x."""
    if x == 0:
        raise ValidationError("x must be nonzero")
    return two_point_family(-x, x)


def uniform_atoms(atoms: tuple[Point, ...]) -> AtomicFamily:
    """Theta-free uniform distribution on a finite atom list."""
    k = len(atoms)
    if k == 0:
        raise ValidationError("need at least one atom")
    w = 1.0 / k
    return AtomicFamily(
        atoms=tuple(atoms),
        mass=lambda theta, atom: w,
        dtheta_mass=lambda theta, atom: 0.0,
        name=f"uniform-atoms({k})",
    )


def gaussian_pair() -> ContinuousFamily:
    """Ordered pair (X1, X2) with X1 ~ N(theta, 1), X2 ~ N(-theta, 1).

    The two components identify the parameter with opposite signs, so the
    pair is maximally order-sensitive: at theta = 0 a uniform random swap
    destroys all the information.
    """

    def log_density(theta: float, x: tuple[float, float]) -> float:
        z1 = x[0] - theta
        z2 = x[1] + theta
        return -0.5 * (z1 * z1 + z2 * z2) - 2.0 * _LOG_SQRT_2PI

    def dtheta(theta: float, x: tuple[float, float]) -> float:
        return (x[0] - theta) - (x[1] + theta)

    def sampler(theta: float, rng: np.random.Generator) -> tuple[float, float]:
        z = rng.standard_normal(2)
        return (theta + z[0], -theta + z[1])

    return ContinuousFamily(
        dim=2,
        log_density=log_density,
        dtheta_log_density=dtheta,
        sampler=sampler,
        name="gaussian-pair",
    )


def gaussian_pair_iid() -> ContinuousFamily:
    """Exchangeable control: both components N(theta, 1)."""

    def log_density(theta: float, x: tuple[float, float]) -> float:
        z1 = x[0] - theta
        z2 = x[1] - theta
        return -0.5 * (z1 * z1 + z2 * z2) - 2.0 * _LOG_SQRT_2PI

    def dtheta(theta: float, x: tuple[float, float]) -> float:
        return (x[0] - theta) + (x[1] - theta)

    def sampler(theta: float, rng: np.random.Generator) -> tuple[float, float]:
        z = rng.standard_normal(2)
        return (theta + z[0], theta + z[1])

    return ContinuousFamily(
        dim=2,
        log_density=log_density,
        dtheta_log_density=dtheta,
        sampler=sampler,
        name="gaussian-pair-iid",
    )


def _frozen_pmf(values: np.ndarray, name: str) -> CardinalityPMF:
    arr = np.asarray(values, dtype=float).copy()
    arr.setflags(write=False)
    zeros = np.zeros_like(arr)
    zeros.setflags(write=False)
    return CardinalityPMF(
        n_max=len(arr) - 1,
        probs_fn=lambda theta: arr,
        dtheta_fn=lambda theta: zeros,
        theta_dependent=False,
        name=name,
    )


def fixed_cardinality(n: int, n_max: int | None = None) -> CardinalityPMF:
    """Point mass at n (a process with exactly n points)."""
    if n < 0:
        raise ValidationError("n must be nonnegative")
    top = n if n_max is None else n_max
    if top < n:
        raise ValidationError("n_max must be at least n")
    values = np.zeros(top + 1)
    values[n] = 1.0
    return _frozen_pmf(values, f"fixed({n})")


def mixture_cardinality(weights: dict[int, float]) -> CardinalityPMF:
    """Theta-free pmf from an explicit {count: probability} table."""
    if not weights:
        raise ValidationError("empty weight table")
    top = max(weights)
    values = np.zeros(top + 1)
    for n, w in weights.items():
        if n < 0 or w < 0:
            raise ValidationError("counts must be >= 0 with nonnegative weights")
        values[n] = w
    if abs(values.sum() - 1.0) > 1e-12:
        raise ValidationError("weights must sum to 1")
    return _frozen_pmf(values, f"mixture({top})")


def bernoulli_cardinality() -> CardinalityPMF:
    """One point with probability theta, none otherwise; theta-dependent."""

    @_cached_vector_fn
    def probs_fn(theta: float) -> np.ndarray:
        arr = np.array([1.0 - theta, theta])
        arr.setflags(write=False)
        return arr

    d = np.array([-1.0, 1.0])
    d.setflags(write=False)
    return CardinalityPMF(
        n_max=1,
        probs_fn=probs_fn,
        dtheta_fn=lambda theta: d,
        theta_dependent=True,
        name="bernoulli-count",
    )


def poisson_cardinality(rate: float, n_max: int = 30) -> CardinalityPMF:
    """Poisson(rate) truncated at n_max; the discarded tail must be < 1e-12."""
    if rate < 0:
        raise ValidationError("rate must be nonnegative")
    values = np.array(
        [
            math.exp(-rate + n * math.log(rate) - math.lgamma(n + 1)) if rate > 0 else (1.0 if n == 0 else 0.0)
            for n in range(n_max + 1)
        ]
    )
    return _frozen_pmf(values, f"poisson({rate:g})")


def poisson_clutter(
    rate: float,
    spatial: AtomicFamily | ContinuousFamily | None = None,
    n_max: int = 30,
) -> ClutterSpec:
    """Poisson-count clutter, uniform on the two default atoms by default."""
    if spatial is None:
        spatial = uniform_atoms((-1.0, 1.0))
    return ClutterSpec(poisson_cardinality(rate, n_max), spatial)


def fixed_clutter(n: int, spatial: AtomicFamily | ContinuousFamily) -> ClutterSpec:
    """Exactly n clutter points per observation."""
    return ClutterSpec(fixed_cardinality(n), spatial)
