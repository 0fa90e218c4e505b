"""Finite point configurations and i.i.d. cluster point processes.

A configuration is a finite multiset of spatial points.  Internally it is
stored as a sorted tuple, so equality, hashing and iteration order are all
canonical regardless of construction order.

Densities of point processes are taken on ordered tuples: an i.i.d. process
with cardinality pmf ``pi`` and spatial family ``mu`` has density
``pi(n) * prod_i mu(x_i)`` on the n-point stratum.  Working with the ordered
form rather than the symmetrized one is a free choice of reference measure:
the symmetrization constant ``n!`` does not depend on theta, so it cancels
from every score and from every Fisher information computed here.  This is
relied on throughout and is worth stating once:

    Lemma (ordering convention).  Multiplying the n-point density by any
    theta-free constant c_n leaves the score d/dtheta log p unchanged on the
    n-point stratum, hence leaves all information quantities unchanged.

Scores of configurations therefore reduce to a cardinality term plus a sum
of per-point spatial scores, combined with the same undefined-handling rules
as in :mod:`fisherpp.measures`.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .errors import (
    EnumerationLimitError,
    NotDuplicatedError,
    TruncationError,
    ValidationError,
)
from .measures import (
    AtomicFamily,
    ContinuousFamily,
    Family,
    ParamValue,
    Point,
    ScoreValue,
    product_score,
    score_atomic,
    score_continuous,
)

EMPTY_TOKEN = "∅"  # the symbol used for the empty configuration in text form


@dataclass(frozen=True, order=True)
class Configuration:
    """A finite multiset of points, canonically sorted."""

    points: tuple[Point, ...] = ()

    def __post_init__(self) -> None:
        try:
            ordered = tuple(sorted(self.points))
        except TypeError as exc:
            raise ValidationError(
                "configuration points must share one dimension"
            ) from exc
        object.__setattr__(self, "points", ordered)

    @classmethod
    def empty(cls) -> "Configuration":
        return cls(())

    @property
    def n(self) -> int:
        return len(self.points)

    def counts(self) -> Counter:
        return Counter(self.points)

    def union(self, other: "Configuration") -> "Configuration":
        return Configuration(self.points + other.points)


def _point_dim(point: Point) -> int:
    return len(point) if isinstance(point, tuple) else 1


def _point_coords(point: Point) -> tuple[float, ...]:
    return point if isinstance(point, tuple) else (point,)


def to_text(config: Configuration) -> str:
    """Delimited text form: ``d;x11,...,x1d;...`` with 17 significant digits.

    The empty configuration is a single symbol so it stays distinguishable
    from any dimension header.
    """
    if config.n == 0:
        return EMPTY_TOKEN
    dims = {_point_dim(p) for p in config.points}
    if len(dims) != 1:
        raise ValidationError("configuration mixes point dimensions")
    d = dims.pop()
    fields = [str(d)]
    for p in config.points:
        fields.append(",".join(format(c, ".17g") for c in _point_coords(p)))
    return ";".join(fields)


def from_text(text: str) -> Configuration:
    """Inverse of :func:`to_text`; round-trips exactly."""
    if text == EMPTY_TOKEN:
        return Configuration.empty()
    fields = text.split(";")
    try:
        d = int(fields[0])
    except ValueError as exc:
        raise ValidationError(f"bad dimension header in {text!r}") from exc
    if d < 1:
        raise ValidationError(f"bad dimension {d} in {text!r}")
    points = []
    for f in fields[1:]:
        try:
            coords = tuple(float(c) for c in f.split(","))
        except ValueError as exc:
            raise ValidationError(f"bad coordinate in {f!r}") from exc
        if len(coords) != d:
            raise ValidationError(f"point {f!r} does not have {d} coordinates")
        points.append(coords[0] if d == 1 else coords)
    return Configuration(tuple(points))


@dataclass(frozen=True)
class CardinalityPMF:
    """Pmf of the number of points, truncated to ``0..n_max``.

    ``probs_fn(theta)`` returns the full probability vector of length
    ``n_max + 1``; ``dtheta_fn`` its elementwise theta-derivative.  Families
    that do not depend on theta set ``theta_dependent=False`` and return a
    zero derivative vector.
    """

    n_max: int
    probs_fn: Callable[[float], np.ndarray]
    dtheta_fn: Callable[[float], np.ndarray]
    theta_dependent: bool = True
    name: str = "cardinality"

    def probs(self, theta: float | ParamValue) -> np.ndarray:
        p = np.asarray(self.probs_fn(float(theta)), dtype=float)
        if p.shape != (self.n_max + 1,):
            raise ValidationError(
                f"cardinality {self.name!r} returned shape {p.shape}, "
                f"expected ({self.n_max + 1},)"
            )
        return p

    def dtheta_probs(self, theta: float | ParamValue) -> np.ndarray:
        d = np.asarray(self.dtheta_fn(float(theta)), dtype=float)
        if d.shape != (self.n_max + 1,):
            raise ValidationError(
                f"cardinality {self.name!r} derivative has shape {d.shape}"
            )
        return d

    def prob(self, theta: float | ParamValue, n: int) -> float:
        if n < 0 or n > self.n_max:
            return 0.0
        return float(self.probs(theta)[n])

    def dtheta_prob(self, theta: float | ParamValue, n: int) -> float:
        if n < 0 or n > self.n_max:
            return 0.0
        return float(self.dtheta_probs(theta)[n])

    def validate(
        self,
        theta: float | ParamValue,
        mass_tol: float = 1e-12,
        dtheta_tol: float = 1e-10,
    ) -> None:
        p = self.probs(theta)
        if np.any(p < 0):
            raise ValidationError(f"negative probability in {self.name!r}")
        tail = abs(float(p.sum()) - 1.0)
        if tail > mass_tol:
            raise TruncationError(
                f"cardinality {self.name!r}: truncated mass defect {tail:g} "
                f"exceeds {mass_tol:g}"
            )
        d = self.dtheta_probs(theta)
        if self.theta_dependent is False and np.any(d != 0.0):
            raise ValidationError(
                f"cardinality {self.name!r} is declared theta-free but has a "
                "nonzero derivative"
            )
        if abs(float(d.sum())) > dtheta_tol:
            raise ValidationError(
                f"cardinality {self.name!r}: dtheta probabilities sum to "
                f"{d.sum()!r}, not 0"
            )

    def sample(self, theta: float | ParamValue, rng: np.random.Generator) -> int:
        p = self.probs(theta)
        r = rng.random()
        acc = 0.0
        for n, pn in enumerate(p):
            acc += pn
            if r < acc:
                return n
        return self.n_max


@dataclass(frozen=True)
class MomentSummary:
    """First two moments of a cardinality distribution."""

    e_n: float
    e_n2: float

    def __post_init__(self) -> None:
        if self.e_n2 - self.e_n**2 < -1e-12:
            raise ValidationError(
                f"inconsistent moments: E[N^2]={self.e_n2} < (E[N])^2={self.e_n**2}"
            )


def moments(card: CardinalityPMF, theta: float | ParamValue) -> MomentSummary:
    """Exact first and second moments of the truncated cardinality."""
    card.validate(theta)
    p = card.probs(theta)
    ns = np.arange(card.n_max + 1, dtype=float)
    return MomentSummary(e_n=float(p @ ns), e_n2=float(p @ (ns * ns)))


@dataclass(frozen=True)
class IIDPointProcess:
    """Cardinality pmf plus an i.i.d. spatial family."""

    cardinality: CardinalityPMF
    spatial: Family


def spatial_log_density(spatial: Family, theta: float, point: Point) -> float:
    """log mass / log density of one point; -inf off support."""
    if isinstance(spatial, AtomicFamily):
        if point not in spatial.atoms:
            return -math.inf
        m = spatial.mass(theta, point)
        return math.log(m) if m > 0 else -math.inf
    return spatial.log_density(theta, point)


def spatial_score(spatial: Family, theta: float, point: Point) -> ScoreValue:
    """Per-point score; off-support points give an undefined score rather
    than an error, since configurations are observed, not constructed."""
    if isinstance(spatial, AtomicFamily):
        if point not in spatial.atoms:
            return ScoreValue.undefined()
        return score_atomic(spatial, theta, point)
    return score_continuous(spatial, theta, point)


def sample_iid_pp(
    pp: IIDPointProcess, theta: float | ParamValue, rng: np.random.Generator
) -> Configuration:
    """Draw one configuration: a cardinality, then that many i.i.d. points."""
    t = float(theta)
    n = pp.cardinality.sample(t, rng)
    return Configuration(tuple(pp.spatial.sample(t, rng) for _ in range(n)))


def score_iid_pp(
    pp: IIDPointProcess, theta: float | ParamValue, config: Configuration
) -> ScoreValue:
    """Score of a configuration under the i.i.d. process.

    Equals the cardinality score at n plus the sum of per-point spatial
    scores; this is the product rule applied stratum by stratum (the ordering
    constant is theta-free and drops out, see the module docstring).
    Off-support configurations yield an undefined score.
    """
    t = float(theta)
    p_n = pp.cardinality.prob(t, config.n)
    if p_n <= 0.0:
        return ScoreValue.undefined()
    acc = ScoreValue(pp.cardinality.dtheta_prob(t, config.n) / p_n)
    for point in config.points:
        acc = product_score(acc, spatial_score(pp.spatial, t, point))
        if not acc.defined:
            return acc
    return acc


def duplicate(config: Configuration) -> Configuration:
    """Each point with its multiplicity doubled."""
    return Configuration(config.points + config.points)


def dedup(config: Configuration) -> Configuration:
    """Inverse of :func:`duplicate`.

    Raises :class:`NotDuplicatedError` when any multiplicity is odd, which
    signals a configuration outside the duplicated process's support.
    """
    counts = config.counts()
    points: list[Point] = []
    for point, c in counts.items():
        if c % 2 != 0:
            raise NotDuplicatedError(
                f"multiplicity {c} of {point!r} is odd; not a duplicated configuration"
            )
        points.extend([point] * (c // 2))
    return Configuration(tuple(points))


def score_duplicated(
    pp: IIDPointProcess, theta: float | ParamValue, config: Configuration
) -> ScoreValue:
    """Score of the point process whose every point is reported twice.

    The doubling map is a theta-free bijection onto its support, so the score
    of the duplicated process is the base score evaluated at the deduplicated
    configuration; odd multiplicities are off-support.
    """
    try:
        base = dedup(config)
    except NotDuplicatedError:
        return ScoreValue.undefined()
    return score_iid_pp(pp, theta, base)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of ``parts`` nonnegative ints summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def iid_outcome_count(pp: IIDPointProcess) -> int:
    """Number of distinct multisets the enumeration will visit."""
    if not isinstance(pp.spatial, AtomicFamily):
        raise ValidationError("enumeration requires an atomic spatial family")
    r = len(pp.spatial.atoms)
    return sum(
        math.comb(n + r - 1, r - 1) for n in range(pp.cardinality.n_max + 1)
    )


def enumerate_iid_outcomes(
    pp: IIDPointProcess,
    theta: float | ParamValue,
    max_outcomes: int = 1_000_000,
) -> Iterator[tuple[Configuration, float, ScoreValue]]:
    """Exact support enumeration of an i.i.d. process with atomic points.

    Yields ``(configuration, probability, score)`` over all multisets with
    positive probability, in deterministic order.  The probability of a
    multiset aggregates all orderings, i.e. it carries the multinomial
    coefficient; scores are ordering-free so this is the efficient stratum.
    """
    t = float(theta)
    if not isinstance(pp.spatial, AtomicFamily):
        raise ValidationError("enumeration requires an atomic spatial family")
    if iid_outcome_count(pp) > max_outcomes:
        raise EnumerationLimitError(
            f"{iid_outcome_count(pp)} outcomes exceed the bound {max_outcomes}"
        )
    atoms = pp.spatial.atoms
    r = len(atoms)
    card_probs = pp.cardinality.probs(t)
    masses = [pp.spatial.mass(t, a) for a in atoms]
    log_masses = [math.log(m) if m > 0 else -math.inf for m in masses]
    for n in range(pp.cardinality.n_max + 1):
        pn = card_probs[n]
        if pn <= 0.0:
            continue
        log_pn = math.log(pn)
        for comp in _compositions(n, r):
            log_p = log_pn + math.lgamma(n + 1)
            dead = False
            for k, lm in zip(comp, log_masses):
                if k == 0:
                    continue
                if lm == -math.inf:
                    dead = True
                    break
                log_p += k * lm - math.lgamma(k + 1)
            if dead:
                continue
            points: list[Point] = []
            for atom, k in zip(atoms, comp):
                points.extend([atom] * k)
            config = Configuration(tuple(points))
            yield config, math.exp(log_p), score_iid_pp(pp, t, config)


def enumerate_duplicated_outcomes(
    pp: IIDPointProcess,
    theta: float | ParamValue,
    max_outcomes: int = 1_000_000,
) -> Iterator[tuple[Configuration, float, ScoreValue]]:
    """Support enumeration of the duplicated process."""
    for config, p, _ in enumerate_iid_outcomes(pp, theta, max_outcomes):
        doubled = duplicate(config)
        yield doubled, p, score_duplicated(pp, theta, doubled)
