"""Fisher information estimators and information-loss reports.

Information is always the expectation of the squared score.  Three routes
are provided and kept deliberately independent of each other so they can
adjudicate one another:

* ``fisher_enumerate``: exact sum over an enumerable outcome space,
* ``fisher_mc``: Monte Carlo mean of squared scores with a standard error,
* ``fisher_iid_analytic``: closed form for i.i.d. processes, exposing both
  candidate coefficients of the per-point term (see below).

Coefficient adjudication.  For an i.i.d. process with cardinality pmf pi and
per-point information I_X there are two plausible closed forms,
``I_N + E[N] I_X`` and ``I_N + E[N^2] I_X``; they differ whenever
Var(N) > 0.  Because the centered per-point scores are uncorrelated, the
cross terms of the squared configuration score vanish and exact enumeration
picks out the E[N] coefficient.  ``adjudicate_coefficient_mode`` reruns that
comparison on any collection of enumerable models; both modes stay available
in ``fisher_iid_analytic`` so the adjudication is reproducible and visible.

Monte Carlo determinism.  Samples are split into fixed-size chunks, each
with its own seed spawned from the root seed; chunk aggregates are reduced
by pairwise summation in chunk order.  The chunk layout does not depend on
the worker count, so results are bit-identical for any number of workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Protocol

import numpy as np

from .errors import (
    NumericError,
    SupportMismatchError,
    ValidationError,
)
from .kernels import (
    ClutterSpec,
    enumerate_composite_outcomes,
    enumerate_superposed_outcomes,
    thinned_process,
)
from .measures import (
    AtomicFamily,
    ContinuousFamily,
    Family,
    ParamValue,
    Point,
    ScoreValue,
    _bounds_for,
    _quad,
    product_score,
    score_atomic,
)
from .pointproc import (
    CardinalityPMF,
    Configuration,
    IIDPointProcess,
    MomentSummary,
    duplicate,
    enumerate_duplicated_outcomes,
    enumerate_iid_outcomes,
    score_duplicated,
)

MC_CHUNK_SIZE = 4096

ScoreFn = Callable[[float, Any], ScoreValue]
Sampler = Callable[[float, np.random.Generator], Any]


@dataclass(frozen=True)
class FisherEstimate:
    """An information value with its provenance.

    ``std_error`` is zero for the exact methods; ``samples`` is the Monte
    Carlo sample count, or the number of enumerated outcomes, or zero for
    closed forms.
    """

    value: float
    std_error: float
    samples: int
    method: str

    def __post_init__(self) -> None:
        if self.method not in ("analytic", "enumeration", "monte-carlo"):
            raise ValidationError(f"unknown method {self.method!r}")
        if self.value < 0.0:
            raise ValidationError(f"negative information {self.value!r}")
        if self.std_error < 0.0:
            raise ValidationError("negative standard error")
        if self.method != "monte-carlo" and self.std_error != 0.0:
            raise ValidationError("exact methods must report zero standard error")


@dataclass(frozen=True)
class LossReport:
    """Information before and after a kernel, with a strictness call.

    ``strict`` means the drop is resolvable at the available precision:
    beyond three combined standard errors for Monte Carlo inputs, beyond
    1e-10 when both inputs are exact.
    """

    before: FisherEstimate
    after: FisherEstimate
    gap: float
    strict: bool


class EnumerableModel(Protocol):
    """Anything exposing exact outcomes as (probability, score) pairs."""

    def outcomes(self, theta: float) -> Iterable[tuple[float, ScoreValue]]: ...


# ---------------------------------------------------------------------------
# Enumerable model adapters.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AtomicModel:
    family: AtomicFamily

    def outcomes(self, theta: float) -> Iterable[tuple[float, ScoreValue]]:
        for atom in self.family.atoms:
            p = self.family.mass(theta, atom)
            if p > 0:
                yield p, score_atomic(self.family, theta, atom)


@dataclass(frozen=True)
class IIDProcessModel:
    pp: IIDPointProcess
    max_outcomes: int = 1_000_000

    def outcomes(self, theta: float) -> Iterable[tuple[float, ScoreValue]]:
        for _, p, s in enumerate_iid_outcomes(self.pp, theta, self.max_outcomes):
            yield p, s


@dataclass(frozen=True)
class ThinnedProcessModel:
    pp: IIDPointProcess
    alpha: float
    max_outcomes: int = 1_000_000

    def outcomes(self, theta: float) -> Iterable[tuple[float, ScoreValue]]:
        thinned = thinned_process(self.pp, self.alpha)
        for _, p, s in enumerate_iid_outcomes(thinned, theta, self.max_outcomes):
            yield p, s


@dataclass(frozen=True)
class SuperposedProcessModel:
    pp: IIDPointProcess
    clutter: ClutterSpec
    max_outcomes: int = 1_000_000

    def outcomes(self, theta: float) -> Iterable[tuple[float, ScoreValue]]:
        for _, p, s in enumerate_superposed_outcomes(
            self.pp, self.clutter, theta, self.max_outcomes
        ):
            yield p, s


@dataclass(frozen=True)
class CompositeProcessModel:
    pp: IIDPointProcess
    alpha: float
    clutter: ClutterSpec
    max_outcomes: int = 1_000_000

    def outcomes(self, theta: float) -> Iterable[tuple[float, ScoreValue]]:
        for _, p, s in enumerate_composite_outcomes(
            self.pp, self.alpha, self.clutter, theta, self.max_outcomes
        ):
            yield p, s


@dataclass(frozen=True)
class DuplicatedProcessModel:
    pp: IIDPointProcess
    max_outcomes: int = 1_000_000

    def outcomes(self, theta: float) -> Iterable[tuple[float, ScoreValue]]:
        for _, p, s in enumerate_duplicated_outcomes(self.pp, theta, self.max_outcomes):
            yield p, s


@dataclass(frozen=True)
class HierarchicalModel:
    """A latent atomic variable X and a conditional atomic law for Y given X.

    Both stages may depend on theta.  Enumerating the joint gives the joint
    information; the marginal and conditional informations are exposed so
    the additivity of information over the two stages can be checked.
    """

    x_family: AtomicFamily
    y_family: Callable[[Point], AtomicFamily]

    def outcomes(self, theta: float) -> Iterable[tuple[float, ScoreValue]]:
        for x in self.x_family.atoms:
            px = self.x_family.mass(theta, x)
            if px <= 0:
                continue
            sx = score_atomic(self.x_family, theta, x)
            fam_y = self.y_family(x)
            for y in fam_y.atoms:
                py = fam_y.mass(theta, y)
                if py <= 0:
                    continue
                yield px * py, product_score(sx, score_atomic(fam_y, theta, y))

    def information_x(self, theta: float) -> float:
        return fisher_enumerate(AtomicModel(self.x_family), theta).value

    def information_y_given_x(self, theta: float) -> float:
        total = 0.0
        for x in self.x_family.atoms:
            px = self.x_family.mass(theta, x)
            if px <= 0:
                continue
            total += px * fisher_enumerate(AtomicModel(self.y_family(x)), theta).value
        return total


# ---------------------------------------------------------------------------
# Estimators.
# ---------------------------------------------------------------------------


def fisher_enumerate(
    model: EnumerableModel, theta: float | ParamValue, max_outcomes: int = 1_000_000
) -> FisherEstimate:
    """Exact information: sum of probability times squared score."""
    t = float(theta)
    total = 0.0
    count = 0
    for prob, score in model.outcomes(t):
        count += 1
        if count > max_outcomes:
            from .errors import EnumerationLimitError

            raise EnumerationLimitError(
                f"enumeration exceeded {max_outcomes} outcomes"
            )
        if prob <= 0.0:
            continue
        if score.defined:
            total += prob * score.value * score.value
    return FisherEstimate(total, 0.0, count, "enumeration")


def mean_score_enumerated(model: EnumerableModel, theta: float | ParamValue) -> float:
    """Exact mean score; identically zero for any correctly scored model."""
    t = float(theta)
    return math.fsum(
        prob * score.value for prob, score in model.outcomes(t) if score.defined
    )


def _pairwise_sum(items: list[tuple[float, ...]]) -> tuple[float, ...]:
    """Fixed-topology pairwise reduction of aggregate tuples."""
    if len(items) == 1:
        return items[0]
    mid = len(items) // 2
    left = _pairwise_sum(items[:mid])
    right = _pairwise_sum(items[mid:])
    return tuple(a + b for a, b in zip(left, right))


def _mc_chunk(
    score_fn: ScoreFn,
    sampler: Sampler,
    theta: float,
    count: int,
    seed_seq: np.random.SeedSequence,
) -> tuple[float, float, float, float]:
    """One chunk: returns (sum s^2, sum s^4, undefined count, count)."""
    rng = np.random.default_rng(seed_seq)
    s2 = 0.0
    s4 = 0.0
    undef = 0.0
    for _ in range(count):
        x = sampler(theta, rng)
        s = score_fn(theta, x)
        if s.defined:
            q = s.value * s.value
            s2 += q
            s4 += q * q
        else:
            undef += 1.0
    return (s2, s4, undef, float(count))


def fisher_mc(
    score_fn: ScoreFn,
    sampler: Sampler,
    theta: float | ParamValue,
    m: int,
    seed: int,
    workers: int = 1,
    chunk_size: int = MC_CHUNK_SIZE,
) -> FisherEstimate:
    """Monte Carlo information estimate.

    Draws m observations, scores each, and averages the squared scores; the
    standard error is the sample standard deviation of the squared scores
    over sqrt(m).  Undefined scores count as zero and are tallied; if more
    than 0.1 percent of the draws are undefined the model and the scorer do
    not share a support and the run fails loudly.

    The chunk layout and per-chunk seeds depend only on (m, seed,
    chunk_size), so for a fixed seed the result is bit-identical for every
    worker count.
    """
    t = float(theta)
    if m < 100:
        raise ValidationError(f"m={m} is below the minimum of 100 samples")
    if chunk_size < 1:
        raise ValidationError("chunk_size must be positive")
    counts = [chunk_size] * (m // chunk_size)
    if m % chunk_size:
        counts.append(m % chunk_size)
    seeds = np.random.SeedSequence(seed).spawn(len(counts))
    if workers > 1 and len(counts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(
                pool.map(
                    lambda args: _mc_chunk(score_fn, sampler, t, *args),
                    zip(counts, seeds),
                )
            )
    else:
        stats = [
            _mc_chunk(score_fn, sampler, t, c, s) for c, s in zip(counts, seeds)
        ]
    s2, s4, undef, _ = _pairwise_sum(stats)
    if undef > 0.001 * m:
        raise SupportMismatchError(
            f"{int(undef)} of {m} sampled scores were undefined; "
            "model and scorer disagree on the support"
        )
    if undef > 0:
        warnings.warn(
            f"{int(undef)} of {m} sampled scores were undefined and counted as 0",
            RuntimeWarning,
            stacklevel=2,
        )
    value = s2 / m
    var_q = max(0.0, (s4 - s2 * s2 / m) / (m - 1))
    se = math.sqrt(var_q / m)
    # Heavy-tail guard: a batch-means estimate of the same standard error
    # should be comparable; a large ratio flags an unreliable plain SE.
    full = [st for st, c in zip(stats, counts) if c == chunk_size]
    if len(full) >= 10:
        means = np.array([st[0] / chunk_size for st in full])
        se_bm = float(means.std(ddof=1) / math.sqrt(len(means)))
        if se > 0 and se_bm > 3.0 * se:
            warnings.warn(
                f"batch-means SE {se_bm:g} far above iid SE {se:g}; "
                "squared scores look heavy-tailed",
                RuntimeWarning,
                stacklevel=2,
            )
    return FisherEstimate(value, se, m, "monte-carlo")


def mc_mean_score(
    score_fn: ScoreFn,
    sampler: Sampler,
    theta: float | ParamValue,
    m: int,
    seed: int,
) -> tuple[float, float, int]:
    """Monte Carlo mean score with standard error and undefined tally."""
    t = float(theta)
    if m < 100:
        raise ValidationError(f"m={m} is below the minimum of 100 samples")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    s1 = 0.0
    s2 = 0.0
    undef = 0
    for _ in range(m):
        x = sampler(t, rng)
        s = score_fn(t, x)
        if s.defined:
            s1 += s.value
            s2 += s.value * s.value
        else:
            undef += 1
    mean = s1 / m
    var = max(0.0, (s2 - s1 * s1 / m) / (m - 1))
    return mean, math.sqrt(var / m), undef


def memoize_score(score_fn: ScoreFn) -> ScoreFn:
    """Cache scores by (theta, observation); observations must be hashable.

    Marginal scores of discrete models are expensive relative to sampling
    and configurations repeat heavily, so Monte Carlo loops over atomic
    models benefit enormously.
    """
    cache: dict[tuple[float, Any], ScoreValue] = {}

    def wrapped(theta: float, x: Any) -> ScoreValue:
        key = (theta, x)
        hit = cache.get(key)
        if hit is None:
            hit = score_fn(theta, x)
            cache[key] = hit
        return hit

    return wrapped


# ---------------------------------------------------------------------------
# Closed forms and decompositions.
# ---------------------------------------------------------------------------


def fisher_quadrature(
    family: ContinuousFamily, theta: float | ParamValue, quad_tol: float = 1e-10
) -> FisherEstimate:
    """Information of a 1-d dominated family by adaptive quadrature."""
    t = float(theta)
    lo, hi = _bounds_for(family, t)

    def integrand(x: float) -> float:
        lp = family.log_density(t, x)
        if lp == -math.inf:
            return 0.0
        s = family.dtheta_log_density(t, x)
        return s * s * math.exp(lp)

    return FisherEstimate(max(0.0, _quad(integrand, lo, hi, quad_tol)), 0.0, 0, "analytic")


def spatial_information(
    spatial: Family, theta: float | ParamValue, quad_tol: float = 1e-10
) -> float:
    """Per-point information I_X, exact for atoms, quadrature otherwise."""
    t = float(theta)
    if isinstance(spatial, AtomicFamily):
        total = 0.0
        for atom in spatial.atoms:
            m = spatial.mass(t, atom)
            if m > 0:
                d = spatial.dtheta_mass(t, atom)
                total += d * d / m
        return total
    return fisher_quadrature(spatial, t, quad_tol).value


def cardinality_information(card: CardinalityPMF, theta: float | ParamValue) -> float:
    """Information I_N of the cardinality pmf alone."""
    t = float(theta)
    p = card.probs(t)
    d = card.dtheta_probs(t)
    total = 0.0
    for pn, dn in zip(p, d):
        if pn > 0:
            total += dn * dn / pn
        elif dn != 0.0:
            raise NumericError(
                "cardinality has zero probability with nonzero derivative; "
                "information is not defined"
            )
    return total


COEFFICIENT_MODES = ("E_N", "E_N2")


def fisher_iid_analytic(
    pp: IIDPointProcess,
    theta: float | ParamValue,
    coefficient_mode: str = "E_N",
    quad_tol: float = 1e-10,
) -> FisherEstimate:
    """Closed-form information of an i.i.d. process.

    ``I_N + coef * I_X`` with ``coef`` equal to E[N] (mode ``"E_N"``, the
    enumeration-adjudicated coefficient) or E[N^2] (mode ``"E_N2"``, kept
    available for comparison; it overcounts whenever Var(N) > 0 because the
    centered per-point scores are uncorrelated).
    """
    if coefficient_mode not in COEFFICIENT_MODES:
        raise ValidationError(
            f"coefficient_mode must be one of {COEFFICIENT_MODES}, "
            f"got {coefficient_mode!r}"
        )
    t = float(theta)
    from .pointproc import moments

    ms = moments(pp.cardinality, t)
    coef = ms.e_n if coefficient_mode == "E_N" else ms.e_n2
    value = cardinality_information(pp.cardinality, t) + coef * spatial_information(
        pp.spatial, t, quad_tol
    )
    return FisherEstimate(value, 0.0, 0, "analytic")


def adjudicate_coefficient_mode(
    processes: Iterable[IIDPointProcess],
    theta: float | ParamValue,
    tol: float = 1e-12,
) -> str:
    """Which closed-form coefficient matches exact enumeration on every model.

    Exactly one mode must survive across the given processes; anything else
    raises, since it would mean the closed form is wrong or the models are
    not discriminating.
    """
    t = float(theta)
    surviving = list(COEFFICIENT_MODES)
    for pp in processes:
        exact = fisher_enumerate(IIDProcessModel(pp), t).value
        surviving = [
            mode
            for mode in surviving
            if abs(fisher_iid_analytic(pp, t, mode).value - exact) <= tol
        ]
    if len(surviving) != 1:
        raise NumericError(
            f"coefficient adjudication is ambiguous: surviving modes {surviving}"
        )
    return surviving[0]


def relative_thinning_loss(
    ms: MomentSummary, alpha: float, alpha_prime: float
) -> float:
    """Information drop between thinning levels, relative to I_X.

    ``((a - a') - (a^2 - a'^2)) E[N] + (a^2 - a'^2) E[N^2]`` for
    ``a' <= a``; nonnegative because E[N^2] >= E[N] for integer counts.

    Worked substitutions at (alpha, alpha') = (1, 0.5), used as frozen
    reference values by the check and acceptance suites:

    * exactly two points (E[N] = 2, E[N^2] = 4): loss = 2.5 x I_X
    * Poisson mean 2 counts (E[N] = 2, E[N^2] = 6): loss = 4.0 x I_X
    """
    if not (0.0 <= alpha_prime <= alpha <= 1.0):
        raise ValidationError(
            f"need 0 <= alpha_prime <= alpha <= 1, got {alpha_prime}, {alpha}"
        )
    da = alpha - alpha_prime
    da2 = alpha**2 - alpha_prime**2
    return (da - da2) * ms.e_n + da2 * ms.e_n2


def loss_report(before: FisherEstimate, after: FisherEstimate) -> LossReport:
    """Gap between two estimates of the same theta, with a strictness call."""
    gap = before.value - after.value
    if before.std_error == 0.0 and after.std_error == 0.0:
        strict = gap > 1e-10
    else:
        combined = math.hypot(before.std_error, after.std_error)
        strict = gap > 3.0 * combined
    return LossReport(before, after, gap, strict)


def additivity_residual(model: HierarchicalModel, theta: float | ParamValue) -> float:
    """| I(X, Y) - I(Y | X) - I(X) | by exact enumeration of the joint."""
    t = float(theta)
    joint = fisher_enumerate(model, t).value
    return abs(joint - model.information_y_given_x(t) - model.information_x(t))


def consistency_residual(
    family: Family,
    theta: float | ParamValue,
    eps: float | None = None,
    quad_tol: float = 1e-10,
) -> float:
    """Two-route information residual.

    Route one takes the expectation of the squared score; route two uses the
    quotient form, squared density derivative over density.  For dominated
    families the derivative of route two is rebuilt from central finite
    differences of the density itself, so agreement certifies that the
    declared derivative really is the derivative of the declared density.
    For atomic families both routes are exact sums (finite differencing of
    atom masses is already exercised, with exact expectations, by
    :func:`fisherpp.measures.weak_derivative_residual`).
    """
    t = float(theta)
    e = 1e-6 * max(1.0, abs(t)) if eps is None else eps
    if isinstance(family, AtomicFamily):
        weak = 0.0
        classical = 0.0
        for atom in family.atoms:
            m = family.mass(t, atom)
            if m <= 0:
                continue
            d = family.dtheta_mass(t, atom)
            s = d / m
            weak += m * s * s
            classical += d * d / m
        return abs(weak - classical)
    weak = fisher_quadrature(family, t, quad_tol).value
    lo, hi = _bounds_for(family, t)

    def integrand(x: float) -> float:
        lp = family.log_density(t, x)
        if lp == -math.inf:
            return 0.0
        p = math.exp(lp)
        fd = (
            math.exp(family.log_density(t + e, x))
            - math.exp(family.log_density(t - e, x))
        ) / (2.0 * e)
        return fd * fd / p

    classical = _quad(integrand, lo, hi, quad_tol)
    return abs(weak - classical)
