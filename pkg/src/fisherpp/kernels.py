"""Theta-free observation kernels and the marginal scores they induce.

Three kernels are implemented: random permutation of an ordered vector,
independent thinning of a configuration, and superposition with independent
clutter.  None of them depends on theta, so conditioning the latent score on
the observation gives the observed-process score, and each kernel comes with
a closed-form marginal score plus an exact conditional-expectation oracle
(:func:`conditional_score_oracle`) that recomputes the same quantity by brute
force over an enumerable latent space.  Agreement of the two routes is the
core correctness check of the package.

Numerical conventions: mixture densities are accumulated in the log domain
with log-sum-exp; score numerators carry signs, so they are accumulated as
(sign, log magnitude) pairs.  Enumeration bounds: permutations are expanded
for vectors of length at most 8; subset sums for superposition are formed
for configurations of at most 20 points; oracle enumerations are capped at
one million latent/output pairs.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Any, Iterator, Sequence

import numpy as np

from .errors import EnumerationLimitError, ValidationError
from .measures import (
    AtomicFamily,
    ContinuousFamily,
    Family,
    ParamValue,
    Point,
    ScoreValue,
    score_atomic,
)
from .pointproc import (
    CardinalityPMF,
    Configuration,
    IIDPointProcess,
    MomentSummary,
    enumerate_iid_outcomes,
    score_iid_pp,
    spatial_log_density,
    spatial_score,
)

MAX_PERMUTATION_N = 8
MAX_SUBSET_POINTS = 20
MAX_ORACLE_OUTCOMES = 1_000_000

# Clutter families are theta-free by contract; they are always evaluated at
# this fixed dummy parameter value.
CLUTTER_THETA = 0.0


def _logsumexp_list(logs: Sequence[float]) -> float:
    """Max-shifted log-sum-exp of a short list; -inf when the list is empty.

    These mixtures typically have a handful of terms, so a plain Python
    accumulation beats an array round trip in the per-sample hot path.
    """
    if not logs:
        return -math.inf
    m = max(logs)
    if m == -math.inf:
        return -math.inf
    return m + math.log(math.fsum(math.exp(v - m) for v in logs))


def _signed_log_ratio(
    num_logs: Sequence[float], num_signs: Sequence[float], log_den: float
) -> float:
    """exp(log-sum of signed numerator terms - log_den), 0.0 on cancellation."""
    m = max(num_logs)
    if m == -math.inf:
        return 0.0
    acc = math.fsum(s * math.exp(v - m) for v, s in zip(num_logs, num_signs))
    if acc == 0.0:
        return 0.0
    return math.copysign(math.exp(m - log_den + math.log(abs(acc))), acc)


@dataclass(frozen=True)
class PermutationKernel:
    """A distribution over permutations of n slots.

    ``perms[i]`` is a tuple ``sigma`` meaning the i-th permutation maps an
    input vector x to ``(x[sigma[0]], ..., x[sigma[n-1]])``.
    """

    n: int
    perms: tuple[tuple[int, ...], ...]
    probs: tuple[float, ...]
    kind: str = "custom"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError("permutation kernel needs n >= 1")
        if len(self.perms) != len(self.probs) or not self.perms:
            raise ValidationError("permutation support and probabilities mismatch")
        if len(set(self.perms)) != len(self.perms):
            raise ValidationError("duplicate permutations in support")
        base = tuple(range(self.n))
        for sigma in self.perms:
            if tuple(sorted(sigma)) != base:
                raise ValidationError(f"{sigma!r} is not a permutation of 0..{self.n - 1}")
        if any(p < 0 for p in self.probs):
            raise ValidationError("negative permutation probability")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValidationError("permutation probabilities do not sum to 1")

    @classmethod
    def uniform(cls, n: int, max_n: int = MAX_PERMUTATION_N) -> "PermutationKernel":
        if n > max_n:
            raise EnumerationLimitError(
                f"uniform permutation kernel with n={n} exceeds the bound {max_n}"
            )
        perms = tuple(itertools.permutations(range(n)))
        w = 1.0 / len(perms)
        return cls(n, perms, tuple(w for _ in perms), kind="uniform")

    @classmethod
    def identity(cls, n: int) -> "PermutationKernel":
        return cls(n, (tuple(range(n)),), (1.0,), kind="identity")

    @classmethod
    def from_probs(
        cls, n: int, table: dict[tuple[int, ...], float]
    ) -> "PermutationKernel":
        items = sorted(table.items())
        return cls(n, tuple(k for k, _ in items), tuple(v for _, v in items))

    def support(self) -> Iterator[tuple[tuple[int, ...], float]]:
        for sigma, p in zip(self.perms, self.probs):
            if p > 0:
                yield sigma, p

    def sample(self, rng: np.random.Generator) -> tuple[int, ...]:
        if self.kind == "uniform":
            return self.perms[int(rng.integers(len(self.perms)))]
        r = rng.random()
        acc = 0.0
        for sigma, p in zip(self.perms, self.probs):
            acc += p
            if r < acc:
                return sigma
        return self.perms[-1]


def apply_permutation(
    kernel: PermutationKernel, x: Sequence[Point], rng: np.random.Generator
) -> tuple[Point, ...]:
    """Draw a permutation and reorder the vector with it."""
    if len(x) != kernel.n:
        raise ValidationError(
            f"vector length {len(x)} does not match kernel n={kernel.n}"
        )
    sigma = kernel.sample(rng)
    return tuple(x[i] for i in sigma)


@dataclass(frozen=True)
class ThinningKernel:
    """Independent thinning: each point kept with probability alpha."""

    alpha: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0):
            raise ValidationError(f"alpha={self.alpha} outside [0, 1]")


def apply_thinning(
    kernel: ThinningKernel, config: Configuration, rng: np.random.Generator
) -> Configuration:
    kept = tuple(p for p in config.points if rng.random() < kernel.alpha)
    return Configuration(kept)


@dataclass(frozen=True)
class ClutterSpec:
    """An independent clutter process to superpose onto the observation.

    Both components must be theta-free: the cardinality is checked by flag
    and the spatial family is probed for a vanishing derivative.
    """

    clutter_card: CardinalityPMF
    clutter_spatial: Family

    def __post_init__(self) -> None:
        if self.clutter_card.theta_dependent:
            raise ValidationError("clutter cardinality must be theta-free")
        if isinstance(self.clutter_spatial, AtomicFamily):
            for atom in self.clutter_spatial.atoms:
                if self.clutter_spatial.dtheta_mass(CLUTTER_THETA, atom) != 0.0:
                    raise ValidationError("clutter spatial family must be theta-free")
        else:
            probe = np.random.default_rng(0)
            for _ in range(3):
                x = self.clutter_spatial.sample(CLUTTER_THETA, probe)
                if self.clutter_spatial.dtheta_log_density(CLUTTER_THETA, x) != 0.0:
                    raise ValidationError("clutter spatial family must be theta-free")


def sample_clutter(spec: ClutterSpec, rng: np.random.Generator) -> Configuration:
    n = spec.clutter_card.sample(CLUTTER_THETA, rng)
    return Configuration(tuple(spec.clutter_spatial.sample(CLUTTER_THETA, rng) for _ in range(n)))


def apply_superposition(
    spec: ClutterSpec, config: Configuration, rng: np.random.Generator
) -> Configuration:
    """Union of the observed configuration with an independent clutter draw."""
    return config.union(sample_clutter(spec, rng))


def _kernel_kind(kernel: Any) -> str:
    """'vector' kernels act on ordered tuples, 'configuration' ones on multisets."""
    if isinstance(kernel, PermutationKernel):
        return "vector"
    if isinstance(kernel, (ThinningKernel, ClutterSpec)):
        return "configuration"
    if isinstance(kernel, CompositeKernel):
        return kernel.kind
    raise ValidationError(f"not a kernel: {kernel!r}")


@dataclass(frozen=True)
class CompositeKernel:
    """Kernels applied in sequence; all stages must act on the same kind."""

    stages: tuple[Any, ...]

    def __post_init__(self) -> None:
        if not self.stages:
            raise ValidationError("composite kernel needs at least one stage")
        kinds = {_kernel_kind(s) for s in self.stages}
        if len(kinds) != 1:
            raise ValidationError(
                "composite stages mix vector and configuration kernels"
            )

    @property
    def kind(self) -> str:
        return _kernel_kind(self.stages[0])


def apply_kernel(kernel: Any, value: Any, rng: np.random.Generator) -> Any:
    """Forward-sample any kernel."""
    if isinstance(kernel, PermutationKernel):
        return apply_permutation(kernel, value, rng)
    if isinstance(kernel, ThinningKernel):
        return apply_thinning(kernel, value, rng)
    if isinstance(kernel, ClutterSpec):
        return apply_superposition(kernel, value, rng)
    if isinstance(kernel, CompositeKernel):
        for stage in kernel.stages:
            value = apply_kernel(stage, value, rng)
        return value
    raise ValidationError(f"not a kernel: {kernel!r}")


# ---------------------------------------------------------------------------
# Random permutation: mixture density and marginal score.
# ---------------------------------------------------------------------------


def _vector_log_density(family: Family, theta: float, xv: tuple[Point, ...]) -> float:
    if isinstance(family, AtomicFamily):
        if xv not in family.atoms:
            return -math.inf
        m = family.mass(theta, xv)
        return math.log(m) if m > 0 else -math.inf
    return family.log_density(theta, xv)


def _vector_dtheta_log_density(
    family: Family, theta: float, xv: tuple[Point, ...]
) -> float:
    if isinstance(family, AtomicFamily):
        return family.dtheta_mass(theta, xv) / family.mass(theta, xv)
    return family.dtheta_log_density(theta, xv)


def _inverse(sigma: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(sigma)
    for i, j in enumerate(sigma):
        inv[j] = i
    return tuple(inv)


def permuted_log_density(
    family: Family,
    perm_dist: PermutationKernel,
    theta: float | ParamValue,
    x_obs: Sequence[Point],
    max_n: int = MAX_PERMUTATION_N,
) -> float:
    """Log density of the randomly permuted vector at ``x_obs``.

    The observed vector y = (x[sigma[0]], ..., x[sigma[n-1]]) has density
    ``sum_sigma pi(sigma) p_theta(y o sigma^{-1})`` where composition means
    component reindexing.  Exposed separately so the marginal score can be
    cross-checked by finite differences of this function.
    """
    t = float(theta)
    n = len(x_obs)
    if n != perm_dist.n:
        raise ValidationError(f"observation length {n} != kernel n={perm_dist.n}")
    if n > max_n:
        raise EnumerationLimitError(f"permutation marginal needs n <= {max_n}")
    terms = []
    for sigma, p in perm_dist.support():
        inv = _inverse(sigma)
        xv = tuple(x_obs[inv[j]] for j in range(n))
        lp = _vector_log_density(family, t, xv)
        if lp == -math.inf:
            continue
        terms.append(math.log(p) + lp)
    return _logsumexp_list(terms)


def marginal_score_permuted(
    family: Family,
    perm_dist: PermutationKernel,
    theta: float | ParamValue,
    x_obs: Sequence[Point],
    max_n: int = MAX_PERMUTATION_N,
) -> ScoreValue:
    """Score of the permuted observation model.

    Numerator and denominator of d/dtheta log of the mixture are accumulated
    in the log domain; the numerator terms are signed.  An observation with
    zero mixture density has an undefined score.
    """
    t = float(theta)
    n = len(x_obs)
    if n != perm_dist.n:
        raise ValidationError(f"observation length {n} != kernel n={perm_dist.n}")
    if n > max_n:
        raise EnumerationLimitError(f"permutation marginal needs n <= {max_n}")
    den_logs: list[float] = []
    num_logs: list[float] = []
    num_signs: list[float] = []
    for sigma, p in perm_dist.support():
        inv = _inverse(sigma)
        xv = tuple(x_obs[inv[j]] for j in range(n))
        lp = _vector_log_density(family, t, xv)
        if lp == -math.inf:
            continue
        lw = math.log(p) + lp
        den_logs.append(lw)
        s = _vector_dtheta_log_density(family, t, xv)
        if s != 0.0:
            num_logs.append(lw + math.log(abs(s)))
            num_signs.append(math.copysign(1.0, s))
    if not den_logs:
        return ScoreValue.undefined()
    den = _logsumexp_list(den_logs)
    if not num_logs:
        return ScoreValue(0.0)
    return ScoreValue(_signed_log_ratio(num_logs, num_signs, den))


# ---------------------------------------------------------------------------
# Thinning: pushforward cardinality and marginal score.
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def _binomial_thinning_matrix(n_max: int, alpha: float) -> np.ndarray:
    """B[k, n] = C(k, n) alpha^n (1-alpha)^(k-n); rows sum to 1 exactly."""
    b = np.zeros((n_max + 1, n_max + 1))
    for k in range(n_max + 1):
        for n in range(k + 1):
            b[k, n] = math.comb(k, n) * alpha**n * (1.0 - alpha) ** (k - n)
    return b


def thinned_cardinality(card: CardinalityPMF, alpha: float) -> CardinalityPMF:
    """Cardinality of the independently thinned process.

    ``pi_alpha(n) = sum_{k >= n} pi(k) C(k, n) alpha^n (1-alpha)^(k-n)``;
    the theta-derivative propagates through the same linear map.  Keeps the
    same truncation bound since thinning never adds points, and preserves
    total mass exactly.
    """
    if not (0.0 <= alpha <= 1.0):
        raise ValidationError(f"alpha={alpha} outside [0, 1]")
    b = _binomial_thinning_matrix(card.n_max, alpha)

    def probs_fn(theta: float) -> np.ndarray:
        return card.probs(theta) @ b

    def dtheta_fn(theta: float) -> np.ndarray:
        return card.dtheta_probs(theta) @ b

    return CardinalityPMF(
        n_max=card.n_max,
        probs_fn=probs_fn,
        dtheta_fn=dtheta_fn,
        theta_dependent=card.theta_dependent,
        name=f"thinned({card.name},{alpha:g})",
    )


def second_moment_thinned(ms: MomentSummary, alpha: float) -> float:
    """E[N_alpha^2] from the base moments: (alpha - alpha^2) E[N] + alpha^2 E[N^2]."""
    if not (0.0 <= alpha <= 1.0):
        raise ValidationError(f"alpha={alpha} outside [0, 1]")
    return (alpha - alpha**2) * ms.e_n + alpha**2 * ms.e_n2


def thinned_process(pp: IIDPointProcess, alpha: float) -> IIDPointProcess:
    """The thinned i.i.d. process is i.i.d. with the pushforward cardinality
    and the unchanged spatial family."""
    return IIDPointProcess(thinned_cardinality(pp.cardinality, alpha), pp.spatial)


def marginal_score_thinned_iid(
    pp: IIDPointProcess,
    alpha: float,
    theta: float | ParamValue,
    y: Configuration,
) -> ScoreValue:
    """Score of the thinned observation.

    One-shot convenience; callers scoring many observations should build
    :func:`thinned_process` once and use :func:`score_iid_pp` directly.
    """
    return score_iid_pp(thinned_process(pp, alpha), theta, y)


# ---------------------------------------------------------------------------
# Superposition with independent clutter.
# ---------------------------------------------------------------------------


def marginal_score_superposed(
    pp: IIDPointProcess,
    clutter: ClutterSpec,
    theta: float | ParamValue,
    y: Configuration,
    max_points: int = MAX_SUBSET_POINTS,
) -> ScoreValue:
    """Score of the superposed observation by subset enumeration.

    On the n-point stratum the observed density (ordered-tuple convention) is

        sum_k pi(k) kappa(n-k) C(n,k)^{-1}
              sum_{|I|=k} prod_{i in I} mu(y_i) prod_{j not in I} c(y_j)

    where I ranges over the target positions.  Differentiating in theta hits
    pi and the mu product, and the score is the ratio of the two subset sums,
    aggregated size by size in the log domain with signed numerators.
    """
    t = float(theta)
    pts = y.points
    n = len(pts)
    if n > max_points:
        raise EnumerationLimitError(
            f"superposed configuration with n={n} exceeds the subset bound {max_points}"
        )
    card = pp.cardinality
    pi = card.probs(t)
    dpi = card.dtheta_probs(t)
    kap = clutter.clutter_card.probs(CLUTTER_THETA)
    log_mu = [spatial_log_density(pp.spatial, t, p) for p in pts]
    mu_sc = [spatial_score(pp.spatial, t, p) for p in pts]
    log_c = [spatial_log_density(clutter.clutter_spatial, CLUTTER_THETA, p) for p in pts]

    den_logs: list[float] = []
    num_logs: list[float] = []
    num_signs: list[float] = []
    for k in range(0, min(n, card.n_max) + 1):
        m = n - k
        if m > clutter.clutter_card.n_max:
            continue
        kap_m = kap[m]
        if kap_m <= 0.0:
            continue
        p_k = float(pi[k])
        dp_k = float(dpi[k])
        if p_k <= 0.0 and dp_k == 0.0:
            continue
        base = math.log(kap_m) - math.log(math.comb(n, k))
        for subset in itertools.combinations(range(n), k):
            lw = base
            ssum = 0.0
            ok = True
            for i in subset:
                if log_mu[i] == -math.inf:
                    ok = False
                    break
                lw += log_mu[i]
                ssum += mu_sc[i].value
            if not ok:
                continue
            chosen = set(subset)
            for j in range(n):
                if j in chosen:
                    continue
                if log_c[j] == -math.inf:
                    ok = False
                    break
                lw += log_c[j]
            if not ok:
                continue
            if p_k > 0.0:
                den_logs.append(math.log(p_k) + lw)
                if ssum != 0.0:
                    num_logs.append(math.log(p_k) + lw + math.log(abs(ssum)))
                    num_signs.append(math.copysign(1.0, ssum))
            if dp_k != 0.0:
                num_logs.append(lw + math.log(abs(dp_k)))
                num_signs.append(math.copysign(1.0, dp_k))
    if not den_logs:
        return ScoreValue.undefined()
    den = _logsumexp_list(den_logs)
    if not num_logs:
        return ScoreValue(0.0)
    return ScoreValue(_signed_log_ratio(num_logs, num_signs, den))


def marginal_score_composite(
    pp: IIDPointProcess,
    alpha: float,
    clutter: ClutterSpec,
    theta: float | ParamValue,
    y: Configuration,
    max_points: int = MAX_SUBSET_POINTS,
) -> ScoreValue:
    """Score after thinning then clutter: thin the cardinality, then apply
    the superposition marginal to the thinned i.i.d. process."""
    return marginal_score_superposed(
        thinned_process(pp, alpha), clutter, theta, y, max_points
    )


# ---------------------------------------------------------------------------
# Exact conditional-expectation oracle.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnumerableJointModel:
    """A latent model plus a kernel, both exactly enumerable.

    The latent component is either an i.i.d. process with an atomic spatial
    family (latent outcomes are configurations) or an atomic family whose
    atoms are ordered vectors (latent outcomes are tuples, for permutation
    kernels).  ``kernel=None`` means the observation is the latent outcome.
    """

    latent: IIDPointProcess | AtomicFamily
    kernel: Any = None


def _enumerate_latents(
    model: EnumerableJointModel, theta: float, max_outcomes: int
) -> Iterator[tuple[Any, float, ScoreValue]]:
    if isinstance(model.latent, AtomicFamily):
        fam = model.latent
        for atom in fam.atoms:
            p = fam.mass(theta, atom)
            if p > 0:
                yield atom, p, score_atomic(fam, theta, atom)
        return
    yield from enumerate_iid_outcomes(model.latent, theta, max_outcomes)


def _sub_multisets(config: Configuration) -> Iterator[tuple[Configuration, tuple[int, ...], tuple[int, ...]]]:
    items = sorted(config.counts().items())
    mults = tuple(m for _, m in items)
    pts = tuple(p for p, _ in items)
    for kept in itertools.product(*(range(m + 1) for m in mults)):
        sub_points: list[Point] = []
        for p, k in zip(pts, kept):
            sub_points.extend([p] * k)
        yield Configuration(tuple(sub_points)), kept, mults


def enumerate_clutter_configurations(
    spec: ClutterSpec,
) -> list[tuple[Configuration, float]]:
    """All clutter multisets with their probabilities (atomic clutter only)."""
    fam = spec.clutter_spatial
    if not isinstance(fam, AtomicFamily):
        raise ValidationError("exact clutter enumeration requires an atomic family")
    kap = spec.clutter_card.probs(CLUTTER_THETA)
    atoms = fam.atoms
    masses = [fam.mass(CLUTTER_THETA, a) for a in atoms]
    out: list[tuple[Configuration, float]] = []
    from .pointproc import _compositions

    for m in range(spec.clutter_card.n_max + 1):
        km = kap[m]
        if km <= 0.0:
            continue
        for comp in _compositions(m, len(atoms)):
            prob = km * math.factorial(m)
            dead = False
            points: list[Point] = []
            for atom, k, mass in zip(atoms, comp, masses):
                if k == 0:
                    continue
                if mass <= 0.0:
                    dead = True
                    break
                prob *= mass**k / math.factorial(k)
                points.extend([atom] * k)
            if dead:
                continue
            out.append((Configuration(tuple(points)), prob))
    return out


def enumerate_kernel_outputs(
    kernel: Any, x: Any
) -> Iterator[tuple[Any, float]]:
    """All possible kernel outputs from latent x, with exact probabilities."""
    if kernel is None:
        yield x, 1.0
        return
    if isinstance(kernel, PermutationKernel):
        for sigma, p in kernel.support():
            yield tuple(x[i] for i in sigma), p
        return
    if isinstance(kernel, ThinningKernel):
        a = kernel.alpha
        total = x.n
        for sub, kept, mults in _sub_multisets(x):
            ksum = sum(kept)
            prob = a**ksum * (1.0 - a) ** (total - ksum)
            for m, k in zip(mults, kept):
                prob *= math.comb(m, k)
            if prob > 0.0:
                yield sub, prob
        return
    if isinstance(kernel, ClutterSpec):
        for c, pc in enumerate_clutter_configurations(kernel):
            yield x.union(c), pc
        return
    if isinstance(kernel, CompositeKernel):
        frontier: list[tuple[Any, float]] = [(x, 1.0)]
        for stage in kernel.stages:
            nxt: list[tuple[Any, float]] = []
            for value, p in frontier:
                for out, q in enumerate_kernel_outputs(stage, value):
                    nxt.append((out, p * q))
            frontier = nxt
        yield from frontier
        return
    raise ValidationError(f"not an enumerable kernel: {kernel!r}")


def transition_pmf(kernel: Any, x: Any, y: Any) -> float:
    """Exact probability that the kernel maps latent x to observation y."""
    return math.fsum(p for out, p in enumerate_kernel_outputs(kernel, x) if out == y)


def conditional_score_oracle(
    joint: EnumerableJointModel,
    theta: float | ParamValue,
    y: Any,
    max_outcomes: int = MAX_ORACLE_OUTCOMES,
) -> ScoreValue:
    """Marginal score as an exact conditional expectation of the latent score.

    For a theta-free kernel the observed-process score at y equals
    ``E_theta[ score(X) | Y = y ]``.  This oracle computes that expectation
    by full enumeration, independently of any closed-form marginal, so the
    two can be compared.  Observations outside the reachable set yield an
    undefined score.
    """
    t = float(theta)
    num = 0.0
    den = 0.0
    work = 0
    for x, px, sx in _enumerate_latents(joint, t, max_outcomes):
        if px <= 0.0:
            continue
        for out, q in enumerate_kernel_outputs(joint.kernel, x):
            work += 1
            if work > max_outcomes:
                raise EnumerationLimitError(
                    f"oracle enumeration exceeded {max_outcomes} latent/output pairs"
                )
            if q <= 0.0 or out != y:
                continue
            den += px * q
            if sx.defined:
                num += px * q * sx.value
    if den <= 0.0:
        return ScoreValue.undefined()
    return ScoreValue(num / den)


def enumerate_superposed_outcomes(
    pp: IIDPointProcess,
    clutter: ClutterSpec,
    theta: float | ParamValue,
    max_outcomes: int = 1_000_000,
    max_points: int = MAX_SUBSET_POINTS,
) -> Iterator[tuple[Configuration, float, ScoreValue]]:
    """Exact outcome enumeration of the superposed process.

    Probabilities come from convolving the latent multiset law with the
    clutter multiset law, which does not share code with the subset-sum
    density above; scores come from :func:`marginal_score_superposed`.
    """
    t = float(theta)
    clut = enumerate_clutter_configurations(clutter)
    acc: dict[Configuration, float] = {}
    work = 0
    for x, px, _ in enumerate_iid_outcomes(pp, t, max_outcomes):
        for c, pc in clut:
            work += 1
            if work > max_outcomes:
                raise EnumerationLimitError(
                    f"superposed enumeration exceeded {max_outcomes} pairs"
                )
            yconf = x.union(c)
            acc[yconf] = acc.get(yconf, 0.0) + px * pc
    for yconf in sorted(acc):
        yield yconf, acc[yconf], marginal_score_superposed(
            pp, clutter, t, yconf, max_points
        )


def enumerate_composite_outcomes(
    pp: IIDPointProcess,
    alpha: float,
    clutter: ClutterSpec,
    theta: float | ParamValue,
    max_outcomes: int = 1_000_000,
    max_points: int = MAX_SUBSET_POINTS,
) -> Iterator[tuple[Configuration, float, ScoreValue]]:
    """Exact outcomes of thinning followed by superposition."""
    yield from enumerate_superposed_outcomes(
        thinned_process(pp, alpha), clutter, theta, max_outcomes, max_points
    )
