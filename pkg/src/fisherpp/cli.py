"""Command-line front end: estimation runs, parameter sweeps, checks.

Three subcommands:

``run``
    Load a JSON scenario configuration, estimate the information of the
    base model and (when kernels are configured) of the kernel-degraded
    observation at every theta on the grid with every requested estimator,
    and write a delimited table, a resolved-configuration sidecar, and a
    figure next to it.

``sweep``
    Same, but additionally vary one kernel parameter (the thinning keep
    rate or the clutter rate) over a grid, so the information-loss curve
    of that kernel is traced out.

``check``
    Run a named invariant suite and report one pass/fail line per check.

Exit codes: 0 on success, 1 for configuration or usage problems, 2 for
numeric or enumeration failures, 3 when an invariant check fails.

Determinism contract: a given configuration file always produces a
byte-identical table.  Every sampling cell derives its seed from the
scenario seed and the cell coordinates (theta, kernel chain, estimator),
never from wall time or row order, and the worker count only changes how
chunks are scheduled, not what they contain.  The ``ms`` column is 0 by
default; opting into ``--timing`` fills it with measured wall time and is
the one switch that breaks byte-identity.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .checks import DEFAULT_CHECK_SEED, SUITE_NAMES, run_suite
from .errors import FisherppError, NumericError, ValidationError
from .fisher import (
    AtomicModel,
    DuplicatedProcessModel,
    FisherEstimate,
    IIDProcessModel,
    SuperposedProcessModel,
    fisher_enumerate,
    fisher_iid_analytic,
    fisher_mc,
    fisher_quadrature,
    loss_report,
    memoize_score,
    spatial_information,
)
from .kernels import (
    ClutterSpec,
    PermutationKernel,
    ThinningKernel,
    apply_permutation,
    apply_thinning,
    marginal_score_permuted,
    marginal_score_superposed,
    sample_clutter,
    thinned_process,
)
from .measures import (
    AtomicFamily,
    ContinuousFamily,
    ScoreValue,
    score_atomic,
    score_continuous,
)
from .models import (
    bernoulli_cardinality,
    fixed_cardinality,
    fixed_clutter,
    gaussian_location,
    gaussian_pair,
    gaussian_pair_iid,
    gaussian_scale,
    mixture_cardinality,
    poisson_cardinality,
    poisson_clutter,
    two_point_family,
    uniform_atoms,
)
from .pointproc import (
    IIDPointProcess,
    duplicate,
    sample_iid_pp,
    score_duplicated,
    score_iid_pp,
)
from .report import (
    ResultRow,
    Series,
    figure_path_for,
    render_figure,
    write_csv,
    write_sidecar,
)

__all__ = ["CONFIG_SCHEMA", "DEFAULT_SEED", "main", "entrypoint"]

DEFAULT_SEED = 20260819

_METHODS = ("analytic", "enumeration", "monte-carlo")

# ---------------------------------------------------------------------------
# Configuration schema.  Structural validation happens here; relationships
# the schema language cannot express (kernel/model compatibility, estimator
# availability, theta domains) are checked by the builders below.
# ---------------------------------------------------------------------------

_ATOMS = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 1,
    "maxItems": 16,
    "uniqueItems": True,
}

_SPATIAL = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"const": "two-point"},
                "atoms": {**_ATOMS, "minItems": 2, "maxItems": 2},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "atoms"],
            "properties": {"kind": {"const": "uniform-atoms"}, "atoms": _ATOMS},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"const": "gaussian-location"},
                "sigma": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"const": "gaussian-scale"}},
        },
    ]
}

_CARDINALITY = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "n"],
            "properties": {
                "kind": {"const": "fixed"},
                "n": {"type": "integer", "minimum": 0, "maximum": 30},
                "n_max": {"type": "integer", "minimum": 0, "maximum": 60},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "weights"],
            "properties": {
                "kind": {"const": "mixture"},
                "weights": {
                    "type": "object",
                    "minProperties": 1,
                    "patternProperties": {
                        "^(0|[1-9][0-9]?)$": {"type": "number", "minimum": 0}
                    },
                    "additionalProperties": False,
                },
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"const": "bernoulli"}},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "rate"],
            "properties": {
                "kind": {"const": "poisson"},
                "rate": {"type": "number", "minimum": 0, "maximum": 6},
                "n_max": {"type": "integer", "minimum": 1, "maximum": 60},
            },
        },
    ]
}

_CLUTTER_SPATIAL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "atoms"],
    "properties": {"kind": {"const": "uniform-atoms"}, "atoms": _ATOMS},
}

_KERNEL = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "alpha"],
            "properties": {
                "kind": {"const": "thinning"},
                "alpha": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "clutter"],
            "properties": {
                "kind": {"const": "superposition"},
                "clutter": {
                    "oneOf": [
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["kind", "rate"],
                            "properties": {
                                "kind": {"const": "poisson"},
                                "rate": {"type": "number", "minimum": 0, "maximum": 6},
                                "n_max": {
                                    "type": "integer",
                                    "minimum": 1,
                                    "maximum": 60,
                                },
                                "spatial": _CLUTTER_SPATIAL,
                            },
                        },
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["kind", "n"],
                            "properties": {
                                "kind": {"const": "fixed"},
                                "n": {"type": "integer", "minimum": 0, "maximum": 8},
                                "spatial": _CLUTTER_SPATIAL,
                            },
                        },
                    ]
                },
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "n"],
            "properties": {
                "kind": {"const": "permutation"},
                "dist": {"enum": ["uniform", "identity"]},
                "n": {"type": "integer", "minimum": 1, "maximum": 8},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"const": "duplication"}},
        },
    ]
}

_MODEL = {
    "oneOf": _SPATIAL["oneOf"]
    + [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"const": "gaussian-pair"}},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"const": "gaussian-pair-iid"}},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "cardinality", "spatial"],
            "properties": {
                "kind": {"const": "iid-process"},
                "cardinality": _CARDINALITY,
                "spatial": _SPATIAL,
            },
        },
    ]
}

_ESTIMATOR = {
    "type": "object",
    "additionalProperties": False,
    "required": ["method"],
    "properties": {
        "method": {"enum": list(_METHODS)},
        "m": {"type": "integer", "minimum": 100, "maximum": 10000000},
    },
    "if": {"required": ["method"], "properties": {"method": {"const": "monte-carlo"}}},
    "then": {"required": ["m"]},
    "else": {"not": {"required": ["m"]}},
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["scenario", "model", "theta_grid", "estimators"],
    "properties": {
        "scenario": {"type": "string", "pattern": "^[A-Za-z0-9_-]{1,64}$"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**63 - 1},
        "model": _MODEL,
        "kernels": {"type": "array", "items": _KERNEL, "maxItems": 4},
        "theta_grid": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 1,
            "maxItems": 64,
        },
        "estimators": {
            "type": "array",
            "items": _ESTIMATOR,
            "minItems": 1,
            "maxItems": 3,
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"csv": {"type": "string", "minLength": 1}},
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["param", "grid"],
            "properties": {
                "param": {"enum": ["alpha", "rate"]},
                "grid": {
                    "type": "array",
                    "items": {"type": "number"},
                    "minItems": 1,
                    "maxItems": 64,
                },
            },
        },
    },
}


# ---------------------------------------------------------------------------
# Builders: JSON objects to library objects.
# ---------------------------------------------------------------------------


def _build_spatial(obj: dict) -> AtomicFamily | ContinuousFamily:
    kind = obj["kind"]
    if kind == "two-point":
        atoms = obj.get("atoms", [-1.0, 1.0])
        return two_point_family(float(atoms[0]), float(atoms[1]))
    if kind == "uniform-atoms":
        return uniform_atoms(tuple(float(a) for a in obj["atoms"]))
    if kind == "gaussian-location":
        return gaussian_location(float(obj.get("sigma", 1.0)))
    if kind == "gaussian-scale":
        return gaussian_scale()
    raise ValidationError(f"unknown spatial kind {kind!r}")


def _build_cardinality(obj: dict):
    kind = obj["kind"]
    if kind == "fixed":
        return fixed_cardinality(int(obj["n"]), obj.get("n_max"))
    if kind == "mixture":
        return mixture_cardinality(
            {int(k): float(v) for k, v in obj["weights"].items()}
        )
    if kind == "bernoulli":
        return bernoulli_cardinality()
    if kind == "poisson":
        return poisson_cardinality(float(obj["rate"]), int(obj.get("n_max", 30)))
    raise ValidationError(f"unknown cardinality kind {kind!r}")


def _build_model(obj: dict):
    kind = obj["kind"]
    if kind == "gaussian-pair":
        return gaussian_pair()
    if kind == "gaussian-pair-iid":
        return gaussian_pair_iid()
    if kind == "iid-process":
        return IIDPointProcess(
            _build_cardinality(obj["cardinality"]), _build_spatial(obj["spatial"])
        )
    return _build_spatial(obj)


def _build_clutter(obj: dict) -> ClutterSpec:
    spatial = _build_spatial(
        obj.get("spatial", {"kind": "uniform-atoms", "atoms": [-1.0, 1.0]})
    )
    if obj["kind"] == "poisson":
        return poisson_clutter(float(obj["rate"]), spatial, int(obj.get("n_max", 30)))
    return fixed_clutter(int(obj["n"]), spatial)


def _kernel_label(obj: dict) -> str:
    kind = obj["kind"]
    if kind == "thinning":
        return f"thinning({obj['alpha']:g})"
    if kind == "superposition":
        c = obj["clutter"]
        inner = f"poisson[{c['rate']:g}]" if c["kind"] == "poisson" else f"fixed[{c['n']}]"
        return f"superposition({inner})"
    if kind == "permutation":
        return f"permutation({obj.get('dist', 'uniform')}[{obj['n']}])"
    return "duplication"


def _chain_label(kernel_objs: list[dict]) -> str:
    if not kernel_objs:
        return "none"
    return "+".join(_kernel_label(k) for k in kernel_objs)


# ---------------------------------------------------------------------------
# Estimation chains.  A chain bundles everything the estimators need for
# one observation model: an exact closed form and an enumerable adapter
# when they exist, and a score/sampler pair (always available).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Chain:
    label: str
    analytic: Callable[[float], FisherEstimate] | None
    enum_model: Any | None
    score_fn: Callable[[float, Any], ScoreValue]
    sampler: Callable[[float, np.random.Generator], Any]
    memoizable: bool


def _family_chain(fam: AtomicFamily | ContinuousFamily) -> _Chain:
    if isinstance(fam, AtomicFamily):
        return _Chain(
            label="none",
            analytic=lambda t: FisherEstimate(
                spatial_information(fam, t), 0.0, 0, "analytic"
            ),
            enum_model=AtomicModel(fam),
            score_fn=lambda t, x: score_atomic(fam, t, x),
            sampler=lambda t, r: fam.sample(t, r),
            memoizable=True,
        )
    analytic = None
    if fam.dim == 1 and fam.integration_bounds is not None:
        analytic = lambda t: fisher_quadrature(fam, t)  # noqa: E731
    return _Chain(
        label="none",
        analytic=analytic,
        enum_model=None,
        score_fn=lambda t, x: score_continuous(fam, t, x),
        sampler=lambda t, r: fam.sample(t, r),
        memoizable=False,
    )


def _process_chain(pp: IIDPointProcess) -> _Chain:
    atomic = isinstance(pp.spatial, AtomicFamily)
    return _Chain(
        label="none",
        analytic=lambda t: fisher_iid_analytic(pp, t),
        enum_model=IIDProcessModel(pp) if atomic else None,
        score_fn=lambda t, y: score_iid_pp(pp, t, y),
        sampler=lambda t, r: sample_iid_pp(pp, t, r),
        memoizable=atomic,
    )


def _base_chain(model: Any) -> _Chain:
    if isinstance(model, IIDPointProcess):
        return _process_chain(model)
    return _family_chain(model)


def _kerneled_chain(model: Any, kernel_objs: list[dict]) -> _Chain | None:
    """The observation chain after the configured kernels, or None if empty."""
    if not kernel_objs:
        return None
    label = _chain_label(kernel_objs)
    kinds = [k["kind"] for k in kernel_objs]

    if "permutation" in kinds:
        if len(kernel_objs) != 1:
            raise ValidationError("a permutation kernel cannot be combined")
        if not (isinstance(model, ContinuousFamily) and model.dim > 1):
            raise ValidationError(
                "permutation kernels act on ordered coordinate vectors; use a "
                "vector-valued model such as gaussian-pair"
            )
        obj = kernel_objs[0]
        n = int(obj["n"])
        if n != model.dim:
            raise ValidationError(
                f"permutation size {n} does not match the model dimension "
                f"{model.dim}"
            )
        kern = (
            PermutationKernel.identity(n)
            if obj.get("dist", "uniform") == "identity"
            else PermutationKernel.uniform(n)
        )
        return _Chain(
            label=label,
            analytic=None,
            enum_model=None,
            score_fn=lambda t, y: marginal_score_permuted(model, kern, t, y),
            sampler=lambda t, r: apply_permutation(kern, model.sample(t, r), r),
            memoizable=False,
        )

    if not isinstance(model, IIDPointProcess):
        raise ValidationError(
            f"{kinds[0]} kernels act on point configurations; the model must "
            "be an iid-process"
        )

    if "duplication" in kinds:
        if len(kernel_objs) != 1:
            raise ValidationError("the duplication kernel cannot be combined")
        pp = model
        atomic = isinstance(pp.spatial, AtomicFamily)
        return _Chain(
            label=label,
            # doubling multiplicities is invertible, so the closed form of
            # the underlying process applies unchanged
            analytic=lambda t: fisher_iid_analytic(pp, t),
            enum_model=DuplicatedProcessModel(pp) if atomic else None,
            score_fn=lambda t, y: score_duplicated(pp, t, y),
            sampler=lambda t, r: duplicate(sample_iid_pp(pp, t, r)),
            memoizable=atomic,
        )

    split = kinds.index("superposition") if "superposition" in kinds else len(kinds)
    if any(k != "thinning" for k in kinds[:split]) or any(
        k != "superposition" for k in kinds[split:]
    ) or len(kinds[split:]) > 1:
        raise ValidationError(
            "kernel chains must be thinning stages optionally followed by a "
            "single superposition"
        )

    thinning_stages = [ThinningKernel(float(k["alpha"])) for k in kernel_objs[:split]]
    eff = model
    for stage in thinning_stages:
        eff = thinned_process(eff, stage.alpha)
    clutter = (
        _build_clutter(kernel_objs[split]["clutter"]) if split < len(kinds) else None
    )
    atomic = isinstance(model.spatial, AtomicFamily)

    def sampler(t: float, r: np.random.Generator):
        y = sample_iid_pp(model, t, r)
        for stage in thinning_stages:
            y = apply_thinning(stage, y, r)
        if clutter is not None:
            y = y.union(sample_clutter(clutter, r))
        return y

    if clutter is None:
        return _Chain(
            label=label,
            analytic=lambda t: fisher_iid_analytic(eff, t),
            enum_model=IIDProcessModel(eff) if atomic else None,
            score_fn=lambda t, y: score_iid_pp(eff, t, y),
            sampler=sampler,
            memoizable=atomic,
        )
    clutter_atomic = isinstance(clutter.clutter_spatial, AtomicFamily)
    return _Chain(
        label=label,
        analytic=None,
        enum_model=(
            SuperposedProcessModel(eff, clutter) if atomic and clutter_atomic else None
        ),
        score_fn=lambda t, y: marginal_score_superposed(eff, clutter, t, y),
        sampler=sampler,
        memoizable=atomic and clutter_atomic,
    )


def _validate_methods(estimators: list[dict], chains: list[_Chain]) -> None:
    for est in estimators:
        method = est["method"]
        for chain in chains:
            if method == "analytic" and chain.analytic is None:
                raise ValidationError(
                    f"method 'analytic' is unavailable for the "
                    f"{chain.label!r} chain"
                )
            if method == "enumeration" and chain.enum_model is None:
                raise ValidationError(
                    f"method 'enumeration' needs finitely enumerable outcomes "
                    f"(atomic points); unavailable for the {chain.label!r} chain"
                )


def _validate_thetas(model: Any, thetas: list[float]) -> None:
    spatial = model.spatial if isinstance(model, IIDPointProcess) else model
    lo, hi = spatial.theta_domain
    for t in thetas:
        if not (lo < t < hi):
            raise ValidationError(
                f"theta={t:g} is outside the open parameter domain "
                f"({lo:g}, {hi:g}) of the model"
            )
    if isinstance(model, IIDPointProcess):
        for t in thetas:
            model.cardinality.validate(t)
    if isinstance(spatial, AtomicFamily):
        for t in thetas:
            spatial.validate(t)


# ---------------------------------------------------------------------------
# Cell estimation.
# ---------------------------------------------------------------------------


def _cell_seed(master: int, scenario: str, theta: float, label: str, method: str) -> int:
    """A seed tied to the cell's coordinates, not to evaluation order."""
    key = f"{scenario}|{theta:.17g}|{label}|{method}"
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 8], "big") for i in (0, 8)]
    ss = np.random.SeedSequence([int(master)] + words)
    return int(ss.generate_state(1, np.uint64)[0])


def _estimate(
    chain: _Chain,
    theta: float,
    est: dict,
    scenario: str,
    master_seed: int,
    workers: int,
) -> FisherEstimate:
    method = est["method"]
    if method == "analytic":
        return chain.analytic(theta)
    if method == "enumeration":
        return fisher_enumerate(chain.enum_model, theta)
    score_fn = memoize_score(chain.score_fn) if chain.memoizable else chain.score_fn
    return fisher_mc(
        score_fn,
        chain.sampler,
        theta,
        int(est["m"]),
        _cell_seed(master_seed, scenario, theta, chain.label, method),
        workers=workers,
    )


# ---------------------------------------------------------------------------
# run / sweep drivers.
# ---------------------------------------------------------------------------


def _load_config(path: str) -> dict:
    import jsonschema

    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    config = json.loads(text)
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ValidationError(f"config invalid at {e.json_path}: {e.message}")
    return config


def _resolve_config(config: dict, out_csv: Path) -> dict:
    resolved = dict(config)
    resolved.setdefault("seed", DEFAULT_SEED)
    resolved.setdefault("kernels", [])
    resolved["output"] = {"csv": str(out_csv)}
    return resolved


def _out_path(config: dict, args: argparse.Namespace) -> Path:
    if args.out:
        return Path(args.out)
    csv = config.get("output", {}).get("csv")
    return Path(csv) if csv else Path(f"{config['scenario']}.csv")


def _timed(fn: Callable[[], FisherEstimate], timing: bool) -> tuple[FisherEstimate, int]:
    if not timing:
        return fn(), 0
    start = time.perf_counter()
    est = fn()
    return est, int(round((time.perf_counter() - start) * 1000.0))


def _emit(
    rows: list[ResultRow],
    scenario: str,
    theta: float,
    chain: _Chain,
    est: FisherEstimate,
    ms: int,
    baseline: FisherEstimate | None,
) -> None:
    if baseline is None:
        gap, strict = 0.0, False
    else:
        rep = loss_report(baseline, est)
        gap, strict = rep.gap, rep.strict
    rows.append(
        ResultRow(
            scenario=scenario,
            theta=theta,
            kernels=chain.label,
            method=est.method,
            fisher=est.value,
            se=est.std_error,
            samples=est.samples,
            gap=gap,
            strict=strict,
            ms=ms,
        )
    )


def _run_cells(config: dict, args: argparse.Namespace, sweep: bool) -> tuple[
    list[ResultRow], list[Series], str
]:
    scenario = config["scenario"]
    seed = int(config.get("seed", DEFAULT_SEED))
    thetas = [float(t) for t in config["theta_grid"]]
    estimators = config["estimators"]
    kernel_objs = config.get("kernels", [])
    model = _build_model(config["model"])
    _validate_thetas(model, thetas)

    base = _base_chain(model)
    chains = [base]
    kern_variants: list[tuple[float | None, _Chain]] = []
    if sweep:
        sweep_cfg = config.get("sweep")
        if not sweep_cfg:
            raise ValidationError("the sweep subcommand needs a 'sweep' block")
        for value in sweep_cfg["grid"]:
            variant = _substitute_sweep(kernel_objs, sweep_cfg["param"], float(value))
            kern_variants.append((float(value), _kerneled_chain(model, variant)))
        chains += [c for _, c in kern_variants]
    else:
        kerneled = _kerneled_chain(model, kernel_objs)
        if kerneled is not None:
            kern_variants.append((None, kerneled))
            chains.append(kerneled)
    _validate_methods(estimators, chains)

    workers = max(1, args.workers)
    rows: list[ResultRow] = []
    baselines: dict[tuple[float, str], FisherEstimate] = {}

    for theta in thetas:
        for est_cfg in estimators:
            est, ms = _timed(
                lambda: _estimate(base, theta, est_cfg, scenario, seed, workers),
                args.timing,
            )
            baselines[(theta, est_cfg["method"])] = est
            _emit(rows, scenario, theta, base, est, ms, None)
        if not sweep:
            for _, chain in kern_variants:
                for est_cfg in estimators:
                    est, ms = _timed(
                        lambda: _estimate(chain, theta, est_cfg, scenario, seed, workers),
                        args.timing,
                    )
                    _emit(
                        rows, scenario, theta, chain, est, ms,
                        baselines[(theta, est_cfg["method"])],
                    )

    sweep_points: dict[tuple[str, float], list[tuple[float, float, float]]] = {}
    if sweep:
        for value, chain in kern_variants:
            for theta in thetas:
                for est_cfg in estimators:
                    est, ms = _timed(
                        lambda: _estimate(chain, theta, est_cfg, scenario, seed, workers),
                        args.timing,
                    )
                    _emit(
                        rows, scenario, theta, chain, est, ms,
                        baselines[(theta, est_cfg["method"])],
                    )
                    sweep_points.setdefault((est_cfg["method"], theta), []).append(
                        (value, est.value, est.std_error)
                    )

    if sweep:
        xlabel = "keep rate" if config["sweep"]["param"] == "alpha" else "clutter rate"
        series = [
            Series(
                label=f"none / {method} @ theta={theta:g}",
                x=(0.0,),
                y=(baselines[(theta, method)].value,),
                yerr=(baselines[(theta, method)].std_error,),
                style="flat",
            )
            for (theta, method) in baselines
        ] + [
            Series(
                label=f"{method} @ theta={theta:g}",
                x=tuple(p[0] for p in pts),
                y=tuple(p[1] for p in pts),
                yerr=tuple(p[2] for p in pts),
            )
            for (method, theta), pts in sweep_points.items()
        ]
    else:
        xlabel = "theta"
        series = []
        for chain in chains:
            for est_cfg in estimators:
                method = est_cfg["method"]
                pts = [
                    (r.theta, r.fisher, r.se)
                    for r in rows
                    if r.kernels == chain.label and r.method == method
                ]
                series.append(
                    Series(
                        label=f"{chain.label} / {method}",
                        x=tuple(p[0] for p in pts),
                        y=tuple(p[1] for p in pts),
                        yerr=tuple(p[2] for p in pts),
                    )
                )
    return rows, series, xlabel


def _substitute_sweep(
    kernel_objs: list[dict], param: str, value: float
) -> list[dict]:
    objs = json.loads(json.dumps(kernel_objs))
    if param == "alpha":
        targets = [k for k in objs if k["kind"] == "thinning"]
        if len(targets) != 1:
            raise ValidationError(
                "sweeping alpha needs exactly one thinning kernel in 'kernels'"
            )
        if not (0.0 <= value <= 1.0):
            raise ValidationError(f"swept alpha={value:g} outside [0, 1]")
        targets[0]["alpha"] = value
    else:
        targets = [
            k
            for k in objs
            if k["kind"] == "superposition" and k["clutter"]["kind"] == "poisson"
        ]
        if len(targets) != 1:
            raise ValidationError(
                "sweeping rate needs exactly one superposition kernel with "
                "poisson clutter in 'kernels'"
            )
        if not (0.0 <= value <= 6.0):
            raise ValidationError(f"swept rate={value:g} outside [0, 6]")
        targets[0]["clutter"]["rate"] = value
    return objs


def _cmd_table(args: argparse.Namespace, sweep: bool) -> int:
    config = _load_config(args.config)
    if sweep and "sweep" not in config:
        raise ValidationError("the sweep subcommand needs a 'sweep' block in the config")
    out_csv = _out_path(config, args)
    rows, series, xlabel = _run_cells(config, args, sweep)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    write_csv(out_csv, rows)
    sidecar = write_sidecar(out_csv, _resolve_config(config, out_csv))
    print(f"wrote {len(rows)} rows to {out_csv}")
    print(f"sidecar {sidecar}")
    if not args.no_fig:
        fig = render_figure(series, xlabel, figure_path_for(out_csv), config["scenario"])
        print(f"figure {fig}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    return _cmd_table(args, sweep=False)


def _cmd_sweep(args: argparse.Namespace) -> int:
    return _cmd_table(args, sweep=True)


def _cmd_check(args: argparse.Namespace) -> int:
    results = run_suite(args.suite, seed=args.seed)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"[{mark}] {r.suite}.{r.name}: {r.detail}")
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed (suite: {args.suite})")
    return 0 if passed == len(results) else 3


# ---------------------------------------------------------------------------
# Argument parsing and process exit mapping.
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Argparse that reports usage problems through the exit-code contract."""

    def error(self, message: str):  # noqa: D102 - argparse hook
        raise ValidationError(f"usage: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="fisherpp",
        description=(
            "Fisher information of parametric observation models, with exact "
            "and sampled estimates of the information lost to shuffling, "
            "thinning, and clutter."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_table_args(p: _Parser) -> None:
        p.add_argument("-c", "--config", required=True, help="JSON scenario file")
        p.add_argument("-o", "--out", help="output table path (default from config)")
        p.add_argument(
            "--workers",
            type=int,
            default=1,
            help="worker threads for the sampling estimator (results are "
            "identical for any worker count)",
        )
        p.add_argument(
            "--timing",
            action="store_true",
            help="record wall-clock ms per cell (breaks byte-identical output)",
        )
        p.add_argument(
            "--no-fig", action="store_true", help="skip the figure next to the table"
        )

    p_run = sub.add_parser("run", help="estimate information over a theta grid")
    add_table_args(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="trace a kernel parameter over a grid")
    add_table_args(p_sweep)
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_check = sub.add_parser("check", help="run invariant check suites")
    p_check.add_argument(
        "suite",
        nargs="?",
        default="all",
        choices=SUITE_NAMES + ("all",),
        help="which suite to run (default: all)",
    )
    p_check.add_argument("--seed", type=int, default=DEFAULT_CHECK_SEED)
    p_check.set_defaults(fn=_cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except json.JSONDecodeError as exc:
        print(
            f"error: config parse failure at line {exc.lineno}, column "
            f"{exc.colno}: {exc.msg}",
            file=sys.stderr,
        )
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FisherppError as exc:
        # remaining library failures are enumeration limits and kin
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> int:
    return main(sys.argv[1:])
