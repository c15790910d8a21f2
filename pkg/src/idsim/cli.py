"""Declarative experiment runner.

A single JSON config names an experiment, a model, parameters, a
replication count and a seed; the runner writes a JSON report (with the
resolved config echoed for provenance), an optional CSV of per-grid-point
values, and matching figures.  Exit status: 0 for a passing verdict or a
pure generation run, 1 for an identity failure, 2 for config/model
errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import __version__
from .measures import AtomicMeasure, sigma_finiteness_witness, check_consistency
from .prm import empirical_cf_check, mecke_palm_check
from .isomorphism import (
    LevyMarginalModel,
    PoissonianProcessModel,
    gamma_vector_model,
    atomic_id_model,
    small_time_limit,
    verify_dynkin,
    verify_levy_translation,
    verify_series_iso,
    verify_size_bias,
    verify_translation,
    verify_translation_atom,
    verify_translation_converse,
)
from .measures import INDICATOR_CUTOFF
from .representations import (
    MarkovChainModel,
    PermanentalModel,
    ScalarMeasure,
    levy_strip_rep,
    poisson_jump_law,
    sample_permanental,
)
from .series import besq_series, feller_series, generate_series, levy_series_config
from .streams import substream


class ConfigError(ValueError):
    """The experiment configuration or model descriptor is invalid."""


# ---------------------------------------------------------------------------
# Descriptor builders
# ---------------------------------------------------------------------------

def build_jump_law(doc) -> ScalarMeasure:
    if not isinstance(doc, dict) or "type" not in doc:
        raise ConfigError("jump law descriptor needs a 'type'")
    kind = doc["type"]
    if kind == "poisson":
        return poisson_jump_law(float(doc["rate"]))
    if kind == "atoms":
        return ScalarMeasure.from_atoms([(float(v), float(w)) for v, w in doc["atoms"]])
    if kind == "exponential":
        from .representations.kernels import exponential_jump_law

        return exponential_jump_law(float(doc["rate"]), float(doc["mass"]))
    raise ConfigError(f"unknown jump law type {kind!r}")


def build_strip_model(doc) -> PoissonianProcessModel:
    law = build_jump_law(doc["jumps"])
    horizon = float(doc.get("horizon", max(doc["grid"])))
    drift = float(doc.get("drift", 0.0))
    sigma = float(doc.get("sigma", 0.0))
    rep = levy_strip_rep(law, horizon)
    return PoissonianProcessModel(
        rep=rep, grid=tuple(doc["grid"]),
        deterministic=(lambda t: drift * t) if drift else None,
        gaussian_sigma=sigma)


def build_weight(doc, model_doc) -> Callable:
    """Section weight q on the strip; normalized against the intensity."""
    if not isinstance(doc, dict) or "type" not in doc:
        raise ConfigError("weight descriptor needs a 'type'")
    kind = doc["type"]
    law = build_jump_law(model_doc["jumps"])
    mass = law.total_mass
    scale = float(doc.get("scale", 1.0))
    if kind == "exp_time":
        rate = float(doc.get("rate", 1.0))

        def q(pts):
            r = np.asarray(pts["r"], dtype=float)
            return scale * rate * np.exp(-rate * r) / mass

        return q
    if kind == "uniform":
        horizon = float(model_doc.get("horizon", max(model_doc["grid"])))
        theta = mass * horizon

        def q(pts):
            return np.full(len(pts), scale / theta)

        return q
    raise ConfigError(f"unknown weight type {kind!r}")


def build_functional(doc, grid) -> Callable:
    if not isinstance(doc, dict) or "type" not in doc:
        raise ConfigError("functional descriptor needs a 'type'")
    kind = doc["type"]
    grid = list(grid)

    def index_of(key):
        if key in grid:
            return grid.index(key)
        try:
            return grid.index(float(key))
        except (ValueError, TypeError):
            raise ConfigError(f"functional index {key!r} is not on the grid {grid}")

    if kind == "one":
        return lambda v: np.ones(len(v))
    if kind == "exp_neg":
        i = index_of(doc["index"])
        return lambda v: np.exp(-v[:, i])
    if kind == "exp_neg_sum":
        coeffs = np.asarray(doc["coeffs"], dtype=float)
        return lambda v: np.exp(-(v @ coeffs))
    if kind == "indicator_ge":
        i = index_of(doc["index"])
        level = float(doc["level"])
        return lambda v: (v[:, i] >= level).astype(float)
    raise ConfigError(f"unknown functional type {kind!r}")


def build_scalar_function(doc) -> Callable:
    kind = doc.get("type")
    if kind == "indicator_ge":
        level = float(doc["level"])
        return lambda x: (np.asarray(x) >= level).astype(float)
    if kind == "abs_cubed_capped":
        return lambda x: np.minimum(np.abs(np.asarray(x)) ** 3, 1.0)
    raise ConfigError(f"unknown scalar function type {kind!r}")


# ---------------------------------------------------------------------------
# Experiment runners
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    report: dict
    verdict: bool | None = None
    table: tuple[list[str], list[list]] | None = None
    plot: Callable[[str], str] | None = None


def _identity_result(report, title: str) -> RunResult:
    from . import plotting

    doc = report.to_dict()
    return RunResult(report=doc, verdict=doc["pass"],
                     plot=lambda p: plotting.plot_identity(
                         doc if "lhs_mean" in doc else doc["direct"], p, title))


def run_verify_translation(cfg, seed, reps) -> RunResult:
    model = build_strip_model(cfg["model"])
    q = build_weight(cfg["params"]["q"], cfg["model"])
    f = build_functional(cfg["params"]["functional"], model.grid)
    rep = verify_translation(model, q, f, reps, seed,
                             check_normalization=cfg["params"].get("check_normalization", True))
    return _identity_result(rep, "translation identity")


def run_verify_translation_converse(cfg, seed, reps) -> RunResult:
    model = build_strip_model(cfg["model"])
    q = build_weight(cfg["params"]["q"], cfg["model"])
    f = build_functional(cfg["params"]["functional"], model.grid)
    rep = verify_translation_converse(model, q, f, reps, seed)
    return _identity_result(rep, "converse translation identity")


def run_verify_translation_atom(cfg, seed, reps) -> RunResult:
    model = build_strip_model(cfg["model"])
    params = cfg["params"]
    q = build_weight(params["q"], cfg["model"])
    f = build_functional(params["functional"], model.grid)
    rep = verify_translation_atom(model, q, float(params["atom_weight"]), f, reps, seed,
                                  rhs_atom_weight=params.get("rhs_atom_weight"))
    doc = rep.to_dict()
    from . import plotting

    return RunResult(report=doc, verdict=rep.passed,
                     plot=lambda p: plotting.plot_identity(doc["direct"], p,
                                                           "zero-atom translation"))


def run_verify_levy_translation(cfg, seed, reps) -> RunResult:
    model_doc = cfg["model"]
    params = cfg["params"]
    law = build_jump_law(model_doc["jumps"])
    q = build_weight(params["q"], model_doc)
    grid = tuple(model_doc["grid"])
    f = build_functional(params["functional"], grid)
    rep = verify_levy_translation(law, float(model_doc.get("drift", 0.0)), q, f,
                                  float(model_doc.get("horizon", max(grid))), grid, reps,
                                  seed, gaussian_sigma=float(model_doc.get("sigma", 0.0)))
    return _identity_result(rep, "jump-process translation")


def run_verify_series_iso(cfg, seed, reps) -> RunResult:
    model_doc = cfg["model"]
    params = cfg["params"]
    law = build_jump_law(model_doc["jumps"])
    grid = tuple(model_doc["grid"])
    series_cfg = levy_series_config(law, float(model_doc.get("drift", 0.0)),
                                    float(model_doc.get("budget",
                                                        2.0 * law.total_mass * max(grid))),
                                    grid, horizon=model_doc.get("horizon"))
    q = build_weight(params["q"], model_doc)
    f = build_functional(params["functional"], grid)
    rep = verify_series_iso(series_cfg, q, f, reps, seed)
    doc = rep.to_dict()
    from . import plotting

    return RunResult(report=doc, verdict=rep.passed,
                     plot=lambda p: plotting.plot_identity(doc["direct"], p,
                                                           "series-form identity"))


def run_verify_dynkin(cfg, seed, reps) -> RunResult:
    chain = MarkovChainModel.from_json(cfg["model"])
    params = cfg["params"]
    f = build_functional(params["functional"], list(chain.states))
    rep = verify_dynkin(chain, params["anchor"], float(params.get("alpha", 0.5)), f,
                        reps, seed)
    doc = rep.to_dict()
    from . import plotting

    return RunResult(report=doc, verdict=rep.passed,
                     plot=lambda p: plotting.plot_identity(doc["direct"], p,
                                                           "local-time coupling"))


def run_verify_size_bias(cfg, seed, reps) -> RunResult:
    model_doc = cfg["model"]
    kind = model_doc.get("type")
    if kind == "gamma-vector":
        model = gamma_vector_model(model_doc["shapes"], model_doc.get("drifts"))
        labels = list(range(model.dim))
    elif kind == "custom-atomic":
        nu = AtomicMeasure.from_json(model_doc)
        drift = model_doc.get("drift", [0.0] * nu.index_set.dimension)
        model = atomic_id_model(drift, nu)
        labels = list(nu.index_set.labels)
    else:
        raise ConfigError("size-bias experiments need a gamma-vector or custom-atomic model")
    params = cfg["params"]
    f = build_functional(params["functional"], labels)
    k = params.get("coordinate", 0)
    k = labels.index(k) if k in labels else int(k)
    rep = verify_size_bias(model, k, f, reps, seed)
    return _identity_result(rep, "size-bias identity")


def run_small_time_limit(cfg, seed, reps) -> RunResult:
    model_doc = cfg["model"]
    law = build_jump_law(model_doc["jumps"]) if model_doc.get("jumps") else None
    model = LevyMarginalModel(jump_law=law, drift=float(model_doc.get("drift", 0.0)),
                              sigma=float(model_doc.get("sigma", 0.0)))
    params = cfg["params"]
    f = build_scalar_function(params["f"])
    ladder = tuple(params.get("h_ladder", (1e-1, 1e-2, 1e-3, 1e-4)))
    rep = small_time_limit(model, f, reps, seed, h_ladder=ladder)
    doc = rep.to_dict()
    tol = params.get("rel_tolerance")
    verdict = None
    if tol is not None:
        scale = max(abs(rep.oracle), params.get("abs_floor", 1e-2))
        verdict = abs(rep.extrapolated - rep.oracle) <= float(tol) * scale
    doc["verdict_tolerance"] = tol
    header = ["h", "estimate", "std_error", "reps"]
    rows = [[h, e, s, int(n)] for h, e, s, n in
            zip(rep.h_values, rep.estimates, rep.std_errors, rep.reps_per_h)]
    from . import plotting

    return RunResult(report=doc, verdict=verdict, table=(header, rows),
                     plot=lambda p: plotting.plot_limit(rep.h_values, rep.estimates,
                                                        rep.std_errors, rep.oracle,
                                                        rep.extrapolated, p))


def run_mecke_palm(cfg, seed, reps) -> RunResult:
    law = build_jump_law(cfg["model"]["jumps"])
    from .representations import scalar_mark_rep

    rep_space = scalar_mark_rep(law)
    kind = cfg["params"].get("h", {"type": "exp_neg_count"})["type"]
    if kind == "exp_neg_count":
        h = lambda s, config: math.exp(-len(config))
    elif kind == "one":
        h = lambda s, config: 1.0
    else:
        raise ConfigError(f"unknown point functional {kind!r}")
    rep = mecke_palm_check(rep_space, h, reps, seed)
    return _identity_result(rep, "point-process balance")


def run_empirical_cf(cfg, seed, reps) -> RunResult:
    law = build_jump_law(cfg["model"]["jumps"])
    from .representations import scalar_mark_rep

    rep_space = scalar_mark_rep(law)
    thetas = cfg["params"].get("theta_grid", list(np.linspace(-3, 3, 7)))
    rep = empirical_cf_check(rep_space, lambda p: np.asarray(p, dtype=float),
                             INDICATOR_CUTOFF, thetas, reps, seed)
    doc = rep.to_dict()
    header = ["theta", "empirical_re", "empirical_im", "oracle_re", "oracle_im", "z"]
    rows = [[t, e.real, e.imag, o.real, o.imag, z] for t, e, o, z in
            zip(rep.thetas, rep.empirical, rep.oracle, rep.z_scores)]
    devs = np.abs(rep.empirical - rep.oracle)
    from . import plotting

    return RunResult(report=doc, verdict=rep.passed(), table=(header, rows),
                     plot=lambda p: plotting.plot_cf(rep.thetas, devs,
                                                     4.0 / math.sqrt(rep.reps), p))


def run_sigma_witness(cfg, seed, reps) -> RunResult:
    model_doc = cfg["model"]
    law = build_jump_law(model_doc["jumps"])
    horizon = float(model_doc["horizon"])
    rep_space = levy_strip_rep(law, horizon)
    params = cfg["params"]
    report = sigma_finiteness_witness(rep_space, params["candidate_t0"],
                                      int(params.get("probes", reps)), seed,
                                      threshold=float(params.get("threshold", 1e-3)))
    return RunResult(report=report.to_dict(), verdict=report.witnessed)


def run_check_consistency(cfg, seed, reps) -> RunResult:
    docs = cfg["params"]["family"]
    family = {}
    for doc in docs:
        nu = AtomicMeasure.from_json(doc)
        family[nu.index_set] = nu
    ok, violation = check_consistency(family)
    report = {"consistent": ok}
    if violation is not None:
        report["violation"] = [list(violation[0].labels), list(violation[1].labels)]
    return RunResult(report=report, verdict=ok)


def run_generate_series(cfg, seed, reps) -> RunResult:
    model_doc = cfg["model"]
    kind = model_doc.get("type")
    rng = substream(seed, 0)
    grid = tuple(model_doc["grid"])
    if kind == "feller":
        out = feller_series(float(model_doc["a"]), float(model_doc.get("sigma", 1.0)),
                            None, float(model_doc.get("budget", 200.0)), grid, rng,
                            m=int(model_doc.get("m", 2001)))
    elif kind == "besq":
        out = besq_series(float(model_doc["beta"]), float(model_doc.get("budget", 2000.0)),
                          grid, rng, m=int(model_doc.get("m", 2001)))
    elif kind in ("levy", "compound-poisson"):
        law = build_jump_law(model_doc["jumps"])
        cfg_series = levy_series_config(law, float(model_doc.get("drift", 0.0)),
                                        float(model_doc.get("budget",
                                                            2.0 * law.total_mass * max(grid))),
                                        grid, horizon=model_doc.get("horizon"))
        out = generate_series(cfg_series, rng)
    else:
        raise ConfigError(f"unknown series model type {kind!r}")
    report = {
        "terms_used": out.terms_used,
        "discarded_mass": out.discarded_mass,
        "grid": list(out.path.times),
        "values": list(out.path.values),
    }
    header = ["t", "value"]
    rows = [[t, v] for t, v in zip(out.path.times, out.path.values)]
    from . import plotting

    return RunResult(report=report, verdict=None, table=(header, rows),
                     plot=lambda p: plotting.plot_path(out.path.times, out.path.values, p))


def run_generate_permanental(cfg, seed, reps) -> RunResult:
    model = PermanentalModel.from_json(cfg["model"])
    rng = substream(seed, 0)
    y = sample_permanental(model, rng, reps)
    report = {
        "states": list(model.states),
        "alpha": model.alpha,
        "means": list(np.mean(y, axis=0)),
        "reps": reps,
    }
    header = ["rep"] + [str(s) for s in model.states]
    rows = [[i] + list(row) for i, row in enumerate(y[: min(reps, 10_000)])]
    from . import plotting

    return RunResult(report=report, verdict=None, table=(header, rows),
                     plot=lambda p: plotting.plot_samples(y, model.states, p,
                                                          "permanental marginals"))


EXPERIMENTS: dict[str, tuple[Callable, str]] = {
    "verify_translation": (run_verify_translation,
                           "model: strip jumps; params: q, functional"),
    "verify_translation_converse": (run_verify_translation_converse,
                                    "model: strip jumps; params: q, functional"),
    "verify_translation_atom": (run_verify_translation_atom,
                                "model: strip jumps; params: q, atom_weight, functional"),
    "verify_levy_translation": (run_verify_levy_translation,
                                "model: jumps+drift+sigma; params: q, functional"),
    "verify_series_iso": (run_verify_series_iso,
                          "model: jumps(+budget); params: q, functional"),
    "verify_dynkin": (run_verify_dynkin,
                      "model: markov chain; params: anchor, alpha, functional"),
    "verify_size_bias": (run_verify_size_bias,
                         "model: gamma-vector|custom-atomic; params: coordinate, functional"),
    "small_time_limit": (run_small_time_limit,
                         "model: jumps+drift+sigma; params: f, h_ladder"),
    "mecke_palm_check": (run_mecke_palm, "model: jumps; params: h"),
    "empirical_cf_check": (run_empirical_cf, "model: jumps; params: theta_grid"),
    "sigma_finiteness_witness": (run_sigma_witness,
                                 "model: jumps+horizon; params: candidate_t0, probes"),
    "check_consistency": (run_check_consistency, "params: family (list of measures)"),
    "generate_series": (run_generate_series,
                        "model: feller|besq|levy|compound-poisson with grid"),
    "generate_permanental": (run_generate_permanental, "model: permanental kernel"),
}


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def list_experiments() -> str:
    lines = ["available experiments:"]
    width = max(len(name) for name in EXPERIMENTS)
    for name in sorted(EXPERIMENTS):
        lines.append(f"  {name.ljust(width)}  {EXPERIMENTS[name][1]}")
    return "\n".join(lines)


def _write_outputs(result: RunResult, config: dict, out_path: str | None,
                   plot: bool) -> dict:
    envelope = {
        "experiment": config["experiment"],
        "config": config,
        "version": __version__,
        "report": result.report,
        "verdict": result.verdict,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if out_path:
        stem = out_path[:-5] if out_path.endswith(".json") else out_path
        with open(out_path if out_path.endswith(".json") else stem + ".json", "w") as fh:
            json.dump(envelope, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if result.table is not None:
            header, rows = result.table
            with open(stem + ".csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                writer.writerows(rows)
        if plot and result.plot is not None:
            result.plot(stem + ".png")
    return envelope


def run(config_path: str, seed: int | None = None, reps: int | None = None,
        out: str | None = None, plot: bool = True) -> int:
    try:
        with open(config_path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2

    try:
        if not isinstance(config, dict) or "experiment" not in config:
            raise ConfigError("config must be an object with an 'experiment' tag")
        name = config["experiment"]
        if name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment tag {name!r}")
        config.setdefault("params", {})
        config["seed"] = int(seed if seed is not None else config.get("seed", 0))
        config["reps"] = int(reps if reps is not None else config.get("reps", 10_000))
        if config["reps"] < 1:
            raise ConfigError("reps must be at least 1")
        out_path = out if out is not None else config.get("output")
        runner = EXPERIMENTS[name][0]
        result = runner(config, config["seed"], config["reps"])
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        envelope = _write_outputs(result, config, out_path, plot)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 2

    verdict = result.verdict
    summary = {k: envelope["report"].get(k) for k in ("z", "pass")
               if isinstance(envelope["report"], dict) and k in envelope["report"]}
    print(json.dumps({"experiment": config["experiment"], "verdict": verdict, **summary}))
    return 0 if verdict in (True, None) else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="idsim",
                                     description="simulation and statistical verification "
                                                 "of infinitely divisible processes")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a JSON experiment config")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--reps", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering next to the outputs")
    sub.add_parser("list", help="list registered experiments")

    args = parser.parse_args(argv)
    if args.command == "list":
        print(list_experiments())
        return 0
    return run(args.config, seed=args.seed, reps=args.reps, out=args.out,
               plot=not args.no_plot)


if __name__ == "__main__":
    sys.exit(main())
