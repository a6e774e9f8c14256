"""Command-line experiment runner.

Every experiment kind consumes a TOML/JSON config (or built-in defaults),
writes data CSVs plus a manifest into the output directory, and emits a
gnuplot script where a plot is natural. Wall-clock times go to a separate
timing file so data artifacts are byte-stable across reruns.

Exit codes: 0 success, 2 config error, 3 numerical precondition failure,
4 acceptance failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, acceptance, chaos
from .config import ExperimentConfig, default_config, load_config
from .engine import (AtomSpan, EvenFunctionOf, FullGenerators,
                     QuotientSchedule, classify, parseval_energy,
                     renormalized_limit, span_of, stochastic_derivative_exact)
from .errors import (ConfigError, ContractError, DegenerateFamily,
                     DegenerateVariable, DomainError, EstimatorError,
                     EvaluationError, GDerivError, PreconditionFailed,
                     ResolutionError, SingularSpan)
from .gaussian import FirstChaosVariable
from .models import (FractionalBrownian, fbm_cov, fbm_partial_u,
                     trigonometric_basis, two_atom)
from .simulate import (DriftSpec, add_drift, girsanov_weights, sample_fbm,
                       sample_fbm_volterra, uniform_grid)
from . import batchio

_NUMERIC_ERRORS = (SingularSpan, PreconditionFailed, DegenerateFamily,
                   DegenerateVariable, ResolutionError, DomainError,
                   ContractError, EstimatorError, EvaluationError)

_COVERAGE = {
    "cov": ["fbm_cov", "fbm_partial_u"],
    "classify": ["difference_quotient", "classify"],
    "derivative": ["stochastic_derivative_exact"],
    "renormalize": ["difference_quotient", "renormalized_limit"],
    "simulate": ["sample_fbm", "sample_fbm_volterra", "add_drift"],
    "girsanov": ["sample_fbm_volterra", "add_drift", "girsanov_weights"],
    "embed": ["solve_linear_embedding", "nelson_derivative",
              "embedding_residual", "mc_verify_nelson"],
    "counterexample": ["parseval_energy", "classify"],
    "paper-suite": ["acceptance.run_suite"],
}


def _model_from(params: dict):
    spec = params["model"]
    if spec["kind"] != "fbm":
        raise ConfigError(f"model.kind: unsupported model {spec['kind']!r}",
                          "model.kind")
    return FractionalBrownian(spec["hurst"], horizon=spec["horizon"])


def _conditioning_from(params: dict, model):
    spec = params["conditioning"]
    kind = spec["kind"]
    if kind == "span":
        times = spec["times"] or [params["t"]]
        return span_of(*[float(u) for u in times])
    if kind == "even":
        times = spec["times"] or [params["t"]]
        return EvenFunctionOf(FirstChaosVariable(((float(times[0]), 1.0),)))
    if kind == "atoms":
        return AtomSpan(tuple(int(i) for i in spec["indices"]))
    if kind == "full":
        return FullGenerators()
    raise ConfigError(f"conditioning.kind: unknown kind {kind!r}",
                      "conditioning.kind")


def _schedule_from(params: dict) -> QuotientSchedule:
    s = params["schedule"]
    h0 = s["h0"] if s["h0"] is not None else params["t"] / 16.0
    return QuotientSchedule(h0=float(h0), ratio=s["ratio"], steps=s["steps"],
                            mode=s["mode"])


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list, np.ndarray)):
        return "[" + " ".join(_fmt(float(x)) for x in np.ravel(v)) + "]"
    return str(v)


def _write_csv(path: Path, rows) -> None:
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with path.open("w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(r.get(c, "")) for c in cols) + "\n")


_PLOTS = {
    "classify": ("evidence.csv",
                 'set logscale xy\nset xlabel "|h|"\nset ylabel "quotient norm"\n'
                 'plot "evidence.csv" using (abs($1)):4 with linespoints title "L2 norm"\n'),
    "renormalize": ("evidence.csv",
                    'set logscale x\nset xlabel "|h|"\nset ylabel "weighted norm"\n'
                    'plot "evidence.csv" using (abs($1)):4 with linespoints\n'),
    "counterexample": ("energies.csv",
                       'set logscale x\nset xlabel "truncation"\nset ylabel "quotient energy"\n'
                       'plot "energies.csv" using 1:2 with linespoints title "energy", '
                       '"energies.csv" using 1:3 with lines title "1/h"\n'),
    "girsanov": ("probes.csv",
                 'set xlabel "probe"\nset ylabel "second moment"\n'
                 'plot "probes.csv" using 0:5 with points title "weighted", '
                 '"probes.csv" using 0:7 with points title "target"\n'),
}


# ---------------------------------------------------------------------------
# experiment implementations
# ---------------------------------------------------------------------------


def _run_cov(cfg: ExperimentConfig, out: Path):
    model = _model_from(cfg.params)
    rows = []
    for s, t in cfg.params["pairs"]:
        d = fbm_partial_u(model.H, float(t), float(s), "two_sided")
        rows.append({"s": float(s), "t": float(t),
                     "cov": fbm_cov(model.H, float(s), float(t)),
                     "partial_u": d if d is not None else "undefined"})
    _write_csv(out / "cov.csv", rows)
    return ["cov.csv"]


def _run_classify(cfg: ExperimentConfig, out: Path):
    model = _model_from(cfg.params)
    spec = _conditioning_from(cfg.params, model)
    verdict = classify(model, cfg.params["t"], spec, _schedule_from(cfg.params))
    ev = [{"h": r["h"], "coeffs": r["coeffs"], "constant": r["constant"],
           "norm": r["norm"]} for r in verdict.evidence]
    _write_csv(out / "evidence.csv", ev)
    final = {"kind": verdict.kind,
             "coeffs": tuple(verdict.derivative.coeffs) if verdict.derivative
             else (), "constant": verdict.constant if verdict.constant
             is not None else "", "norm": verdict.norm or "",
             "slope": verdict.slope if verdict.slope is not None else "",
             "r2": verdict.r2 if verdict.r2 is not None else ""}
    _write_csv(out / "verdict.csv", [final])
    return ["evidence.csv", "verdict.csv"]


def _run_derivative(cfg: ExperimentConfig, out: Path):
    model = _model_from(cfg.params)
    times = cfg.params["variable_times"]
    weights = cfg.params["variable_weights"]
    if len(times) != len(weights):
        raise ConfigError("variable_times and variable_weights must align",
                          "variable_weights")
    var = FirstChaosVariable(tuple(sorted(
        (float(u), float(w)) for u, w in zip(times, weights))))
    combo = stochastic_derivative_exact(model, cfg.params["t"], var)
    if combo is None:
        rows = [{"defined": False}]
    else:
        rows = [{"defined": True, "coefficient": float(combo.coeffs[0]),
                 "constant": combo.constant}]
    _write_csv(out / "derivative.csv", rows)
    return ["derivative.csv"]


def _run_renormalize(cfg: ExperimentConfig, out: Path):
    model = _model_from(cfg.params)
    spec = _conditioning_from(cfg.params, model)
    sched = _schedule_from(cfg.params)
    verdict = classify(model, cfg.params["t"], spec, sched)
    ev = [{"h": r["h"], "coeffs": r["coeffs"], "constant": r["constant"],
           "norm": r["norm"]} for r in verdict.evidence]
    _write_csv(out / "evidence.csv", ev)
    combo = renormalized_limit(model, cfg.params["t"], spec,
                               cfg.params["alpha"], sched)
    if combo is None:
        rows = [{"alpha": cfg.params["alpha"], "defined": False}]
    else:
        rows = [{"alpha": cfg.params["alpha"], "defined": True,
                 "coeffs": tuple(combo.coeffs), "constant": combo.constant}]
    _write_csv(out / "limit.csv", rows)
    return ["evidence.csv", "limit.csv"]


def _run_simulate(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    grid = uniform_grid(p["horizon"], p["steps"])
    if p["method"] == "volterra":
        over = p["oversample"] if p["oversample"] > 0 else None
        batch = sample_fbm_volterra(p["hurst"], grid, p["n_paths"], cfg.seed,
                                    oversample=over)
    else:
        batch = sample_fbm(p["hurst"], grid, p["n_paths"], cfg.seed,
                           method=p["method"])
    eta = None
    if p["drift_a"] != 0.0:
        drift = DriftSpec(a=lambda s, a=p["drift_a"]: a * np.ones_like(
            np.asarray(s, dtype=float)), H=p["hurst"], horizon=p["horizon"])
        batch = add_drift(batch, drift, x0=p["x0"])
        if batch.w_increments is not None:
            eta = girsanov_weights(batch, drift)
    if cfg.fmt == "binary":
        batchio.write_binary(batch, out / "batch.gdrv", eta)
        return ["batch.gdrv"]
    batchio.write_csv(batch, out / "batch.csv", eta)
    return ["batch.csv"]


def _run_girsanov(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    grid = uniform_grid(p["horizon"], p["steps"])
    drift = DriftSpec(a=lambda s, a=p["drift_a"]: a * np.ones_like(
        np.asarray(s, dtype=float)), H=p["hurst"], horizon=p["horizon"])
    base = sample_fbm_volterra(p["hurst"], grid, p["n_paths"], cfg.seed)
    z = add_drift(base, drift)
    eta = girsanov_weights(z, drift)
    rows = [{"pair": "eta", "s": "", "t": "", "weighted": float(eta.mean()),
             "weighted_se": float(eta.std(ddof=1) / np.sqrt(eta.size)),
             "target": 1.0, "unweighted": "", "unweighted_se": ""}]
    for s, t in p["probe_pairs"]:
        prod = z.value_at(float(s)) * z.value_at(float(t))
        w = eta * prod
        rows.append({
            "pair": f"({s};{t})", "s": float(s), "t": float(t),
            "weighted": float(w.mean()),
            "weighted_se": float(w.std(ddof=1) / np.sqrt(w.size)),
            "target": fbm_cov(p["hurst"], float(s), float(t)),
            "unweighted": float(prod.mean()),
            "unweighted_se": float(prod.std(ddof=1) / np.sqrt(prod.size))})
    _write_csv(out / "probes.csv", rows)
    return ["probes.csv"]


def _run_embed(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    x = chaos.solve_linear_embedding(p["a"], p["b"], p["constants"])
    rows = [{"t": float(u),
             "residual": chaos.embedding_residual(x, p["a"], p["b"], float(u))}
            for u in p["times"]]
    _write_csv(out / "residuals.csv", rows)
    files = ["residuals.csv"]
    if p["mc_paths"] > 0:
        if x.max_order != 1:
            raise ConfigError("mc verification needs exactly one chaos order",
                              "constants")
        hs = [2.0 ** -k for k in range(4, 10)]
        nrows = chaos.mc_verify_nelson(x, 0.5, hs, p["mc_paths"], seed=cfg.seed)
        _write_csv(out / "nelson.csv", nrows)
        files.append("nelson.csv")
    return files


def _run_counterexample(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    basis = trigonometric_basis(p["level"])
    target = 1.0 / p["h"]
    rows = []
    for n in sorted(set(int(v) for v in p["truncations"])):
        e = parseval_energy(basis, p["t"], p["h"], n_terms=n)
        rows.append({"truncation": n, "energy": e, "target": target})
    rows.append({"truncation": 2 * p["level"] + 1,
                 "energy": parseval_energy(basis, p["t"], p["h"]),
                 "target": target})
    _write_csv(out / "energies.csv", rows)
    kink = two_atom(lambda u: u, lambda u, e=p["kink_exponent"]:
                    abs(u - 0.5) ** e, d1=lambda u: 1.0, d2=None)
    sched = QuotientSchedule(p["t"] / 16, mode="forward")
    v_full = classify(kink, 0.5, FullGenerators(), sched)
    v_atom = classify(kink, 0.5, AtomSpan((0,)), sched)
    _write_csv(out / "two_atom.csv", [
        {"conditioning": "all-atoms", "kind": v_full.kind,
         "slope": v_full.slope if v_full.slope is not None else ""},
        {"conditioning": "smooth-atom", "kind": v_atom.kind,
         "coefficient": float(v_atom.derivative.coeffs[0])
         if v_atom.differentiates else ""}])
    return ["energies.csv", "two_atom.csv"]


def _run_paper_suite(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    ctx = acceptance.SuiteContext(seed=cfg.seed or acceptance.DEFAULT_SEED,
                                  disabled=frozenset(p["disable"]))
    wanted = [int(c) for c in p["criteria"]] or None
    results = acceptance.run_suite(ctx, criteria=wanted, threads=cfg.threads)
    files = []
    for r in results:
        name = f"{r.cid:02d}_{r.key}.csv"
        (out / name).write_text(acceptance._render_csv(r.data))
        files.append(name)
    (out / "report.csv").write_text(acceptance.render_report(results))
    files.append("report.csv")
    for line in acceptance.report_lines(results):
        print(line)
    if not acceptance.suite_passed(results):
        raise _SuiteFailed()
    return files


class _SuiteFailed(Exception):
    pass


_RUNNERS = {
    "cov": _run_cov,
    "classify": _run_classify,
    "derivative": _run_derivative,
    "renormalize": _run_renormalize,
    "simulate": _run_simulate,
    "girsanov": _run_girsanov,
    "embed": _run_embed,
    "counterexample": _run_counterexample,
    "paper-suite": _run_paper_suite,
}


def run(cfg: ExperimentConfig) -> Path:
    """Execute one experiment; returns the output directory."""
    out = Path(cfg.out_dir or f"gderiv-out-{cfg.kind}")
    out.mkdir(parents=True, exist_ok=True)
    coverage = _COVERAGE[cfg.kind]
    if not coverage:
        raise ConfigError(f"no coverage mapped for kind {cfg.kind!r}", "kind")
    t0 = time.perf_counter()
    files = _RUNNERS[cfg.kind](cfg, out)
    wall = time.perf_counter() - t0
    if cfg.kind in _PLOTS:
        target, script = _PLOTS[cfg.kind]
        if target in files:
            (out / "plot.gp").write_text(
                f"# gnuplot script; run in this directory\nset datafile separator ','\n{script}")
            files.append("plot.gp")
    manifest = {
        "kind": cfg.kind,
        "config": json.loads(cfg.canonical_json()),
        "digest": cfg.digest(),
        "version": __version__,
        "coverage": {cfg.kind: coverage},
        "outputs": sorted(files),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                  sort_keys=True) + "\n")
    (out / "timing.json").write_text(json.dumps(
        {"wall_seconds": wall, "finished_unix": time.time()}) + "\n")
    return out


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gderiv",
        description="difference-quotient experiments for fractional Gaussian processes")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="kind", required=True)
    for kind in _RUNNERS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", type=str, default=None,
                        help="TOML or JSON experiment file")
        sp.add_argument("--out", type=str, default=None,
                        help="output directory (default gderiv-out-<kind>)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--format", choices=("csv", "binary"), default="csv")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config, kind=args.kind, seed=args.seed,
                              out_dir=args.out, threads=args.threads,
                              fmt=args.format)
        else:
            cfg = default_config(args.kind, seed=args.seed, out_dir=args.out,
                                 threads=args.threads, fmt=args.format)
        out = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _SuiteFailed:
        print("acceptance suite failed", file=sys.stderr)
        return 4
    except _NUMERIC_ERRORS as exc:
        print(f"numerical precondition failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
