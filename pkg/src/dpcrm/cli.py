"""Command-line surface: simulate, fit, predict, report.

Every command resolves its options as flags > TOML config file >
defaults, writes its outputs under --out with fixed file names, and
emits a manifest.json (inputs, seed, versions) sufficient for an exact
re-run.  Exit codes: 0 success, 2 validation, 3 numeric, 4 I/O.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import sys
from pathlib import Path

import numpy as np
import scipy

try:
    import tomllib
except ModuleNotFoundError:            # python < 3.11
    import tomli as tomllib

from . import __version__, dataio
from .diagnostics import (credible_interval, ks_reweighted, plain_ks,
                          posterior_predictive, predictive_bands)
from .errors import NumericError, ParseError, ResourceError, ValidationError
from .inference import PosteriorSamples, run_chain
from .models import MixtureTail, ModelSpec
from .sampling import PartitionCounts, partition_stats, simulate_partition, spawn_rngs
from .svgplot import LogLogPlot

_MODEL_ALIASES = {"gbfry": "gbfry", "bp": "betaprime", "betaprime": "betaprime",
                  "ggp": "ggp", "stable": "stable", "mixture": "mixture", "py": "py"}


def _load_config(path, section):
    if path is None:
        return {}
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    cfg = dict(data.get(section, {}))
    return cfg


def _resolve(args, section, defaults, required=()):
    """flags > config file > defaults."""
    cfg = _load_config(getattr(args, "config", None), section)
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
        elif key in cfg:
            out[key] = cfg[key]
        else:
            out[key] = default
    missing = [k for k in required if out.get(k) is None]
    if missing:
        raise ValidationError(f"missing required option(s): {', '.join(missing)}")
    return out


def _write_manifest(outdir: Path, command: str, config: dict):
    manifest = {
        "command": command,
        "config": config,
        "versions": {"dpcrm": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__,
                     "python": ".".join(map(str, sys.version_info[:3]))},
    }
    dataio.export_summary(manifest, outdir / "manifest.json")


def _build_model(cfg) -> ModelSpec:
    family = _MODEL_ALIASES.get(cfg["model"])
    if family is None:
        raise ValidationError(f"unknown model {cfg['model']!r}")
    if family in ("gbfry", "betaprime"):
        if cfg["sigma"] is None or cfg["tau"] is None or cfg["eta"] is None:
            raise ValidationError(f"{family} needs --sigma, --tau, --eta")
        return ModelSpec(family, sigma=cfg["sigma"], tau=cfg["tau"],
                         c=cfg["c"], eta=cfg["eta"])
    if family in ("ggp", "mixture"):
        if cfg["sigma"] is None or cfg["eta"] is None:
            raise ValidationError(f"{family} needs --sigma, --eta")
        if family == "ggp":
            return ModelSpec.ggp(cfg["sigma"], zeta=cfg["zeta"], eta=cfg["eta"])
        tail = MixtureTail(cfg["mixture_tail"],
                           (cfg["mixture_param1"], cfg["mixture_param2"]))
        return ModelSpec.mixture(cfg["sigma"], cfg["zeta"], cfg["eta"],
                                 cfg["mixture_beta"], tail)
    if family == "stable":
        if cfg["sigma"] is None or cfg["eta"] is None:
            raise ValidationError("stable needs --sigma, --eta")
        return ModelSpec.stable(cfg["sigma"], eta=cfg["eta"])
    raise ValidationError(f"cannot simulate from model {cfg['model']!r}")


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

def cmd_sample(args) -> int:
    defaults = dict(model=None, sigma=None, tau=None, eta=None, zeta=1.0, c=1.0,
                    n=None, seed=0, out=None, svg=False, mixture_beta=1.0,
                    mixture_tail="pareto", mixture_param1=1.0, mixture_param2=2.0)
    cfg = _resolve(args, "sample", defaults, required=("model", "n", "out"))
    model = _build_model(cfg)
    n = int(cfg["n"])
    if n < 1:
        raise ValidationError("--n must be positive")
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(int(cfg["seed"]))
    counts = simulate_partition(model, n, rng)
    spectrum = partition_stats(counts)

    with open(outdir / "counts.csv", "w", encoding="utf-8") as fh:
        fh.write("\n".join(str(int(c)) for c in counts.counts) + "\n")
    with open(outdir / "spectrum.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["size", "clusters", "proportion"])
        for j, k, p in zip(spectrum.sizes, spectrum.counts_by_size, spectrum.proportions):
            w.writerow([int(j), int(k), repr(float(p))])
    with open(outdir / "rank.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "count", "frequency"])
        for i, c in enumerate(counts.counts, start=1):
            w.writerow([i, int(c), repr(float(c) / counts.n)])
    if cfg["svg"]:
        p1 = LogLogPlot("ranked counts", "rank", "count")
        p1.add_points(np.arange(1, counts.num_clusters + 1), counts.counts,
                      color="#d62728", label="simulated")
        p1.write(outdir / "rank.svg")
        p2 = LogLogPlot("cluster-size proportions", "size", "proportion")
        p2.add_points(spectrum.sizes, spectrum.proportions, color="#d62728",
                      label="simulated")
        p2.write(outdir / "spectrum.svg")
    _write_manifest(outdir, "sample", cfg)
    print(f"sample: n={counts.n} clusters={counts.num_clusters} -> {outdir}")
    return 0


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def _load_dataset(path, fmt) -> dataio.Dataset:
    if fmt == "edges":
        return dataio.load_edge_list(path)
    return dataio.load_counts(path, fmt=fmt)


def _fit_one_chain(payload):
    counts_arr, family, iters, burnin, thin, seed = payload
    counts = PartitionCounts(counts_arr)
    return run_chain(counts, family, iters=iters, burnin=burnin, thin=thin, seed=seed)


def cmd_fit(args) -> int:
    defaults = dict(data=None, format="lines", model=None, iters=10000,
                    burnin=None, thin=1, seed=0, chains=1, out=None, jobs=None)
    cfg = _resolve(args, "fit", defaults, required=("data", "model", "out"))
    family = _MODEL_ALIASES.get(cfg["model"])
    if family is None or family in ("stable", "mixture"):
        raise ValidationError("--model must be one of gbfry|bp|ggp|py")
    dataset = _load_dataset(cfg["data"], cfg["format"])
    iters = int(cfg["iters"])
    burnin = int(cfg["burnin"]) if cfg["burnin"] is not None else iters // 2
    thin = int(cfg["thin"])
    n_chains = int(cfg["chains"])
    cfg["burnin"] = burnin
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)

    seeds = [int(s.generate_state(1)[0]) for s in
             np.random.SeedSequence(int(cfg["seed"])).spawn(n_chains)]
    payloads = [(dataset.counts.counts, family, iters, burnin, thin, s) for s in seeds]
    if n_chains > 1:
        workers = int(cfg["jobs"]) if cfg["jobs"] is not None else min(n_chains, 8)
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            chains = list(pool.map(_fit_one_chain, payloads))
    else:
        chains = [_fit_one_chain(payloads[0])]

    for i, ch in enumerate(chains):
        dataio.export_trace(ch, outdir / f"trace_{i}.csv")

    merged = {k: np.concatenate([ch.draws[k] for ch in chains])
              for k in chains[0].draws}
    intervals = {k: credible_interval(v, 0.95) for k, v in merged.items()
                 if not np.isnan(v).any()}
    summary = {
        "family": family,
        "data": {"name": dataset.name, "n": dataset.counts.n,
                 "clusters": dataset.counts.num_clusters,
                 "provenance": dataset.provenance},
        "iters": iters, "burnin": burnin, "thin": thin,
        "seed": int(cfg["seed"]), "chain_seeds": seeds,
        "credible_intervals_95": intervals,
        "posterior_means": {k: float(v.mean()) for k, v in merged.items()
                            if not np.isnan(v).any()},
        "acceptance": [ch.acceptance for ch in chains],
        "retained_draws": int(sum(len(ch) for ch in chains)),
    }
    dataio.export_summary(summary, outdir / "summary.json")
    _write_manifest(outdir, "fit", cfg)
    print(f"fit[{family}]: {summary['retained_draws']} draws; "
          f"intervals: " + ", ".join(f"{k}=({v[0]:.4g},{v[1]:.4g})"
                                     for k, v in intervals.items()))
    return 0


# ---------------------------------------------------------------------------
# predict / report
# ---------------------------------------------------------------------------

def _read_fit(fitdir: Path):
    import json
    spath = fitdir / "summary.json"
    if not spath.exists():
        raise ValidationError(f"missing fit artifacts: {spath}")
    with open(spath, encoding="utf-8") as fh:
        summary = json.load(fh)
    traces = sorted(fitdir.glob("trace_*.csv"))
    if not traces:
        raise ValidationError(f"missing trace files under {fitdir}")
    cols = [dataio.import_trace(t) for t in traces]
    draws = {k: np.concatenate([c[k] for c in cols])
             for k in cols[0] if k not in ("iter",)}
    lj = draws.pop("log_joint")
    family = summary["family"]
    return PosteriorSamples(family=family, draws=draws, log_joint=lj,
                            iters=summary["iters"], burnin=summary["burnin"],
                            thin=summary["thin"], seed=summary["seed"]), summary


def cmd_predict(args) -> int:
    defaults = dict(fit=None, data=None, format="lines", replicates=50,
                    seed=0, out=None, svg=True)
    cfg = _resolve(args, "predict", defaults, required=("fit", "data", "out"))
    samples, fit_summary = _read_fit(Path(cfg["fit"]))
    dataset = _load_dataset(cfg["data"], cfg["format"])
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    reps = int(cfg["replicates"])
    rng = np.random.default_rng(int(cfg["seed"]))
    replicates = posterior_predictive(samples, dataset.counts.n, reps, rng)
    if replicates:
        ks_vals = [ks_reweighted(dataset.counts, r) for r in replicates]
        ks_plain_vals = [plain_ks(dataset.counts, r) for r in replicates]
    else:
        ks_vals, ks_plain_vals = [], []
    if len(replicates) >= 2:
        spec_bands = predictive_bands(replicates, "spectrum")
        rank_bands = predictive_bands(replicates, "rank")
        dataio.export_bands(spec_bands, outdir / "bands_spectrum.csv")
        dataio.export_bands(rank_bands, outdir / "bands_rank.csv")
        if cfg["svg"]:
            data_spec = partition_stats(dataset.counts)
            p1 = LogLogPlot(f"{samples.family}: size proportions", "size", "proportion")
            p1.add_band(spec_bands.axis, spec_bands.lower, spec_bands.upper,
                        color="#aec7e8", label="posterior predictive")
            p1.add_points(data_spec.sizes, data_spec.proportions, color="#d62728",
                          label="data")
            p1.write(outdir / "spectrum.svg")
            p2 = LogLogPlot(f"{samples.family}: ranked counts", "rank", "count")
            p2.add_band(rank_bands.axis, rank_bands.lower, rank_bands.upper,
                        color="#aec7e8", label="posterior predictive")
            p2.add_points(np.arange(1, dataset.counts.num_clusters + 1),
                          dataset.counts.counts, color="#d62728", label="data")
            p2.write(outdir / "rank.svg")
    summary = {
        "family": samples.family,
        "fit_dir": str(cfg["fit"]),
        "data": {"name": dataset.name, "n": dataset.counts.n},
        "replicates": reps,
        "seed": int(cfg["seed"]),
        "ks_reweighted_mean": float(np.mean(ks_vals)) if ks_vals else "nan",
        "ks_plain_mean": float(np.mean(ks_plain_vals)) if ks_plain_vals else "nan",
        "ks_reweighted": ks_vals,
        "credible_intervals_95": fit_summary.get("credible_intervals_95", {}),
    }
    dataio.export_summary(summary, outdir / "summary.json")
    _write_manifest(outdir, "predict", cfg)
    if ks_vals:
        print(f"predict[{samples.family}]: mean reweighted KS = "
              f"{np.mean(ks_vals):.4f} over {reps} replicates")
    else:
        print(f"predict[{samples.family}]: no replicates requested")
    return 0


def cmd_report(args) -> int:
    defaults = dict(inputs=None, out=None)
    cfg = _resolve(args, "report", defaults, required=("inputs", "out"))
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    import json
    rows = []
    for d in cfg["inputs"]:
        spath = Path(d) / "summary.json"
        if not spath.exists():
            raise ValidationError(f"missing predict artifacts: {spath}")
        with open(spath, encoding="utf-8") as fh:
            s = json.load(fh)
        rows.append((s["family"], s["data"]["name"], s["ks_reweighted_mean"],
                     s["ks_plain_mean"], s["replicates"], str(d)))
    with open(outdir / "ks_table.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "dataset", "ks_reweighted_mean", "ks_plain_mean",
                    "replicates", "source"])
        for r in rows:
            w.writerow(r)
    _write_manifest(outdir, "report", {**cfg, "inputs": list(cfg["inputs"])})
    for r in rows:
        print(f"report: {r[0]:10s} {r[1]:20s} reweighted KS {r[2]}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="TOML config file (flags take precedence)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dpcrm",
                                 description="simulation and inference for "
                                             "double power-law normalized CRMs")
    sub = ap.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("sample", help="simulate ranked counts from a model")
    _add_common(ps)
    ps.add_argument("--model", choices=sorted(_MODEL_ALIASES))
    ps.add_argument("--sigma", type=float)
    ps.add_argument("--tau", type=float)
    ps.add_argument("--eta", type=float)
    ps.add_argument("--zeta", type=float)
    ps.add_argument("--c", type=float)
    ps.add_argument("--n", type=int)
    ps.add_argument("--svg", action="store_true", default=None)
    ps.add_argument("--mixture-beta", dest="mixture_beta", type=float)
    ps.add_argument("--mixture-tail", dest="mixture_tail",
                    choices=["pareto", "genpareto", "invgamma"])
    ps.add_argument("--mixture-param1", dest="mixture_param1", type=float)
    ps.add_argument("--mixture-param2", dest="mixture_param2", type=float)
    ps.set_defaults(func=cmd_sample)

    pf = sub.add_parser("fit", help="fit a model to ranked counts by MCMC")
    _add_common(pf)
    pf.add_argument("--data")
    pf.add_argument("--format", choices=["lines", "csv", "edges"])
    pf.add_argument("--model", choices=["gbfry", "bp", "ggp", "py"])
    pf.add_argument("--iters", type=int)
    pf.add_argument("--burnin", type=int)
    pf.add_argument("--thin", type=int)
    pf.add_argument("--chains", type=int)
    pf.add_argument("--jobs", type=int)
    pf.set_defaults(func=cmd_fit)

    pp = sub.add_parser("predict", help="posterior predictive bands and KS")
    _add_common(pp)
    pp.add_argument("--fit", help="directory produced by dpcrm fit")
    pp.add_argument("--data")
    pp.add_argument("--format", choices=["lines", "csv", "edges"])
    pp.add_argument("--replicates", type=int)
    pp.add_argument("--no-svg", dest="svg", action="store_false", default=None)
    pp.set_defaults(func=cmd_predict)

    pr = sub.add_parser("report", help="aggregate KS table across models")
    _add_common(pr)
    pr.add_argument("--inputs", nargs="+", help="predict output directories")
    pr.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    return args.func(args)


def entry() -> None:
    try:
        code = main()
    except (ValidationError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 2
    except (NumericError, ResourceError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        code = 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        code = 4
    sys.exit(code)


if __name__ == "__main__":
    entry()
