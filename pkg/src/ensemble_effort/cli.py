"""Command-line entry point: ``gen``, ``stats``, ``run`` and ``report``.

Exit codes: 0 success, 1 runtime or validation failure, 2 I/O or usage error.

Output files of ``run`` (in ``--out-dir``):
  results.json   {schema_version, config, mar_matrix, means, sds, timings}
  mar_means.csv  model,mean,sd
  manifest.json  config echo, dataset fingerprint, tool version, seed, outputs,
                 timestamp and wall-clock timings

Output files of ``report`` (in ``--out-dir``):
  pvalues.csv    champion,model,statistic,p_value,alternative,exact,n,note
  normality.csv  model,statistic,p_value,n,note
  rg_table.csv   model,<one column per baseline label>
  boxplots.csv   model,min,q1,median,q3,max,n_outliers,outliers
  report.json    the full comparison report
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import sys
from pathlib import Path

from . import __version__, kernels
from .dataset import generate_synthetic, load_csv, pearson, summary_stats
from .ensemble import ROSTER, Hyperparams
from .errors import EffortError
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    boxplots_csv,
    compare_models,
    format_means_table,
    means_csv,
    normality_csv,
    pvalues_csv,
    rg_csv,
    run_experiment,
    select_champion,
)


class UsageError(Exception):
    pass


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _print_stats(d, out=None) -> dict:
    out = out or sys.stdout
    doc = {"n": d.n, "columns": {}, "pearson_vs_target": {}}
    print(f"{'column':<8} {'mean':>10} {'stdev':>10} {'median':>10}", file=out)
    for c in d.columns:
        s = summary_stats(d.column(c))
        doc["columns"][c] = s.to_dict()
        print(f"{c:<8} {s.mean:>10.2f} {s.stdev:>10.2f} {s.median:>10.2f}", file=out)
    for c in d.feature_names:
        try:
            r = pearson(d.column(c), d.target)
        except EffortError:
            r = None
        doc["pearson_vs_target"][c] = r
        print(f"pearson({c}, {d.target_name}) = {'n/a' if r is None else f'{r:.4f}'}", file=out)
    return doc


# -- subcommands ------------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.n < 10:
        raise UsageError(f"--n must be at least 10, got {args.n}")
    if args.noise_sd < 0:
        raise UsageError("--noise-sd must be >= 0")
    d = generate_synthetic(args.n, args.noise_sd, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        d.to_csv(fh)
    print(f"wrote {d.n} rows to {args.out}")
    _print_stats(d)
    return 0


def cmd_stats(args) -> int:
    d = load_csv(args.dataset)
    doc = _print_stats(d)
    if args.json:
        _write(Path(args.json), json.dumps(doc, indent=1) + "\n")
    return 0


def _parse_models(values) -> tuple:
    if not values:
        return ROSTER
    names = []
    for v in values:
        names.extend(s.strip() for s in v.split(",") if s.strip())
    bad = [n for n in names if n not in ROSTER]
    if bad:
        raise UsageError(f"unknown model(s) {', '.join(bad)}; valid names: {', '.join(ROSTER)}")
    return tuple(names)


def _config_from_args(args) -> ExperimentConfig:
    hp = Hyperparams(
        ridge_alpha=args.ridge_alpha,
        lasso_lambda=args.lasso_lambda,
        lasso_lambda_ratio=args.lasso_lambda_ratio,
        bagging_m=args.bagging_m,
        k_folds=args.k_folds,
    )
    return ExperimentConfig(
        mc_iterations=args.iterations,
        train_ratio=args.ratio,
        master_seed=args.seed,
        roster=_parse_models(args.models),
        normalization=args.normalization,
        paper_faithful_norm=args.paper_faithful_norm,
        hyperparams=hp,
    )


def cmd_run(args) -> int:
    if args.from_manifest:
        with open(args.from_manifest, encoding="utf-8") as fh:
            manifest = json.load(fh)
        cfg = ExperimentConfig.from_dict(manifest["config"])
        dataset_path = args.dataset or manifest["dataset"]["path"]
        out_dir = Path(args.out_dir or manifest["outputs"]["dir"])
        if _sha256(dataset_path) != manifest["dataset"]["sha256"]:
            raise EffortError(f"dataset {dataset_path} does not match the manifest fingerprint")
    else:
        if args.dataset is None or args.seed is None or args.out_dir is None:
            raise UsageError("run needs --dataset, --seed and --out-dir (or --from-manifest)")
        cfg = _config_from_args(args)
        dataset_path = args.dataset
        out_dir = Path(args.out_dir)
    d = load_csv(dataset_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    res = run_experiment(cfg, d, workers=args.workers)

    results_path = out_dir / "results.json"
    means_path = out_dir / "mar_means.csv"
    manifest_path = out_dir / "manifest.json"
    _write(results_path, res.to_json(include_timings=args.record_timings))
    _write(means_path, means_csv(res))
    manifest = {
        "schema_version": 1,
        "tool_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "config": cfg.to_dict(),
        "master_seed": cfg.master_seed,
        "dataset": {"path": str(dataset_path), "sha256": _sha256(dataset_path), "n": d.n},
        "outputs": {"dir": str(out_dir), "results": results_path.name,
                    "means": means_path.name, "manifest": manifest_path.name},
        "workers": args.workers,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "timings_seconds": res.timings,
    }
    _write(manifest_path, json.dumps(manifest, indent=1) + "\n")
    print(format_means_table(res))
    return 0


def _parse_pairs(values, flag):
    out = []
    for v in values or ():
        label, sep, num = v.rpartition(":")
        if not sep:
            out.append((v, None))
            continue
        try:
            out.append((label, float(num)))
        except ValueError:
            raise UsageError(f"{flag} expects LABEL:VALUE, got {v!r}") from None
    return out


def cmd_report(args) -> int:
    with open(args.results, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise EffortError(f"{args.results} is not a valid results document: {e}") from None
    res = ExperimentResult.from_dict(doc)
    means = res.means
    baselines = None
    if args.baseline:
        baselines = []
        for label, err in _parse_pairs(args.baseline, "--baseline"):
            if err is None:
                if label not in means:
                    raise UsageError(f"baseline {label!r} has no value and is not in the roster")
                err = means[label]
            baselines.append((label, err))
    injected = {}
    for name, val in _parse_pairs(args.mean, "--mean"):
        if val is None:
            raise UsageError(f"--mean expects NAME:VALUE, got {name!r}")
        injected[name] = val
    seed = res.config.master_seed if args.seed is None else args.seed
    rep = compare_models(res, champion=args.champion, baselines=baselines, means=injected or None,
                         replicates=args.replicates, seed=seed)
    out_dir = Path(args.out_dir or Path(args.results).parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write(out_dir / "pvalues.csv", pvalues_csv(rep))
    _write(out_dir / "normality.csv", normality_csv(rep))
    _write(out_dir / "rg_table.csv", rg_csv(rep))
    _write(out_dir / "boxplots.csv", boxplots_csv(rep))
    _write(out_dir / "report.json", json.dumps(rep.to_dict(), indent=1) + "\n")
    if args.champion:
        print(f"champion {rep.champion} (chosen with --champion)")
    else:
        auto = select_champion(res)
        sd = res.sds[auto]
        print(f"champion {auto}: lowest mean MAR {means[auto]:.4f} (sd {sd:.4e}); "
              "ties broken by smaller sd, then name")
    for name, t in rep.pairwise.items():
        print(f"{rep.champion} vs {name}: W={t.statistic:g} p={t.p_value:.4g}{' ' + t.note if t.note else ''}")
    return 0


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ensemble-effort", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic nc,r,ae dataset")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--noise-sd", type=float, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("stats", help="summary statistics and correlations of a dataset")
    s.add_argument("dataset")
    s.add_argument("--json")
    s.set_defaults(func=cmd_stats)

    r = sub.add_parser("run", help="Monte Carlo evaluation of a model roster")
    r.add_argument("--dataset")
    r.add_argument("--iterations", type=int, default=1000)
    r.add_argument("--seed", type=int)
    r.add_argument("--ratio", type=float, default=0.7)
    r.add_argument("--models", action="append",
                   help=f"comma-separated subset of {','.join(ROSTER)} (default: all)")
    r.add_argument("--out-dir")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--normalization", choices=("features-only", "none"), default="features-only")
    r.add_argument("--paper-faithful-norm", action="store_true",
                   help="scale features once on the whole dataset instead of per training partition")
    r.add_argument("--bagging-m", type=int, default=25)
    r.add_argument("--k-folds", type=int, default=5)
    r.add_argument("--ridge-alpha", type=float, default=1.0)
    r.add_argument("--lasso-lambda", type=float, default=None,
                   help="absolute lasso penalty (default: --lasso-lambda-ratio times lambda_max)")
    r.add_argument("--lasso-lambda-ratio", type=float, default=0.1)
    r.add_argument("--record-timings", action="store_true",
                   help="also store wall-clock timings in results.json (breaks byte-identical reruns)")
    r.add_argument("--from-manifest", help="rerun the configuration recorded in a manifest.json")
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("report", help="normality, Wilcoxon and relative-gain tables from results.json")
    rp.add_argument("--results", required=True)
    rp.add_argument("--champion")
    rp.add_argument("--baseline", action="append",
                    help="LABEL:ERROR, or a roster name to use its live mean (repeatable)")
    rp.add_argument("--mean", action="append", help="NAME:VALUE overriding a stored mean (repeatable)")
    rp.add_argument("--out-dir")
    rp.add_argument("--replicates", type=int, default=10_000)
    rp.add_argument("--seed", type=int, help="normality-test simulation seed (default: the run's master seed)")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {e}", file=sys.stderr)
        return 2
    except EffortError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
