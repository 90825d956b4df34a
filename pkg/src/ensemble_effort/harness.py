"""Monte Carlo shuffle-split evaluation of a model roster.

Each iteration draws a seeded 70/30 style split, scales the features with
ranges taken from the training rows only, fits every roster model on the
training partition and scores it by mean absolute residual on the test
partition.  Iterations are independent and can run in worker processes; the
result never depends on the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dataset import Dataset, minmax_normalize, split_indices
from .ensemble import BASELINES, ROSTER, Hyperparams, build_spec, fit_model
from .errors import (
    AllZeroDifferences,
    EffortError,
    ExperimentError,
    TooFewValues,
    UnknownModel,
    ZeroVariance,
)
from .rng import derive_seed
from .stats import (
    LILLIEFORS_REPLICATES,
    TestResult,
    boxplot_summary,
    lilliefors_test,
    mar,
    relative_gain,
    wilcoxon_signed_rank,
)

SCHEMA_VERSION = 1
NORMALIZATIONS = ("features-only", "none")


@dataclass(frozen=True)
class ExperimentConfig:
    mc_iterations: int = 1000
    train_ratio: float = 0.7
    master_seed: int = 0
    roster: tuple = ROSTER
    normalization: str = "features-only"
    paper_faithful_norm: bool = False
    hyperparams: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        object.__setattr__(self, "roster", tuple(self.roster))
        if self.mc_iterations < 1:
            raise EffortError("mc_iterations must be >= 1")
        if not 0.0 < self.train_ratio < 1.0:
            raise EffortError("train_ratio must lie in (0, 1)")
        if not self.roster:
            raise EffortError("roster must not be empty")
        if len(set(self.roster)) != len(self.roster):
            raise EffortError("roster names must be unique")
        if self.normalization not in NORMALIZATIONS:
            raise EffortError(f"normalization must be one of {NORMALIZATIONS}")
        for name in self.roster:
            build_spec(name, self.hyperparams)

    def to_dict(self) -> dict:
        return {
            "mc_iterations": self.mc_iterations,
            "train_ratio": self.train_ratio,
            "master_seed": self.master_seed,
            "roster": list(self.roster),
            "normalization": self.normalization,
            "paper_faithful_norm": self.paper_faithful_norm,
            "hyperparams": self.hyperparams.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        return cls(
            mc_iterations=int(doc["mc_iterations"]),
            train_ratio=float(doc["train_ratio"]),
            master_seed=int(doc["master_seed"]),
            roster=tuple(doc["roster"]),
            normalization=doc.get("normalization", "features-only"),
            paper_faithful_norm=bool(doc.get("paper_faithful_norm", False)),
            hyperparams=Hyperparams(**doc.get("hyperparams", {})),
        )


def _nan_to_none(x):
    return None if isinstance(x, float) and math.isnan(x) else x


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    config: ExperimentConfig
    mar_matrix: np.ndarray
    timings: dict = field(default_factory=dict)
    backend: str = kernels.BACKEND

    def __post_init__(self):
        m = np.array(self.mar_matrix, dtype=float)
        if m.shape != (self.config.mc_iterations, len(self.config.roster)):
            raise EffortError(f"mar_matrix has shape {m.shape}")
        if not np.isfinite(m).all():
            raise EffortError("mar_matrix must be fully populated with finite values")
        m.setflags(write=False)
        object.__setattr__(self, "mar_matrix", m)

    @property
    def roster(self) -> tuple:
        return self.config.roster

    def column(self, name: str) -> np.ndarray:
        if name not in self.roster:
            raise UnknownModel(f"{name!r} is not in the roster {', '.join(self.roster)}")
        return self.mar_matrix[:, self.roster.index(name)]

    @property
    def means(self) -> dict:
        return {n: float(v) for n, v in zip(self.roster, self.mar_matrix.mean(axis=0))}

    @property
    def sds(self) -> dict:
        if self.mar_matrix.shape[0] < 2:
            return {n: float("nan") for n in self.roster}
        return {n: float(v) for n, v in zip(self.roster, self.mar_matrix.std(axis=0, ddof=1))}

    def to_dict(self, include_timings: bool = False) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "mar_matrix": self.mar_matrix.tolist(),
            "means": self.means,
            "sds": {k: _nan_to_none(v) for k, v in self.sds.items()},
            "timings": dict(self.timings) if include_timings else None,
        }

    def to_json(self, include_timings: bool = False) -> str:
        return json.dumps(self.to_dict(include_timings), indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentResult":
        if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
            raise EffortError(f"results document must carry schema_version {SCHEMA_VERSION}")
        for key in ("config", "mar_matrix", "means", "sds"):
            if key not in doc:
                raise EffortError(f"results document lacks {key!r}")
        return cls(ExperimentConfig.from_dict(doc["config"]), np.asarray(doc["mar_matrix"], dtype=float),
                   doc.get("timings") or {})


# -- Monte Carlo loop -------------------------------------------------------------------

def _iteration(cfg: ExperimentConfig, specs, d: Dataset, global_X, i: int):
    """MAR of every roster model on split ``i``; retried once on failure."""
    err = None
    for attempt in range(2):
        split_seed = derive_seed(cfg.master_seed, "split", i)
        if attempt:
            split_seed = derive_seed(cfg.master_seed, "split", i, "fallback")
        tr, te = split_indices(d.n, cfg.train_ratio, split_seed)
        train = d.take(tr)
        row = np.empty(len(specs))
        times = np.zeros(len(specs))
        name = None
        try:
            if cfg.normalization == "none":
                Xtr, Xte = train.features, d.features[te]
            elif cfg.paper_faithful_norm:
                Xtr, Xte = global_X[tr], global_X[te]
            else:
                # ranges come from the training partition alone
                train_scaled, params = minmax_normalize(train)
                Xtr, Xte = train_scaled.features, params.transform(d, d.features[te])
            y_te = d.target[te]
            for j, spec in enumerate(specs):
                name = spec.name
                t0 = time.perf_counter()
                if spec.raw_features:
                    model = fit_model(spec, train.features, train.target, 0)
                    pred = model.predict(d.features[te])
                else:
                    model = fit_model(spec, Xtr, train.target, derive_seed(split_seed, "model", spec.name))
                    pred = model.predict(Xte)
                row[j] = mar(y_te, pred).value
                times[j] = time.perf_counter() - t0
            return row, times
        except EffortError as e:
            err = ExperimentError(i, name or "<normalization>", e)
    raise err


def _run_block(cfg: ExperimentConfig, d: Dataset, start: int, stop: int):
    specs = [build_spec(n, cfg.hyperparams) for n in cfg.roster]
    global_X = None
    if cfg.normalization != "none" and cfg.paper_faithful_norm:
        global_X = minmax_normalize(d)[0].features
    rows, times = [], []
    for i in range(start, stop):
        r, t = _iteration(cfg, specs, d, global_X, i)
        rows.append(r)
        times.append(t)
    return np.array(rows).reshape(-1, len(specs)), np.array(times).reshape(-1, len(specs))


def run_experiment(cfg: ExperimentConfig, d: Dataset, workers: int = 1) -> ExperimentResult:
    """Run the Monte Carlo protocol; iterations are numbered from 1."""
    first, last = 1, cfg.mc_iterations + 1
    if workers <= 1:
        mat, tim = _run_block(cfg, d, first, last)
    else:
        bounds = np.linspace(first, last, min(workers * 4, cfg.mc_iterations) + 1).astype(int)
        blocks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_block, cfg, d, a, b) for a, b in blocks]
            parts = [f.result() for f in futures]
        mat = np.vstack([p[0] for p in parts])
        tim = np.vstack([p[1] for p in parts])
    timings = {n: float(t) for n, t in zip(cfg.roster, tim.sum(axis=0))}
    return ExperimentResult(cfg, mat, timings)


# -- comparison ----------------------------------------------------------------------------

def select_champion(res: ExperimentResult) -> str:
    """Lowest mean MAR; ties go to the smaller SD, then the name."""
    means, sds = res.means, res.sds

    def key(name):
        sd = sds[name]
        return (means[name], math.inf if math.isnan(sd) else sd, name)

    return min(res.roster, key=key)


def rg_table(means: dict, baselines) -> dict:
    return {
        name: {label: relative_gain(err, m) for label, err in baselines}
        for name, m in means.items()
    }


@dataclass(frozen=True)
class ComparisonReport:
    champion: str
    normality: dict
    pairwise: dict
    rg_table: dict
    baselines: tuple
    boxplots: dict
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "champion": self.champion,
            "normality": {k: (v.to_dict() if v else None) for k, v in self.normality.items()},
            "pairwise": {k: v.to_dict() for k, v in self.pairwise.items()},
            "baselines": [{"label": lab, "error": err} for lab, err in self.baselines],
            "rg_table": self.rg_table,
            "boxplots": {k: (v.to_dict() if v else None) for k, v in self.boxplots.items()},
            "notes": self.notes,
        }


def default_baselines(res: ExperimentResult) -> list:
    means = res.means
    return [(n, means[n]) for n in BASELINES if n in res.roster]


def compare_models(res: ExperimentResult, champion: str | None = None, baselines=None,
                   means: dict | None = None, replicates: int = LILLIEFORS_REPLICATES,
                   seed: int = 0) -> ComparisonReport:
    """Normality, one-sided paired Wilcoxon and relative-gain comparison.

    ``baselines`` is a list of ``(label, error)``; by default the literature
    models present in the roster, at their live mean MAR.  ``means`` may
    override the stored per-model means used for the relative-gain table.
    """
    champion = champion or select_champion(res)
    if champion not in res.roster:
        raise UnknownModel(f"champion {champion!r} is not in the roster")
    baselines = tuple(default_baselines(res) if baselines is None else baselines)
    notes = {}
    normality, boxes = {}, {}
    for name in res.roster:
        col = res.column(name)
        try:
            normality[name] = lilliefors_test(col, replicates=replicates, seed=seed)
        except (TooFewValues, ZeroVariance) as e:
            normality[name] = None
            notes[f"normality:{name}"] = str(e)
        try:
            boxes[name] = boxplot_summary(col)
        except TooFewValues as e:
            boxes[name] = None
            notes[f"boxplot:{name}"] = str(e)
    pairwise = {}
    champ = res.column(champion)
    for name in res.roster:
        if name == champion:
            continue
        try:
            pairwise[name] = wilcoxon_signed_rank(champ, res.column(name), "less")
        except (AllZeroDifferences, TooFewValues) as e:
            pairwise[name] = TestResult(0.0, 1.0, "wilcoxon-signed-rank", "less", True, 0,
                                        note=f"no evidence: {e}")
    stored = dict(res.means)
    if means:
        stored.update(means)
    return ComparisonReport(champion, normality, pairwise, rg_table(stored, baselines), baselines, boxes, notes)


# -- tabular views -----------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# column orders of the CSV views
MEANS_COLUMNS = ("model", "mean", "sd")
PVALUE_COLUMNS = ("champion", "model", "statistic", "p_value", "alternative", "exact", "n", "note")
NORMALITY_COLUMNS = ("model", "statistic", "p_value", "n", "note")
BOXPLOT_COLUMNS = ("model", "min", "q1", "median", "q3", "max", "n_outliers", "outliers")


def means_csv(res: ExperimentResult) -> str:
    means, sds = res.means, res.sds
    return _csv(MEANS_COLUMNS, [(n, means[n], sds[n]) for n in res.roster])


def pvalues_csv(rep: ComparisonReport) -> str:
    return _csv(PVALUE_COLUMNS, [
        (rep.champion, n, t.statistic, t.p_value, t.alternative, t.exact, t.n, t.note)
        for n, t in rep.pairwise.items()
    ])


def normality_csv(rep: ComparisonReport) -> str:
    rows = []
    for n, t in rep.normality.items():
        if t is None:
            rows.append((n, None, None, None, rep.notes.get(f"normality:{n}", "")))
        else:
            rows.append((n, t.statistic, t.p_value, t.n, t.note))
    return _csv(NORMALITY_COLUMNS, rows)


def rg_csv(rep: ComparisonReport) -> str:
    labels = [lab for lab, _ in rep.baselines]
    return _csv(("model",) + tuple(labels), [
        (n,) + tuple(row[lab] for lab in labels) for n, row in rep.rg_table.items()
    ])


def boxplots_csv(rep: ComparisonReport) -> str:
    rows = []
    for n, b in rep.boxplots.items():
        if b is None:
            rows.append((n, None, None, None, None, None, None, None))
        else:
            rows.append((n, b.min, b.q1, b.median, b.q3, b.max, len(b.outliers),
                         ";".join(repr(v) for v in b.outliers)))
    return _csv(BOXPLOT_COLUMNS, rows)


def format_means_table(res: ExperimentResult) -> str:
    means, sds = res.means, res.sds
    width = max(len(n) for n in res.roster)
    lines = [f"{'Technique':<{width}}  Mean (standard deviation)"]
    for n in res.roster:
        sd = sds[n]
        sd_txt = "n/a" if math.isnan(sd) else f"{sd:.4e}"
        lines.append(f"{n:<{width}}  {means[n]:.4f} ({sd_txt})")
    return "\n".join(lines)
