"""Bootstrap aggregating and stacked generalization over the base learners.

The eight proposed models combine the four parametric families (linear,
robust, ridge, lasso) either by averaging bootstrap fits of one family
(``B-*``) or by a meta-regressor over out-of-fold predictions of the other
three (``ST-*``).  ``LIT-LR``, ``ELM-2`` and ``ELM-5`` are the literature
baselines.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, bootstrap_indices
from .errors import (
    AllComponentsFailed,
    DegenerateFolds,
    DimensionMismatch,
    EffortError,
    FitError,
    RankDeficient,
    StackingFitError,
    UnknownModelName,
)
from .linalg import ridge_solve
from .regressors import (
    LinearModel,
    fit_elm,
    fit_huber,
    fit_lasso,
    fit_ols,
    fit_ridge,
    lasso_lambda_max,
    literature_model,
)
from .rng import derive_seed, make_rng

BAGGING_RETRIES = 10
META_RIDGE = 1e-8


@dataclass(frozen=True)
class Hyperparams:
    """Tunable settings shared by every learner in a roster."""

    ridge_alpha: float = 1.0
    lasso_lambda: float | None = None
    lasso_lambda_ratio: float = 0.1
    lasso_tol: float = 1e-8
    lasso_max_iter: int = 1_000_000
    huber_delta: float | None = None
    huber_tol: float = 1e-6
    huber_max_iter: int = 1000
    bagging_m: int = 25
    k_folds: int = 5
    include_original_features: bool = True

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class LearnerSpec:
    """One base-learner family plus its hyperparameters."""

    family: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"family": self.family, **self.params}


def learner(family: str, hp: Hyperparams = Hyperparams()) -> LearnerSpec:
    if family == "ols":
        return LearnerSpec("ols")
    if family == "ridge":
        return LearnerSpec("ridge", {"alpha": hp.ridge_alpha})
    if family == "lasso":
        return LearnerSpec("lasso", {
            "lambda": hp.lasso_lambda,
            "lambda_ratio": hp.lasso_lambda_ratio,
            "tol": hp.lasso_tol,
            "max_iter": hp.lasso_max_iter,
        })
    if family == "huber":
        return LearnerSpec("huber", {"delta": hp.huber_delta, "tol": hp.huber_tol, "max_iter": hp.huber_max_iter})
    raise EffortError(f"unknown learner family {family!r}")


def fit_learner(spec: LearnerSpec, X, y, seed: int = 0):
    f, kw = spec.family, spec.params
    if f == "ols":
        return fit_ols(X, y)
    if f == "ridge":
        return fit_ridge(X, y, kw.get("alpha", 1.0))
    if f == "lasso":
        lam = kw.get("lambda")
        if lam is None:
            lam = kw.get("lambda_ratio", 0.1) * lasso_lambda_max(X, y)
        return fit_lasso(X, y, lam, kw.get("tol", 1e-8), kw.get("max_iter", 1_000_000))
    if f == "huber":
        return fit_huber(X, y, kw.get("delta"), kw.get("tol", 1e-6), kw.get("max_iter", 1000))
    if f == "elm":
        return fit_elm(X, y, kw["n_hidden"], seed)
    if f == "fixed":
        return literature_model()
    raise EffortError(f"unknown learner family {f!r}")


# -- bagging -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BaggingModel:
    components: tuple
    base: LearnerSpec
    seed: int
    skipped: int = 0

    @property
    def M(self) -> int:
        return len(self.components)

    @property
    def p(self) -> int:
        return self.components[0].p

    def component_predictions(self, X) -> np.ndarray:
        return np.vstack([m.predict(X) for m in self.components])

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.p:
            raise DimensionMismatch(self.p, X.shape[-1] if X.ndim else 0)
        total = np.zeros(X.shape[0])
        for m in self.components:
            total += m.predict(X)
        return total / len(self.components)

    def to_dict(self) -> dict:
        return {
            "kind": "bagging",
            "base": self.base.to_dict(),
            "seed": self.seed,
            "skipped": self.skipped,
            "components": [m.to_dict() for m in self.components],
        }


def _fit_bagging_arrays(base: LearnerSpec, X, y, M: int, seed: int) -> BaggingModel:
    if M < 1:
        raise EffortError("bagging needs M >= 1")
    n = X.shape[0]
    components = []
    skipped = 0
    for i in range(M):
        for attempt in range(BAGGING_RETRIES + 1):
            s = derive_seed(seed, "component", i) if attempt == 0 else derive_seed(seed, "component", i, "retry", attempt)
            rows = bootstrap_indices(n, s)
            try:
                components.append(fit_learner(base, X[rows], y[rows], s))
                break
            except FitError:
                continue
        else:
            skipped += 1
    if not components:
        raise AllComponentsFailed(f"all {M} bootstrap fits of {base.family} failed")
    return BaggingModel(tuple(components), base, int(seed), skipped)


def fit_bagging(base: LearnerSpec, d: Dataset, M: int = 25, seed: int = 0) -> BaggingModel:
    """Fit ``M`` copies of ``base`` on seeded bootstrap resamples of ``d``.

    Component ``i`` uses the resample seeded by ``derive_seed(seed,
    "component", i)``.  A component whose fit fails is retried on up to ten
    fresh resamples, then dropped; the ensemble fails only if every component
    is dropped.
    """
    return _fit_bagging_arrays(base, d.features, d.target, M, seed)


def predict_bagging(m: BaggingModel, X) -> np.ndarray:
    return m.predict(X)


# -- stacking --------------------------------------------------------------------

def fold_assignment(n: int, k_folds: int, seed: int) -> tuple:
    if k_folds < 2:
        raise DegenerateFolds(f"k_folds must be >= 2, got {k_folds}")
    if n < 2 * k_folds:
        raise DegenerateFolds(f"{n} rows are too few for {k_folds} folds (need {2 * k_folds})")
    perm = make_rng(seed, "folds").permutation(n)
    return tuple(np.sort(f) for f in np.array_split(perm, k_folds))


@dataclass(frozen=True, eq=False)
class StackingModel:
    level0: tuple
    meta: object
    level0_specs: tuple
    meta_spec: LearnerSpec
    k_folds: int
    include_original_features: bool
    seed: int
    folds: tuple = ()
    meta_stabilized: bool = False

    @property
    def p(self) -> int:
        return self.level0[0].p

    def level1_design(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.p:
            raise DimensionMismatch(self.p, X.shape[-1] if X.ndim else 0)
        preds = np.column_stack([m.predict(X) for m in self.level0])
        return np.hstack([preds, X]) if self.include_original_features else preds

    def predict(self, X) -> np.ndarray:
        return self.meta.predict(self.level1_design(X))

    def to_dict(self) -> dict:
        return {
            "kind": "stacking",
            "k_folds": self.k_folds,
            "include_original_features": self.include_original_features,
            "seed": self.seed,
            "meta_stabilized": self.meta_stabilized,
            "level0": [m.to_dict() for m in self.level0],
            "meta": self.meta.to_dict(),
        }


def _fit_meta(spec: LearnerSpec, Z, y, seed):
    try:
        return fit_learner(spec, Z, y, seed), False
    except RankDeficient:
        # collinear level-1 columns, e.g. identical level-0 forecasts
        Zc = Z - Z.mean(axis=0)
        beta = ridge_solve(Zc, y - y.mean(), META_RIDGE)
        icpt = float(y.mean() - Z.mean(axis=0) @ beta)
        return LinearModel(icpt, beta, "ridge", {"alpha": META_RIDGE, "stabilized_from": spec.family}), True


def _fit_stacking_arrays(level0_specs, meta_spec, X, y, k_folds, seed, include_original_features):
    n = X.shape[0]
    folds = fold_assignment(n, k_folds, seed)
    L = len(level0_specs)
    if L < 1:
        raise EffortError("stacking needs at least one level-0 learner")
    oof = np.empty((n, L))
    for k, held in enumerate(folds):
        train = np.setdiff1d(np.arange(n), held, assume_unique=True)
        for j, spec in enumerate(level0_specs):
            try:
                m = fit_learner(spec, X[train], y[train], derive_seed(seed, "level0", k, j))
            except FitError as e:
                raise StackingFitError(k, spec.family, e) from e
            oof[held, j] = m.predict(X[held])
    Z = np.hstack([oof, X]) if include_original_features else oof
    meta, stabilized = _fit_meta(meta_spec, Z, y, derive_seed(seed, "meta"))
    level0 = []
    for j, spec in enumerate(level0_specs):
        try:
            level0.append(fit_learner(spec, X, y, derive_seed(seed, "level0", "all", j)))
        except FitError as e:
            raise StackingFitError(None, spec.family, e) from e
    return StackingModel(
        tuple(level0), meta, tuple(level0_specs), meta_spec, int(k_folds),
        bool(include_original_features), int(seed), folds, stabilized,
    )


def fit_stacking(level0_specs, meta_spec: LearnerSpec, d: Dataset, k_folds: int = 5,
                 seed: int = 0, include_original_features: bool = True) -> StackingModel:
    """Two-level stacked generalization.

    Each level-0 learner is fitted on the complement of every fold and
    predicts that fold, giving out-of-fold forecasts for all rows.  The
    meta-regressor is fitted on those forecasts (with the original features
    appended when ``include_original_features``) against the true target.
    Level-0 learners are then refitted on all of ``d`` for deployment.
    """
    return _fit_stacking_arrays(level0_specs, meta_spec, d.features, d.target,
                                k_folds, seed, include_original_features)


def predict_stacking(m: StackingModel, X) -> np.ndarray:
    return m.predict(X)


# -- roster -----------------------------------------------------------------------

_SUFFIX = {"LR": "ols", "RR": "huber", "RI": "ridge", "LA": "lasso"}
# level-0 families in the order each stacking model lists them
_LEVEL0 = {
    "ST-LR": ("huber", "ridge", "lasso"),
    "ST-RR": ("ols", "ridge", "lasso"),
    "ST-RI": ("huber", "ols", "lasso"),
    "ST-LA": ("ols", "huber", "ridge"),
}
PROPOSED = ("B-LR", "B-RR", "B-RI", "B-LA", "ST-LR", "ST-RR", "ST-RI", "ST-LA")
BASELINES = ("LIT-LR", "ELM-2", "ELM-5")
ROSTER = PROPOSED + BASELINES


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: str  # bagging | stacking | fixed | elm
    base: LearnerSpec | None = None
    level0: tuple = ()
    meta: LearnerSpec | None = None
    M: int = 25
    k_folds: int = 5
    include_original_features: bool = True
    raw_features: bool = False

    def to_dict(self) -> dict:
        out = {"name": self.name, "kind": self.kind}
        if self.kind == "bagging":
            out.update(base=self.base.to_dict(), M=self.M)
        elif self.kind == "stacking":
            out.update(level0=[s.to_dict() for s in self.level0], meta=self.meta.to_dict(),
                       k_folds=self.k_folds, include_original_features=self.include_original_features)
        elif self.kind == "elm":
            out.update(base=self.base.to_dict())
        return out


def build_spec(name: str, hp: Hyperparams = Hyperparams()) -> ModelSpec:
    if name not in ROSTER:
        raise UnknownModelName(name, ROSTER)
    if name.startswith("B-"):
        return ModelSpec(name, "bagging", base=learner(_SUFFIX[name[2:]], hp), M=hp.bagging_m)
    if name.startswith("ST-"):
        return ModelSpec(
            name, "stacking",
            level0=tuple(learner(f, hp) for f in _LEVEL0[name]),
            meta=learner(_SUFFIX[name[3:]], hp),
            k_folds=hp.k_folds,
            include_original_features=hp.include_original_features,
        )
    if name == "LIT-LR":
        return ModelSpec(name, "fixed", base=LearnerSpec("fixed"), raw_features=True)
    return ModelSpec(name, "elm", base=LearnerSpec("elm", {"n_hidden": int(name.split("-")[1])}))


def fit_model(spec: ModelSpec, X, y, seed: int):
    """Fit any roster model on training arrays; returns an object with ``predict``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.kind == "bagging":
        return _fit_bagging_arrays(spec.base, X, y, spec.M, seed)
    if spec.kind == "stacking":
        return _fit_stacking_arrays(spec.level0, spec.meta, X, y, spec.k_folds, seed,
                                    spec.include_original_features)
    return fit_learner(spec.base, X, y, seed)

