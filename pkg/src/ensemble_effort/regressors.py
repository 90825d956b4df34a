"""Parametric base learners: OLS, ridge, lasso, Huber, ELM and the fixed model.

All linear fits keep the intercept unpenalized by centering the design and
the target before solving, then recovering the intercept from the means.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import kernels
from .dataset import LITERATURE_COEFS, LITERATURE_INTERCEPT
from .errors import DimensionMismatch, EffortError, NotConverged, RankDeficient, TooFewRows
from .linalg import lstsq_pivoted, ridge_solve
from .rng import make_rng

FAMILIES = ("ols", "ridge", "lasso", "huber", "fixed")
ELM_RIDGE = 1e-8


def _as_xy(X, y=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise EffortError("X must be a 2-D matrix")
    if y is None:
        return X
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise EffortError(f"X has {X.shape[0]} rows, y has {y.shape[0]} values")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise EffortError("training data must be finite")
    return X, y


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    coefficients: tuple
    family: str
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise EffortError(f"unknown linear family {self.family!r}")
        coefs = tuple(float(c) for c in np.ravel(self.coefficients))
        if not (np.isfinite(self.intercept) and np.isfinite(coefs).all()):
            raise EffortError("linear model parameters must be finite")
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "coefficients", coefs)

    @property
    def p(self) -> int:
        return len(self.coefficients)

    def predict(self, X) -> np.ndarray:
        X = _as_xy(X)
        if X.shape[1] != self.p:
            raise DimensionMismatch(self.p, X.shape[1])
        return self.intercept + X @ np.asarray(self.coefficients)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "intercept": self.intercept,
            "coefficients": list(self.coefficients),
            "hyperparams": dict(self.hyperparams),
        }


@dataclass(frozen=True, eq=False)
class ElmModel:
    """Single-hidden-layer network with random input weights and sigmoid units."""

    input_weights: np.ndarray
    input_biases: np.ndarray
    output_weights: np.ndarray
    output_intercept: float
    n_hidden: int
    seed: int

    @property
    def family(self) -> str:
        return "elm"

    @property
    def p(self) -> int:
        return self.input_weights.shape[1]

    def hidden(self, X) -> np.ndarray:
        return expit(X @ self.input_weights.T + self.input_biases)

    def predict(self, X) -> np.ndarray:
        X = _as_xy(X)
        if X.shape[1] != self.p:
            raise DimensionMismatch(self.p, X.shape[1])
        return self.output_intercept + self.hidden(X) @ self.output_weights

    def to_dict(self) -> dict:
        return {
            "family": "elm",
            "n_hidden": self.n_hidden,
            "seed": self.seed,
            "input_weights": self.input_weights.tolist(),
            "input_biases": self.input_biases.tolist(),
            "output_weights": self.output_weights.tolist(),
            "output_intercept": self.output_intercept,
        }


def predict(model, X) -> np.ndarray:
    return model.predict(X)


def model_from_dict(doc: dict):
    if doc["family"] == "elm":
        return ElmModel(
            np.asarray(doc["input_weights"], dtype=float),
            np.asarray(doc["input_biases"], dtype=float),
            np.asarray(doc["output_weights"], dtype=float),
            float(doc["output_intercept"]),
            int(doc["n_hidden"]),
            int(doc["seed"]),
        )
    return LinearModel(doc["intercept"], doc["coefficients"], doc["family"], doc.get("hyperparams", {}))


def _center(X, y):
    xm = X.mean(axis=0)
    ym = float(y.mean())
    return X - xm, y - ym, xm, ym


def fit_ols(X, y) -> LinearModel:
    X, y = _as_xy(X, y)
    n, p = X.shape
    if n <= p:
        raise RankDeficient(f"{n} rows cannot determine {p} slopes and an intercept")
    Xc, yc, xm, ym = _center(X, y)
    beta = lstsq_pivoted(Xc, yc)
    return LinearModel(ym - float(xm @ beta), beta, "ols", {})


def fit_ridge(X, y, alpha: float = 1.0) -> LinearModel:
    X, y = _as_xy(X, y)
    if X.shape[0] < 2:
        raise TooFewRows(X.shape[0], 2)
    if not alpha >= 0:
        raise EffortError(f"ridge alpha must be >= 0, got {alpha}")
    if alpha == 0.0 and X.shape[0] <= X.shape[1]:
        raise RankDeficient("unpenalized ridge needs more rows than features")
    Xc, yc, xm, ym = _center(X, y)
    beta = ridge_solve(Xc, yc, float(alpha))
    return LinearModel(ym - float(xm @ beta), beta, "ridge", {"alpha": float(alpha)})


def lasso_lambda_max(X, y) -> float:
    """Smallest penalty at which every lasso slope is zero."""
    X, y = _as_xy(X, y)
    Xc, yc, _, _ = _center(X, y)
    return float(np.abs(Xc.T @ yc).max() / X.shape[0])


def fit_lasso(X, y, lam: float, tol: float = 1e-8, max_iter: int = 1_000_000) -> LinearModel:
    """Lasso by cyclic coordinate descent with soft-thresholding.

    Minimizes ``(1/(2n)) ||y - b0 - X b||^2 + lam ||b||_1``; the intercept is
    not penalized.  Raises :class:`NotConverged` (carrying the last iterate as
    ``.model``) if the largest coefficient change in a sweep never drops
    below ``tol`` within ``max_iter`` sweeps.
    """
    X, y = _as_xy(X, y)
    n = X.shape[0]
    if n < 2:
        raise TooFewRows(n, 2)
    if not lam >= 0:
        raise EffortError(f"lasso lambda must be >= 0, got {lam}")
    if not tol > 0:
        raise EffortError("tol must be positive")
    Xc, yc, xm, ym = _center(X, y)
    G = Xc.T @ Xc / n
    c = Xc.T @ yc / n
    beta, iters, ok = kernels.lasso_cd_gram(G, c, float(lam), float(tol), int(max_iter), np.zeros(X.shape[1]))
    model = LinearModel(
        ym - float(xm @ beta), beta, "lasso", {"lambda": float(lam), "iterations": int(iters)}
    )
    if not ok:
        raise NotConverged(iters, model)
    return model


def fit_huber(X, y, delta: float | None = None, tol: float = 1e-6, max_iter: int = 1000,
              return_trace: bool = False):
    """Huber M-estimate by iteratively reweighted least squares.

    With ``delta=None`` the threshold is re-estimated on every pass as
    ``1.345 * MAD / 0.6745`` of the current residuals; a number fixes it.
    ``return_trace=True`` also returns the per-pass ``(before, after, delta)``
    objective trace.
    """
    X, y = _as_xy(X, y)
    n, p = X.shape
    if n <= p:
        raise RankDeficient(f"{n} rows cannot determine {p} slopes and an intercept")
    if delta is not None and not delta > 0:
        raise EffortError(f"huber delta must be > 0, got {delta}")
    coefs, iters, ok, trace = kernels.huber_irls(
        X, y, -1.0 if delta is None else float(delta), float(tol), int(max_iter)
    )
    hp = {"delta": "adaptive" if delta is None else float(delta), "iterations": int(iters)}
    if len(trace):
        hp["final_delta"] = float(trace[-1, 2])
    model = LinearModel(coefs[0], coefs[1:], "huber", hp)
    if not ok:
        raise NotConverged(iters, model)
    return (model, trace) if return_trace else model


def fit_elm(X, y, n_hidden: int, seed: int) -> ElmModel:
    X, y = _as_xy(X, y)
    n, p = X.shape
    if n < 2:
        raise TooFewRows(n, 2)
    if n_hidden < 1:
        raise EffortError("n_hidden must be >= 1")
    rng = make_rng(seed, "elm")
    W = rng.uniform(-1.0, 1.0, size=(n_hidden, p))
    b = rng.uniform(-1.0, 1.0, size=n_hidden)
    H = expit(X @ W.T + b)
    Hc, yc, hm, ym = _center(H, y)
    try:
        if n <= n_hidden:
            # underdetermined: minimum-norm exact solution when the centered rows are independent
            beta, _, rank, _ = np.linalg.lstsq(Hc, yc, rcond=1e-10)
            if rank < n - 1:
                raise RankDeficient("hidden activations are singular")
        else:
            beta = lstsq_pivoted(Hc, yc)
    except RankDeficient:
        beta = ridge_solve(Hc, yc, ELM_RIDGE)
    return ElmModel(W, b, beta, ym - float(hm @ beta), int(n_hidden), int(seed))


def literature_model() -> LinearModel:
    """Fixed published equation over (N&C, R) in raw lines of code."""
    return LinearModel(LITERATURE_INTERCEPT, LITERATURE_COEFS, "fixed", {})
