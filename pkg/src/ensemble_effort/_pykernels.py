"""Pure Python / numpy implementations of the hot kernels.

These are the reference semantics for the compiled ``_ckernels`` module and
the fallback used when it is not built.
"""

import numpy as np

from .errors import RankDeficient
from .linalg import lstsq_pivoted

HUBER_K = 1.345
MAD_NORMAL = 0.6745


def lasso_cd_gram(G, c, lam, tol, max_iter, beta):
    """Cyclic coordinate descent for ``0.5 b'Gb - c'b + lam |b|_1``.

    ``G = Xc'Xc / n`` and ``c = Xc'yc / n`` for centered data.  Returns
    ``(beta, iterations, converged)``; convergence means the largest absolute
    coefficient change within one sweep fell below ``tol``.
    """
    G = np.asarray(G, dtype=float).tolist()
    c = np.asarray(c, dtype=float).tolist()
    b = [float(v) for v in beta]
    p = len(c)
    for it in range(1, int(max_iter) + 1):
        maxchg = 0.0
        for j in range(p):
            gjj = G[j][j]
            if gjj <= 1e-300:
                new = 0.0
            else:
                rho = c[j]
                row = G[j]
                for k in range(p):
                    if k != j:
                        rho -= row[k] * b[k]
                if rho > lam:
                    new = (rho - lam) / gjj
                elif rho < -lam:
                    new = (rho + lam) / gjj
                else:
                    new = 0.0
            chg = abs(new - b[j])
            if chg > maxchg:
                maxchg = chg
            b[j] = new
        if maxchg < tol:
            return np.array(b), it, True
    return np.array(b), int(max_iter), False


def _weighted_fit(X, y, w):
    sw = w.sum()
    xm = (w @ X) / sw
    ym = float(w @ y) / sw
    s = np.sqrt(w)
    beta = lstsq_pivoted((X - xm) * s[:, None], (y - ym) * s)
    out = np.empty(X.shape[1] + 1)
    out[0] = ym - float(xm @ beta)
    out[1:] = beta
    return out


def huber_loss(r, delta):
    a = np.abs(r)
    return float(np.where(a <= delta, 0.5 * r * r, delta * a - 0.5 * delta * delta).sum())


def huber_irls(X, y, delta, tol, max_iter):
    """Huber M-estimation by iteratively reweighted least squares.

    ``delta > 0`` fixes the threshold; ``delta <= 0`` re-estimates it every
    pass as ``1.345 * MAD(residuals) / 0.6745``.  Starts from the ordinary
    least-squares fit.  Returns ``(coefs, iterations, converged, trace)``
    where ``coefs`` is ``[intercept, slopes...]`` and ``trace`` has one row
    ``(objective_before, objective_after, delta)`` per pass, both objectives
    evaluated at that pass's threshold.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n = y.shape[0]
    coefs = _weighted_fit(X, y, np.ones(n))
    trace = []
    scale_floor = 1e-12 * (1.0 + float(np.abs(y).max()))
    r = y - coefs[0] - X @ coefs[1:]
    for it in range(1, int(max_iter) + 1):
        if delta > 0:
            d = float(delta)
        else:
            s = float(np.median(np.abs(r - np.median(r)))) / MAD_NORMAL
            if s <= scale_floor:
                return coefs, it - 1, True, np.array(trace).reshape(-1, 3)
            d = HUBER_K * s
        before = huber_loss(r, d)
        a = np.abs(r)
        w = np.ones(n)
        big = a > d
        w[big] = d / a[big]
        new = _weighted_fit(X, y, w)
        r = y - new[0] - X @ new[1:]
        trace.append((before, huber_loss(r, d), d))
        chg = float(np.abs(new - coefs).max())
        coefs = new
        if chg < tol:
            return coefs, it, True, np.array(trace)
    return coefs, int(max_iter), False, np.array(trace)


def signed_rank_counts(ranks2):
    """Null distribution of twice the positive-rank sum over all sign vectors.

    ``ranks2`` holds doubled (mid)ranks, which are integers.  Entry ``s`` of
    the result counts the sign assignments whose doubled positive-rank sum is
    ``s``; the counts add up to ``2**len(ranks2)``.
    """
    r2 = [int(v) for v in ranks2]
    total = sum(r2)
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for v in r2:
        if v == 0:
            counts = counts * 2
            continue
        shifted = np.zeros_like(counts)
        shifted[v:] = counts[: total + 1 - v]
        counts = counts + shifted
    return counts


__all__ = ["lasso_cd_gram", "huber_irls", "huber_loss", "signed_rank_counts", "RankDeficient"]
