"""Multivariate linear regression of the complement coordinates on the projected ones."""

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, RpecluError, ScoreInvalidError

VARIANCE_FLOOR = 1e-12
REG_STRUCTURES = ("auto", "full", "diagonal")
LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class RegressionFit:
    """Gaussian linear regression of ``y_comp`` on ``[1, y]``.

    ``coefficients`` has the intercept in row 0. ``residual_cov`` is an
    (m, m) matrix for ``structure="full"`` and a length-m vector of
    variances for ``"diagonal"``, where m = p - d.
    """

    coefficients: np.ndarray
    residual_cov: np.ndarray
    loglik: float
    q_ybar: int
    structure: str


def n_regression_params(d, m, structure):
    """Free parameters of the regression of m responses on d regressors plus intercept."""
    if structure == "full":
        return m * (d + 1) + m * (m + 1) // 2
    if structure == "diagonal":
        return m * (d + 1) + m
    raise RpecluError(f"unknown residual structure {structure!r}")


def resolve_structure(structure, n, m, d=0):
    """Map ``"auto"`` onto a concrete structure.

    Full is used whenever the residual covariance of m responses is
    estimable from the n - d - 1 residual degrees of freedom; otherwise the
    diagonal form. Only the full form makes the composite score invariant to
    the choice of basis of the complement.
    """
    if structure == "auto":
        return "full" if m < n - d - 1 else "diagonal"
    if structure not in ("full", "diagonal"):
        raise RpecluError(f"unknown residual structure {structure!r}")
    return structure


def fit_regression(y, y_comp, structure="diagonal"):
    y = np.asarray(y, dtype=float)
    y_comp = np.asarray(y_comp, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y_comp.ndim == 1:
        y_comp = y_comp[:, None]
    n, d = y.shape
    m = y_comp.shape[1]
    if y_comp.shape[0] != n:
        raise RpecluError("y and y_comp must have the same number of rows")
    if n <= d + 1:
        raise InfeasibleError(f"regression needs n > d + 1, got n={n}, d={d}")
    structure = resolve_structure(structure, n, m, d)
    if structure == "full" and n <= m:
        raise InfeasibleError(
            f"full residual covariance needs n > p - d (n={n}, p-d={m}); use structure='diagonal'"
        )

    design = np.column_stack([np.ones(n), y])
    coef, *_ = np.linalg.lstsq(design, y_comp, rcond=None)
    resid = y_comp - design @ coef

    if structure == "diagonal":
        rss = np.einsum("ij,ij->j", resid, resid)
        var = np.maximum(rss / n, VARIANCE_FLOOR)
        loglik = float(np.sum(-0.5 * n * (LOG_2PI + np.log(var)) - 0.5 * rss / var))
        cov = var
    else:
        cov = resid.T @ resid / n
        cov = 0.5 * (cov + cov.T)
        evals, evecs = np.linalg.eigh(cov)
        evals = np.maximum(evals, VARIANCE_FLOOR)
        cov = (evecs * evals) @ evecs.T
        # quadratic form through the eigenbasis keeps the floored case exact
        z = resid @ evecs
        quad = np.sum(z * z / evals)
        loglik = float(-0.5 * n * (m * LOG_2PI + np.sum(np.log(evals))) - 0.5 * quad)

    return RegressionFit(
        coefficients=coef,
        residual_cov=cov,
        loglik=loglik,
        q_ybar=n_regression_params(d, m, structure),
        structure=structure,
    )


def bic_reg(fit, n):
    """``2 loglik - q_ybar ln(n)``."""
    return 2.0 * fit.loglik - fit.q_ybar * np.log(n)


def composite_bic(bic_gmm_value, bic_reg_value):
    """Score of a projection: mixture BIC on the projected data plus regression BIC."""
    if not (np.isfinite(bic_gmm_value) and np.isfinite(bic_reg_value)):
        raise ScoreInvalidError(f"non-finite BIC term ({bic_gmm_value}, {bic_reg_value})")
    return float(bic_gmm_value) + float(bic_reg_value)
