"""Gaussian mixture fitting by EM on projected data."""

from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .errors import FitFailureError, InfeasibleError, RpecluError

logger = logging.getLogger(__name__)

COV_STRUCTURES = ("full", "diagonal", "spherical")
LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class EmConfig:
    tol: float = 1e-6
    max_iter: int = 200
    n_starts: int = 3
    ridge: float = 1e-6
    max_reseeds: int = 3


@dataclass
class GmmModel:
    """Fitted mixture. ``covariances`` is always stored as a (G, d, d) array."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    loglik: float
    q_y: int
    cov_structure: str = "full"
    n_iter: int = 0
    converged: bool = False
    history: list = field(default_factory=list, repr=False)

    @property
    def g(self):
        return len(self.weights)

    @property
    def d(self):
        return self.means.shape[1]


@dataclass(frozen=True)
class HardPartition:
    """Cluster labels in ``1..g`` for n units."""

    labels: np.ndarray
    g: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.size == 0:
            raise RpecluError("partition must be a non-empty 1-d label vector")
        if labels.min() < 1 or labels.max() > self.g:
            raise RpecluError(f"labels must lie in 1..{self.g}")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.labels.size

    def membership(self):
        """One-hot n x g membership matrix."""
        u = np.zeros((self.n, self.g))
        u[np.arange(self.n), self.labels - 1] = 1.0
        return u


def n_free_params(g, d, cov_structure="full"):
    """Free-parameter count of a G-component, d-dimensional mixture."""
    per_cov = {"full": d * (d + 1) // 2, "diagonal": d, "spherical": 1}[cov_structure]
    return (g - 1) + g * d + g * per_cov


def bic_gmm(model, n):
    """``2 loglik - q_y ln(n)``."""
    return 2.0 * model.loglik - model.q_y * np.log(n)


def map_partition(responsibilities):
    """Assign each row to its most probable component; ties go to the lowest index."""
    r = np.asarray(responsibilities, dtype=float)
    if r.ndim != 2 or r.size == 0:
        raise RpecluError("responsibility matrix is empty")
    if not np.allclose(r.sum(axis=1), 1.0, rtol=0, atol=1e-8):
        raise RpecluError("responsibility rows must sum to 1")
    return HardPartition(np.argmax(r, axis=1) + 1, r.shape[1])


def kmeanspp_centers(x, k, rng):
    """k-means++ seeding: pick centres with probability proportional to squared distance."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[j] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def _floor_eigen(cov, floor):
    # raise the smallest eigenvalue to ``floor`` by a diagonal shift, only when needed
    lam_min = np.linalg.eigvalsh(cov)[0]
    if lam_min < floor:
        cov = cov + (floor - lam_min) * np.eye(cov.shape[0])
    return cov


class _Degenerate(Exception):
    pass


def _component_logpdf(y, mean, cov):
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise _Degenerate(str(exc)) from None
    z = solve_triangular(chol, (y - mean).T, lower=True, check_finite=False)
    maha = np.einsum("ij,ij->j", z, z)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (y.shape[1] * LOG_2PI + logdet + maha)


def _e_step(y, weights, means, covs):
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    logp = np.column_stack(
        [_component_logpdf(y, means[k], covs[k]) for k in range(len(weights))]
    ) + logw
    norm = logsumexp(logp, axis=1)
    loglik = float(norm.sum())
    if not np.isfinite(loglik):
        raise _Degenerate("non-finite log-likelihood")
    resp = np.exp(logp - norm[:, None])
    # renormalise against rounding in exp
    resp /= resp.sum(axis=1, keepdims=True)
    return resp, loglik, norm


def _m_step(y, resp, cov_structure, ridge, abs_floor, skip=()):
    n, d = y.shape
    nk = resp.sum(axis=0)
    nk[list(skip)] = 1.0
    weights = nk / n
    means = (resp.T @ y) / nk[:, None]
    covs = np.zeros((len(nk), d, d))
    for k in range(len(nk)):
        if k in skip:
            continue
        diff = y - means[k]
        wdiff = diff * resp[:, k : k + 1]
        if cov_structure == "full":
            cov = wdiff.T @ diff / nk[k]
            cov = 0.5 * (cov + cov.T)
        else:
            var = np.einsum("ij,ij->j", wdiff, diff) / nk[k]
            if cov_structure == "spherical":
                var = np.full(d, var.mean())
            cov = np.diag(var)
        floor = max(ridge * np.trace(cov) / d, abs_floor)
        covs[k] = _floor_eigen(cov, floor)
    return weights, means, covs


def _min_mass(d, cov_structure):
    return d + 1.0 if cov_structure == "full" else 2.0


def _run_em(y, g, cov_structure, rng, config, abs_floor):
    n, d = y.shape
    centers = kmeanspp_centers(y, g, rng)
    d2 = ((y[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    resp = np.zeros((n, g))
    resp[np.arange(n), np.argmin(d2, axis=1)] = 1.0

    global_cov = _floor_eigen(np.atleast_2d(np.cov(y, rowvar=False, bias=True)), abs_floor)
    if cov_structure != "full":
        global_cov = np.diag(np.diag(global_cov))
    min_mass = _min_mass(d, cov_structure)
    reseeds = 0

    def m_step(resp, point_logdens):
        nonlocal reseeds
        nk = resp.sum(axis=0)
        starved = np.flatnonzero(nk < min_mass)
        if starved.size:
            reseeds += 1
            if reseeds > config.max_reseeds:
                raise _Degenerate("components repeatedly lost their mass")
            resp = resp.copy()
            resp[:, starved] = 0.0
            others = np.setdiff1d(np.arange(g), starved)
            if others.size == 0:
                raise _Degenerate("every component lost its mass")
            orphans = resp.sum(axis=1) == 0
            resp[np.ix_(orphans, others)] = 1.0 / others.size
        weights, means, covs = _m_step(y, resp, cov_structure, config.ridge, abs_floor, starved)
        if starved.size:
            # re-seed at the worst-explained points with the pooled covariance
            if point_logdens is None:
                worst = rng.choice(n, size=starved.size, replace=False)
            else:
                worst = np.argsort(point_logdens, kind="stable")[: starved.size]
            for k, i in zip(starved, worst):
                means[k] = y[i]
                covs[k] = global_cov
                weights[k] = 1.0 / g
            weights /= weights.sum()
            logger.debug("re-seeded %d component(s)", starved.size)
        return weights, means, covs

    weights, means, covs = m_step(resp, None)
    history = []
    loglik = -np.inf
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        resp, new_ll, point_logdens = _e_step(y, weights, means, covs)
        history.append(new_ll)
        converged = it > 1 and abs(new_ll - loglik) < config.tol * abs(new_ll)
        loglik = new_ll
        if converged or it == config.max_iter:
            break
        weights, means, covs = m_step(resp, point_logdens)
    return weights, means, covs, resp, loglik, it, converged, history


def fit_gmm(y, g, cov_structure="full", seed=0, config=None):
    """Fit a ``g``-component Gaussian mixture by EM.

    Parameters
    ----------
    y : (n, d) array
    g : int
        Number of components.
    cov_structure : {"full", "diagonal", "spherical"}
    seed : int
        Seed for k-means++ initialisation; the fit is deterministic given it.
    config : EmConfig, optional

    Returns
    -------
    model : GmmModel
        Best of ``config.n_starts`` restarts by log-likelihood.
    responsibilities : (n, g) array
    """
    config = config or EmConfig()
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n, d = y.shape
    if cov_structure not in COV_STRUCTURES:
        raise RpecluError(f"unknown covariance structure {cov_structure!r}")
    if g < 1 or d < 1:
        raise InfeasibleError(f"need g >= 1 and d >= 1, got g={g}, d={d}")
    if n < g:
        raise InfeasibleError(f"n={n} observations cannot support g={g} components")

    scale = float(np.mean(np.var(y, axis=0)))
    abs_floor = 1e-12 * scale if scale > 0 else 1e-12
    rng = np.random.default_rng(seed)
    best = None
    successes = 0
    attempts = 0
    while successes < config.n_starts and attempts < 3 * config.n_starts:
        attempts += 1
        try:
            result = _run_em(y, g, cov_structure, rng, config, abs_floor)
        except _Degenerate as exc:
            logger.debug("EM start %d abandoned: %s", attempts, exc)
            continue
        successes += 1
        if best is None or result[4] > best[4]:
            best = result
    if best is None:
        raise FitFailureError(f"EM degenerate in all {attempts} starts")

    weights, means, covs, resp, loglik, it, converged, history = best
    model = GmmModel(
        weights=weights,
        means=means,
        covariances=covs,
        loglik=loglik,
        q_y=n_free_params(g, d, cov_structure),
        cov_structure=cov_structure,
        n_iter=it,
        converged=converged,
        history=history,
    )
    return model, resp


def gmm_loglik(y, model):
    """Log-likelihood of ``y`` under a fitted mixture."""
    _, ll, _ = _e_step(np.asarray(y, dtype=float), model.weights, model.means, model.covariances)
    return ll
